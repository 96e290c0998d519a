"""Projected-area extremals of the central (gnomonic) projection.

Library for computing areas of centrally projected regions on the unit sphere
S^n and the hyperboloid model of H^n, locating extremal tangent points, and
checking the area-matched cap comparisons numerically.
"""

from .errors import (
    BudgetExceededError,
    DirectionMismatchError,
    GnomonError,
    InfeasiblePointError,
    InfeasibleTargetError,
    InvalidRegionError,
    MaxItersExceededError,
    NoAdmissibleCapError,
    NoAdmissiblePointError,
    NonFiniteIntegrandError,
    NotInOpenHemisphereError,
    OutsideHemisphereError,
    RejectionStallError,
)
from .geometry import (
    HyperPoint,
    SpherePoint,
    TangentVec,
    dist_hyp,
    dist_sphere,
    exp_hyp,
    exp_sphere,
    log_hyp,
    log_sphere,
    lorentz_dot,
    project_tangent_hyp,
    project_tangent_sphere,
    tangent_frame,
)
from .regions import (
    Cap,
    HCap,
    HIntervalSet,
    HPolygon,
    HRegionUnion,
    RegionUnion,
    SphericalPolygon,
    cap_measure,
    contains,
    contains_mask,
    dump_region,
    enclosing_cap,
    feasibility_margin,
    hcap_measure,
    load_region,
    measure,
    parse_region,
    random_hregion,
    random_region,
    region_from_json,
    region_to_json,
    sample,
    unit_ball_volume,
)
from .projection import (
    ChartPoint,
    ConicImage,
    cap_image_area,
    cap_image_conic,
    gnomonic_fwd,
    gnomonic_inv,
    hyp_fwd,
    hyp_inv,
    hyp_polygon_image_area,
    jacobian_sphere,
    polygon_image_area,
)
from .quadrature import (
    EvalResult,
    QuadratureSpec,
    VecEvalResult,
    integrate,
    integrate_intervals,
    integrate_vector,
)
from .functional import (
    PotentialSpec,
    area_functional,
    critical_residual,
    gradient,
    h_area_functional,
    h_critical_residual,
    h_gradient,
    potential_functional,
    potential_gradient,
    second_derivative_dir,
)
from .optimize import (
    ConvexityReport,
    CriticalPoint,
    OptimizerOpts,
    maximize_hyperbolic,
    minimize_sphere,
    verify_convexity,
)
from .compare import (
    ComparisonReport,
    compare_hyperbolic_max,
    compare_potential,
    compare_sphere_min,
    hcap_max_area,
    cap_min_area,
    hyperbolic_max_ensemble,
    matched_cap,
    matched_hcap,
    potential_ensemble,
    reports_jsonl,
    sphere_min_ensemble,
)

__version__ = "0.1.0"
