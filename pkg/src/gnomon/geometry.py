"""Points, tangent vectors and exact metric primitives on S^n and H^n.

Coordinates live in R^{n+1}.  Spherical points have unit Euclidean norm.
Hyperbolic points sit on the upper sheet <x,x> = -1 of the Minkowski form
<u,v> = u_1 v_1 + ... + u_n v_n - u_{n+1} v_{n+1} (last coordinate timelike).

The dimension n is a runtime property of every point; mixing dimensions or
manifolds in a single operation is a hard error.  All values are immutable
after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpherePoint",
    "HyperPoint",
    "TangentVec",
    "lorentz_dot",
    "dist_sphere",
    "exp_sphere",
    "log_sphere",
    "project_tangent_sphere",
    "dist_hyp",
    "exp_hyp",
    "log_hyp",
    "project_tangent_hyp",
    "tangent_frame",
]

# constructors reject coordinates farther than this from the manifold,
# then renormalize to machine precision
_INPUT_TOL = 1e-6
# base/vector orthogonality required of a TangentVec, relative to |vec|
_ORTHO_TOL = 1e-10
# tangent projections smaller than this relative to the input snap to zero
_RADIAL_SNAP = 1e-13


def lorentz_dot(u, v):
    """Minkowski inner product; broadcasts over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u[..., :-1] * v[..., :-1], axis=-1) - u[..., -1] * v[..., -1]


def _coerce_coords(coords, what):
    c = np.atleast_1d(np.asarray(coords, dtype=float))
    if c.ndim != 1 or c.size < 2:
        raise ValueError(f"{what} needs a flat coordinate array of length >= 2")
    if not np.all(np.isfinite(c)):
        raise ValueError(f"{what} coordinates must be finite")
    return c


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """Unit vector in R^{n+1}; renormalized on construction."""

    coords: np.ndarray

    def __post_init__(self):
        c = _coerce_coords(self.coords, "sphere point")
        nrm = float(np.linalg.norm(c))
        if abs(nrm - 1.0) > _INPUT_TOL:
            raise ValueError(f"coordinates are not on the unit sphere (norm {nrm:.6g})")
        c = c / nrm
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size - 1

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.coords)

    def __repr__(self):
        return f"SpherePoint({self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class HyperPoint:
    """Point on the upper hyperboloid sheet, re-projected on construction.

    Far from the origin the Lorentz form is a difference of huge squares, so
    the on-manifold check is relative to the coordinate scale and the
    normalization recomputes the time coordinate as hypot(1, |spatial|)
    rather than dividing by sqrt(-<x,x>).
    """

    coords: np.ndarray

    def __post_init__(self):
        c = _coerce_coords(self.coords, "hyperbolic point")
        if c[-1] <= 0.0:
            raise ValueError("hyperbolic point must have positive last coordinate")
        q = float(lorentz_dot(c, c))
        scale = max(1.0, float(c @ c))
        if abs(q + 1.0) > _INPUT_TOL * scale:
            raise ValueError(f"coordinates are not on the hyperboloid (<x,x> = {q:.6g})")
        s = float(np.linalg.norm(c[:-1]))
        c = np.concatenate([c[:-1], [math.hypot(1.0, s)]])
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size - 1

    def __repr__(self):
        return f"HyperPoint({self.coords.tolist()})"


def _is_sphere(p):
    return isinstance(p, SpherePoint)


def _check_pair(x, y):
    if type(x) is not type(y):
        raise ValueError("operands live on different manifolds")
    if x.n != y.n:
        raise ValueError(f"operands have different dimensions ({x.n} vs {y.n})")


@dataclass(frozen=True, eq=False)
class TangentVec:
    """Vector attached to a base point and orthogonal to it in the ambient metric."""

    base: SpherePoint | HyperPoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.vec, dtype=float)).copy()
        if v.shape != self.base.coords.shape:
            raise ValueError("tangent vector shape does not match its base point")
        scale = float(np.linalg.norm(v))
        if scale > 0.0:
            if _is_sphere(self.base):
                defect = abs(float(self.base.coords @ v))
                tol = _ORTHO_TOL * scale
            else:
                defect = abs(float(lorentz_dot(self.base.coords, v)))
                # the form loses eps * |base| * |vec| to cancellation far out
                tol = _ORTHO_TOL * scale * max(1.0, float(np.linalg.norm(self.base.coords)))
            if defect > tol:
                raise ValueError(
                    f"vector is not tangent at its base (radial defect {defect:.3g})"
                )
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    def norm(self) -> float:
        """Riemannian length (Euclidean on S^n, Lorentz-induced on H^n)."""
        if _is_sphere(self.base):
            return float(np.linalg.norm(self.vec))
        return math.sqrt(max(float(lorentz_dot(self.vec, self.vec)), 0.0))

    def scaled(self, a: float) -> "TangentVec":
        return TangentVec(self.base, a * self.vec)

    def __repr__(self):
        return f"TangentVec(base={self.base!r}, vec={self.vec.tolist()})"


def _check_based(x, v: TangentVec):
    if type(v.base) is not type(x) or v.base.n != x.n:
        raise ValueError("tangent vector is based on a different manifold/dimension")
    if not np.allclose(v.base.coords, x.coords, rtol=0.0, atol=1e-12):
        raise ValueError("tangent vector is not based at the given point")


# ---------------------------------------------------------------------------
# spherical primitives

def dist_sphere(x: SpherePoint, y: SpherePoint) -> float:
    """Geodesic distance on S^n in radians, arccos of the clamped inner product."""
    _check_pair(x, y)
    return float(np.arccos(np.clip(float(x.coords @ y.coords), -1.0, 1.0)))


def exp_sphere(x: SpherePoint, v: TangentVec) -> SpherePoint:
    """Geodesic step: cos|v| x + sin|v| v/|v|; identity for |v| = 0."""
    _check_based(x, v)
    t = v.norm()
    if t == 0.0:
        return x
    return SpherePoint(math.cos(t) * x.coords + math.sin(t) * (v.vec / t))


def log_sphere(x: SpherePoint, y: SpherePoint) -> TangentVec:
    """Inverse of exp_sphere; zero vector for coincident or antipodal points."""
    _check_pair(x, y)
    d = dist_sphere(x, y)
    u = y.coords - float(x.coords @ y.coords) * x.coords
    nu = float(np.linalg.norm(u))
    if nu < 1e-15 or d == 0.0:
        return TangentVec(x, np.zeros_like(x.coords))
    return TangentVec(x, (d / nu) * u)


def project_tangent_sphere(x: SpherePoint, w) -> TangentVec:
    """Orthogonal projection w - (x.w) x onto the tangent space at x."""
    w = np.asarray(w, dtype=float)
    if w.shape != x.coords.shape:
        raise ValueError("vector dimension does not match the point")
    v = w - float(x.coords @ w) * x.coords
    if float(np.linalg.norm(v)) < _RADIAL_SNAP * float(np.linalg.norm(w)):
        return TangentVec(x, np.zeros_like(x.coords))
    # second pass scrubs the roundoff left by the first
    v = v - float(x.coords @ v) * x.coords
    return TangentVec(x, v)


# ---------------------------------------------------------------------------
# hyperbolic primitives

def dist_hyp(x: HyperPoint, y: HyperPoint) -> float:
    """Hyperbolic distance arccosh(-<x,y>), clamped below at 1."""
    _check_pair(x, y)
    return float(np.arccosh(max(-float(lorentz_dot(x.coords, y.coords)), 1.0)))


def exp_hyp(x: HyperPoint, v: TangentVec) -> HyperPoint:
    """Geodesic step cosh|v| x + sinh|v| v/|v| with |v| from the tangent metric."""
    _check_based(x, v)
    t = v.norm()
    if t == 0.0:
        return x
    return HyperPoint(math.cosh(t) * x.coords + math.sinh(t) * (v.vec / t))


def log_hyp(x: HyperPoint, y: HyperPoint) -> TangentVec:
    _check_pair(x, y)
    d = dist_hyp(x, y)
    u = y.coords + float(lorentz_dot(x.coords, y.coords)) * x.coords
    nu = math.sqrt(max(float(lorentz_dot(u, u)), 0.0))
    if nu < 1e-15 or d == 0.0:
        return TangentVec(x, np.zeros_like(x.coords))
    return TangentVec(x, (d / nu) * u)


def project_tangent_hyp(x: HyperPoint, w) -> TangentVec:
    """Lorentz-orthogonal projection w + <x,w> x (valid since <x,x> = -1)."""
    w = np.asarray(w, dtype=float)
    if w.shape != x.coords.shape:
        raise ValueError("vector dimension does not match the point")
    v = w + float(lorentz_dot(x.coords, w)) * x.coords
    if float(np.linalg.norm(v)) < _RADIAL_SNAP * float(np.linalg.norm(w)):
        return TangentVec(x, np.zeros_like(x.coords))
    v = v + float(lorentz_dot(x.coords, v)) * x.coords
    return TangentVec(x, v)


# ---------------------------------------------------------------------------
# tangent frames

def tangent_frame(x: SpherePoint | HyperPoint) -> np.ndarray:
    """Deterministic oriented orthonormal basis of the tangent space at x.

    Rows of the returned (n, n+1) array are Gram-Schmidt images of the standard
    basis vectors (in order, skipping near-dependent ones), orthonormal in the
    tangent metric.  The last row is flipped if needed so that
    det([rows; x]) > 0, giving a consistent orientation across base points.
    """
    c = x.coords
    n = x.n
    sphere = _is_sphere(x)
    rows = []
    for i in range(n + 1):
        e = np.zeros(n + 1)
        e[i] = 1.0
        if sphere:
            u = e - (c[i]) * c
        else:
            u = e + float(lorentz_dot(c, e)) * c
        for r in rows:
            if sphere:
                u = u - float(r @ u) * r
            else:
                u = u - float(lorentz_dot(r, u)) * r
        nsq = float(u @ u) if sphere else float(lorentz_dot(u, u))
        if nsq > 1e-12:
            rows.append(u / math.sqrt(nsq))
        if len(rows) == n:
            break
    if len(rows) != n:
        raise ValueError("failed to build a tangent frame (degenerate point)")
    frame = np.array(rows)
    if np.linalg.det(np.vstack([frame, c])) < 0.0:
        frame[-1] = -frame[-1]
    frame.setflags(write=False)
    return frame
