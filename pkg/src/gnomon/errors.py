"""Exception types with stable machine-readable codes.

`code` is the error name emitted on the CLI's stderr JSON; `exit_code` groups
errors into the documented process exit classes (1 = parse/validation,
2 = infeasibility, 3 = numerical failure).
"""


class GnomonError(Exception):
    code = "error"
    exit_code = 3


class InvalidRegionError(GnomonError):
    code = "invalid-region"
    exit_code = 1


class DirectionMismatchError(GnomonError):
    code = "direction-mismatch"
    exit_code = 1


class OutsideHemisphereError(GnomonError):
    code = "outside-hemisphere"
    exit_code = 2


class InfeasiblePointError(GnomonError):
    code = "infeasible-point"
    exit_code = 2


class NotInOpenHemisphereError(GnomonError):
    code = "not-in-open-hemisphere"
    exit_code = 2


class NoAdmissiblePointError(GnomonError):
    code = "no-admissible-point"
    exit_code = 2


class NoAdmissibleCapError(GnomonError):
    code = "no-admissible-cap"
    exit_code = 2


class RejectionStallError(GnomonError):
    code = "rejection-stall"
    exit_code = 3


class InfeasibleTargetError(GnomonError):
    code = "infeasible-target"
    exit_code = 3


class BudgetExceededError(GnomonError):
    code = "budget-exceeded"
    exit_code = 3


class NonFiniteIntegrandError(GnomonError):
    code = "non-finite-integrand"
    exit_code = 3


class MaxItersExceededError(GnomonError):
    """Carries the best iterate seen so far in `best` (a CriticalPoint or None)."""

    code = "max-iters-exceeded"
    exit_code = 3

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
