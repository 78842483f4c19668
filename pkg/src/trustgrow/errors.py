"""Exception types shared across the package."""


class TrustGrowError(Exception):
    """Base class for all package-specific errors."""


class InputError(TrustGrowError, ValueError):
    """Malformed or out-of-contract input."""


class ScaleError(TrustGrowError):
    """An exact computation was requested beyond its enumeration limit."""


class ConvergenceError(TrustGrowError):
    """An iterative solver hit its iteration cap before converging."""


class LedgerConsistencyError(TrustGrowError):
    """Identity labels contradict the trust edges they are paired with."""


class UndefinedMetricError(TrustGrowError):
    """A ratio metric has a zero denominator and no defined value."""


class InfeasiblePolicyError(TrustGrowError):
    """Policy parameters that rule out any community growth."""
