"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its valid domain or dimensions are inconsistent."""


class RankMismatchError(RuntimeError):
    """The numerical rank of a matrix does not match the requested rank."""


class EstimationError(RuntimeError):
    """An estimator could not produce a meaningful result (e.g. rank loss)."""
