"""Input validation helpers used by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def as_complex_matrix(X, name: str = "X", allow_nan: bool = False) -> np.ndarray:
    """Coerce to a 2-D complex128 array and check finiteness.

    With ``allow_nan=True``, NaN entries are permitted (they mark missing
    values), but infinities are still rejected.
    """
    A = np.asarray(X, dtype=np.complex128)
    if A.ndim != 2:
        raise ParameterError(f"{name} must be a 2-D array, got ndim={A.ndim}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise ParameterError(f"{name} must be non-empty, got shape {A.shape}")
    if allow_nan:
        if np.isinf(A.real).any() or np.isinf(A.imag).any():
            raise ParameterError(f"{name} contains infinite entries")
    elif not np.isfinite(A).all():
        raise ParameterError(f"{name} contains non-finite entries")
    return A


def as_complex_vector(y, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size == 0:
        raise ParameterError(f"{name} must be non-empty")
    if not np.isfinite(y).all():
        raise ParameterError(f"{name} contains non-finite entries")
    return y


def check_damping(r: float, name: str = "r") -> float:
    r = float(r)
    if not 0.0 < r <= 1.0:
        raise ParameterError(f"{name} must lie in (0, 1], got {r}")
    return r


def check_frequency(f: float, name: str = "f") -> float:
    f = float(f)
    if not 0.0 <= f < 1.0:
        raise ParameterError(f"{name} must lie in [0, 1), got {f}")
    return f


def check_positive_int(n, name: str = "n") -> int:
    n = int(n)
    if n < 1:
        raise ParameterError(f"{name} must be a positive integer, got {n}")
    return n
