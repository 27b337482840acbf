"""SVD-based subspace machinery and the classical estimator family.

Covers the sample autocorrelation matrix, truncated SVDs, signal/noise
subspace splits, the undamped pseudospectrum, the damped 2-D imaging
function, the zero-filled missing-data baseline, and ESPRIT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, ParameterError
from .signal_model import SpectralParams, make_atom
from .validation import as_complex_matrix, as_complex_vector, check_positive_int

SPECTRUM_CAP = 1e15  # reciprocal-floor for pseudospectrum/imaging values


@dataclass(frozen=True)
class SvdFactors:
    """Truncated SVD: U (M x p), singular values s (p,), V (N x p)."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.conj().T


@dataclass(frozen=True)
class SubspacePair:
    """Orthonormal signal (M x K) and noise (M x (M-K)) bases."""

    signal: np.ndarray
    noise: np.ndarray

    @property
    def k(self) -> int:
        return self.signal.shape[1]


def truncated_svd(x, k: int) -> SvdFactors:
    """Best rank-``k`` factors of ``x`` (Eckart-Young optimal)."""
    x = as_complex_matrix(x)
    k = int(k)
    if not 1 <= k <= min(x.shape):
        raise ParameterError(f"k must lie in [1, {min(x.shape)}], got {k}")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    return SvdFactors(u[:, :k], s[:k], vh[:k].conj().T)


def estimate_rank(x, gap_ratio: float = 1e3) -> int:
    """Heuristic rank from the largest singular-value gap.

    Returns the first index where s[i] / s[i+1] exceeds ``gap_ratio``; falls
    back to the count of singular values above machine-scale noise.  Only a
    convenience: all estimators in this package take the model order K as an
    input.
    """
    s = np.linalg.svd(as_complex_matrix(x), compute_uv=False)
    if s[0] == 0:
        return 0
    for i in range(s.size - 1):
        if s[i + 1] == 0 or s[i] / s[i + 1] > gap_ratio:
            return i + 1
    return int(np.sum(s > s[0] * np.finfo(float).eps * max(x.shape)))


def sample_autocorrelation(y, m: int) -> np.ndarray:
    """Windowed sample autocorrelation (1/(L-M+1)) sum_t y_t y_t^H.

    ``y_t`` is the length-``m`` snapshot starting at t; requires L > m.
    Implemented directly from the snapshot sum (independently of the Hankel
    construction it is algebraically equal to).
    """
    y = as_complex_vector(y)
    m = check_positive_int(m, "m")
    if y.size <= m:
        raise ParameterError(f"need signal length > m, got {y.size} <= {m}")
    n_snap = y.size - m + 1
    snaps = np.lib.stride_tricks.sliding_window_view(y, m).T  # m x n_snap
    return (snaps @ snaps.conj().T) / n_snap


def subspace_split(x, k: int) -> SubspacePair:
    """Signal/noise split from the left singular vectors of ``x``."""
    x = as_complex_matrix(x)
    if not 1 <= k < x.shape[0]:
        raise ParameterError(f"k must lie in [1, {x.shape[0] - 1}], got {k}")
    u = np.linalg.svd(x, full_matrices=True)[0]
    return SubspacePair(signal=u[:, :k], noise=u[:, k:])


def mmv_music(y, k: int) -> SubspacePair:
    """Subspace split of a multi-channel data matrix."""
    return subspace_split(y, k)


def mn_music(y_masked, k: int) -> SubspacePair:
    """Subspace split of a zero-filled partially observed matrix.

    This is the direct-SVD missing-data baseline; it is provided because it
    is the natural (and empirically failing) naive approach.
    """
    y = as_complex_matrix(y_masked)
    if not np.any(y):
        raise ParameterError("masked matrix is identically zero (empty mask)")
    return subspace_split(y, k)


def music_spectrum(noise_basis, f_grid) -> np.ndarray:
    """Undamped pseudospectrum 1 / ||U_n^H a(f)||^2 over ``f_grid``.

    Values are capped at 1e15 (reciprocal-floor) so exact orthogonality does
    not produce infinities.
    """
    un = as_complex_matrix(noise_basis, "noise_basis")
    f_grid = np.atleast_1d(np.asarray(f_grid, dtype=float))
    if f_grid.size == 0:
        raise ParameterError("f_grid must be nonempty")
    m = un.shape[0]
    t = np.arange(m)[:, None]
    atoms = np.exp(2j * np.pi * t * f_grid[None, :]) / np.sqrt(m)
    denom = np.sum(np.abs(un.conj().T @ atoms) ** 2, axis=0)
    return np.where(denom < 1.0 / SPECTRUM_CAP, SPECTRUM_CAP, 1.0 / denom)


def dmusic_imaging(noise_basis, r_grid, f_grid) -> np.ndarray:
    """Imaging function 1 / ||U_n^H a(r, f)|| on the (r, f) grid.

    Returns a |r_grid| x |f_grid| real matrix, capped at 1e15.
    """
    un = as_complex_matrix(noise_basis, "noise_basis")
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    f_grid = np.atleast_1d(np.asarray(f_grid, dtype=float))
    m = un.shape[0]
    t = np.arange(m)
    fourier = np.exp(2j * np.pi * t[:, None] * f_grid[None, :])
    out = np.empty((r_grid.size, f_grid.size))
    for i, r in enumerate(r_grid):
        damp = make_atom(r, 0.0, m)  # s * r^t, zero phase
        block = (un * damp[:, None]).conj().T @ fourier
        norms = np.sqrt(np.sum(np.abs(block) ** 2, axis=0))
        out[i] = np.where(norms < 1.0 / SPECTRUM_CAP, SPECTRUM_CAP, 1.0 / norms)
    return out


def esprit(x, k: int) -> SpectralParams:
    """Rotational-invariance estimates of (r_k, f_k) from a data matrix.

    The top-``k`` left singular subspace is propagated one sample forward via
    a least-squares shift operator; its eigenvalues lambda give
    r = |lambda|, f = arg(lambda) / 2 pi.  Amplitudes are left unset.
    """
    x = as_complex_matrix(x)
    k = int(k)
    if x.shape[0] < k + 1:
        raise ParameterError(f"need at least k+1={k + 1} rows, got {x.shape[0]}")
    if k < 1:
        raise ParameterError("k must be positive")
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0 or (k <= s.size - 1 and s[k - 1] / s[0] < 1e-12) or k > s.size:
        raise EstimationError(f"data matrix has numerical rank below k={k}")
    us = u[:, :k]
    psi, _, rank, _ = np.linalg.lstsq(us[:-1], us[1:], rcond=None)
    if rank < k:
        raise EstimationError("shift-invariance system is rank deficient")
    lam = np.linalg.eigvals(psi)
    r = np.abs(lam)
    # Tiny overshoots past r = 1 arise from roundoff on undamped modes.
    over = (r > 1.0) & (r <= 1.0 + 1e-6)
    r[over] = 1.0
    if np.any(r > 1.0) or np.any(r <= 0.0):
        raise EstimationError("shift eigenvalues outside the valid damping range")
    f = np.mod(np.angle(lam) / (2.0 * np.pi), 1.0)
    return SpectralParams(r=r, f=f)
