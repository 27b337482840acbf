"""Estimator classes with a scikit-learn style fit/predict surface.

Every estimator consumes a data matrix (or scalar signal) and exposes
``dampings_`` / ``frequencies_`` after ``fit``.  They all reduce to the same
primitive: evaluate ``||Q^H a(r, f)||`` for a method-specific matrix Q and
localize its peaks, which is precisely what makes the subspace and
nuclear-norm views of the problem interchangeable.

The module-level ``*_peaks`` helpers carry the shared pipelines so that the
experiment harness can reuse a single completion solve across several
two-step methods.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .anm import anm_dual_poly, anm_solve, default_anm_options
from .dualpoly import (
    PeakSet,
    Peak,
    RFGrid,
    _refine_max_2d,
    eval_dual_poly,
    false_peak_filter,
    locate_peaks,
    poly_value_at,
    top_local_maxima,
)
from .errors import EstimationError, ParameterError
from .nnm import (
    DualCertificate,
    SolverOptions,
    full_data_dual,
    nnm_complete,
    nnm_denoise,
    subspace_certificate,
)
from .signal_model import SampleMask, make_hankel
from .subspace import estimate_rank, sample_autocorrelation, subspace_split, esprit
from .validation import as_complex_matrix, as_complex_vector

DEFAULT_THRESHOLD = 1.0 - 1e-4       # pre-refinement level-set threshold
DEFAULT_POST_THRESHOLD = 1.0 - 1e-6  # peaks must regain this after refinement


def _resolve_mask(x: np.ndarray, mask) -> tuple[np.ndarray, SampleMask]:
    """Accept SampleMask/bool-array/None; None treats NaN entries as missing."""
    if mask is None:
        observed = ~np.isnan(x)
        m = SampleMask.from_bool(observed)
        x = np.where(observed, x, 0.0)
        return x, m
    if isinstance(mask, SampleMask):
        return x, mask
    return x, SampleMask.from_bool(np.asarray(mask, dtype=bool))


def certificate_peaks(cert: DualCertificate, k: int | None, grid: RFGrid,
                      threshold: float = DEFAULT_THRESHOLD,
                      post_threshold: float = DEFAULT_POST_THRESHOLD) -> PeakSet:
    """Level-set localization of a dual polynomial with sub-grid refinement.

    Grid cells reaching ``threshold`` are clustered and refined; refined
    peaks must reach ``post_threshold`` to survive (iterative-solver
    certificates are slightly inexact on the grid, and refinement recovers
    the margin).
    """
    values = eval_dual_poly(cert, grid)
    peaks = locate_peaks(values, grid, threshold, cert=cert, expected_k=k)
    kept = [p for p in peaks if p.value >= post_threshold]
    mismatch = k is not None and len(kept) != k
    return PeakSet(kept, count_mismatch=mismatch)


def md_music_peaks(cert: DualCertificate, observed, mask: SampleMask,
                   k: int | None, grid: RFGrid,
                   threshold: float = DEFAULT_THRESHOLD,
                   post_threshold: float = DEFAULT_POST_THRESHOLD) -> PeakSet:
    """Missing-data localization: level-set peaks plus least-squares pruning
    of false peaks (which can appear when the data matrix is not exactly
    recovered)."""
    peaks = certificate_peaks(cert, None, grid, threshold, post_threshold)
    if len(peaks) and not mask.is_full():
        peaks = false_peak_filter(peaks, observed, mask)
    mismatch = k is not None and len(peaks) != k
    return PeakSet(list(peaks.peaks), count_mismatch=mismatch)


def music_peaks_from_matrix(x, k: int, grid: RFGrid) -> PeakSet:
    """Classical MUSIC-style 2-D localization: the K largest local maxima of
    the signal-space correlation ``||U_s^H a(r, f)||`` of a data matrix."""
    pair = subspace_split(x, k)
    values = eval_dual_poly(pair.signal, grid)
    return top_local_maxima(values, grid, k, cert=pair.signal)


class _PeakAttrsMixin:
    """Shared post-fit attribute handling."""

    def _store_peaks(self, peaks: PeakSet):
        peaks = peaks.sorted()
        self.peaks_ = peaks
        self.dampings_ = peaks.r
        self.frequencies_ = peaks.f
        self.n_modes_ = len(peaks)
        return self

    def fit_predict(self, X, **fit_params) -> np.ndarray:
        """Fit and return the estimated (damping, frequency) pairs, one row
        per recovered mode."""
        self.fit(X, **fit_params)
        return np.column_stack([self.dampings_, self.frequencies_])


def _grid_for(grid, m: int) -> RFGrid:
    return grid if grid is not None else RFGrid.default(m)


class NNMusic(BaseEstimator, _PeakAttrsMixin):
    """Full-data damped spectral estimation via the nuclear-norm dual.

    Computes the closed-form dual certificate U V^H of the (trivially
    constrained) nuclear norm problem at the data matrix and localizes the
    level-1 set of its polynomial.  Equivalent to damped MUSIC on the same
    matrix.

    Parameters
    ----------
    n_components : int or None
        Model order K; estimated from the singular-value gap when None.
    denoise_lambda : float or None
        When set, the data matrix is first passed through the closed-form
        nuclear-norm denoiser with this regularization weight, and peaks are
        picked as the K largest local maxima (the noisy-case demo).
    """

    def __init__(self, n_components=None, grid=None,
                 threshold=DEFAULT_THRESHOLD, post_threshold=DEFAULT_POST_THRESHOLD,
                 denoise_lambda=None):
        self.n_components = n_components
        self.grid = grid
        self.threshold = threshold
        self.post_threshold = post_threshold
        self.denoise_lambda = denoise_lambda

    def fit(self, X, y=None):
        x = as_complex_matrix(X)
        k = self.n_components
        grid = _grid_for(self.grid, x.shape[0])
        if self.denoise_lambda is not None:
            self.estimated_data_, cert = nnm_denoise(x, self.denoise_lambda)
            self.certificate_ = cert
            values = eval_dual_poly(cert, grid)
            k_eff = k if k is not None else max(estimate_rank(self.estimated_data_), 1)
            peaks = top_local_maxima(values, grid, k_eff, cert=cert)
        else:
            k_eff = k if k is not None else estimate_rank(x)
            cert = full_data_dual(x, k_eff)
            self.certificate_ = cert
            self.estimated_data_ = x
            peaks = certificate_peaks(cert, k_eff, grid,
                                      self.threshold, self.post_threshold)
        return self._store_peaks(peaks)


class MDMusic(BaseEstimator, _PeakAttrsMixin):
    """One-step missing-data spectral estimation.

    Solves nuclear-norm matrix completion on the observed entries and reads
    the parameters directly off the dual certificate's polynomial, so exact
    parameter recovery is possible even when the completed matrix is not
    exact.  Missing entries can be passed as NaN or through ``mask``.
    """

    def __init__(self, n_components=None, grid=None,
                 threshold=DEFAULT_THRESHOLD, post_threshold=DEFAULT_POST_THRESHOLD,
                 solver_options=None):
        self.n_components = n_components
        self.grid = grid
        self.threshold = threshold
        self.post_threshold = post_threshold
        self.solver_options = solver_options

    def fit(self, X, y=None, mask=None):
        x = as_complex_matrix(X, allow_nan=True)
        x, mask = _resolve_mask(x, mask)
        opts = self.solver_options or SolverOptions()
        xhat, cert, report = nnm_complete(x, mask, opts)
        self.estimated_data_ = xhat
        self.certificate_ = cert
        self.report_ = report
        grid = _grid_for(self.grid, x.shape[0])
        peaks = md_music_peaks(cert, x, mask, self.n_components, grid,
                               self.threshold, self.post_threshold)
        return self._store_peaks(peaks)


class NNMPlusMusic(BaseEstimator, _PeakAttrsMixin):
    """Two-step baseline: complete the matrix, then run MUSIC on the result.

    The completed matrix is truncated to rank K and the K largest local
    maxima of the signal-space correlation are taken as estimates.
    """

    def __init__(self, n_components=1, grid=None, solver_options=None):
        self.n_components = n_components
        self.grid = grid
        self.solver_options = solver_options

    def fit(self, X, y=None, mask=None):
        x = as_complex_matrix(X, allow_nan=True)
        x, mask = _resolve_mask(x, mask)
        opts = self.solver_options or SolverOptions()
        xhat, cert, report = nnm_complete(x, mask, opts)
        self.estimated_data_ = xhat
        self.report_ = report
        grid = _grid_for(self.grid, x.shape[0])
        return self._store_peaks(
            music_peaks_from_matrix(xhat, self.n_components, grid)
        )


class NNMPlusEsprit(BaseEstimator, _PeakAttrsMixin):
    """Two-step baseline: complete the matrix, then run ESPRIT on it."""

    def __init__(self, n_components=1, solver_options=None):
        self.n_components = n_components
        self.solver_options = solver_options

    def fit(self, X, y=None, mask=None):
        x = as_complex_matrix(X, allow_nan=True)
        x, mask = _resolve_mask(x, mask)
        opts = self.solver_options or SolverOptions()
        xhat, cert, report = nnm_complete(x, mask, opts)
        self.estimated_data_ = xhat
        self.report_ = report
        try:
            est = esprit(xhat, self.n_components)
            peaks = PeakSet([Peak(r, f, float("nan"))
                             for r, f in zip(est.r, est.f)])
        except EstimationError:
            peaks = PeakSet([], count_mismatch=True)
        return self._store_peaks(peaks)


class MNMusic(BaseEstimator, _PeakAttrsMixin):
    """Direct-SVD missing-data baseline (zero-filled data matrix).

    Performs the subspace split on the zero-filled observations; provided as
    the baseline that fails under missing data.
    """

    def __init__(self, n_components=1, grid=None):
        self.n_components = n_components
        self.grid = grid

    def fit(self, X, y=None, mask=None):
        x = as_complex_matrix(X, allow_nan=True)
        x, mask = _resolve_mask(x, mask)
        x = mask.project(x)
        grid = _grid_for(self.grid, x.shape[0])
        return self._store_peaks(
            music_peaks_from_matrix(x, self.n_components, grid)
        )


class EspritEstimator(BaseEstimator, _PeakAttrsMixin):
    """Rotational-invariance estimation on a full data matrix."""

    def __init__(self, n_components=1):
        self.n_components = n_components

    def fit(self, X, y=None):
        x = as_complex_matrix(X)
        est = esprit(x, self.n_components)
        return self._store_peaks(
            PeakSet([Peak(r, f, float("nan")) for r, f in zip(est.r, est.f)])
        )


class AnmEstimator(BaseEstimator, _PeakAttrsMixin):
    """Atomic norm minimization baseline (undamped model, frequencies only).

    Estimated frequencies are the level-1 crossings of the dual polynomial;
    reported dampings are fixed at 1 since the model has none.  The default
    detection thresholds are looser than the nuclear-norm estimators' to
    match the baseline solver's tolerance.
    """

    def __init__(self, n_components=None, threshold=1.0 - 1e-3,
                 post_threshold=1.0 - 3e-4, f_step=None,
                 solver_options=None):
        self.n_components = n_components
        self.threshold = threshold
        self.post_threshold = post_threshold
        self.f_step = f_step
        self.solver_options = solver_options

    def fit(self, X, y=None, mask=None):
        x = as_complex_matrix(X, allow_nan=True)
        x, mask = _resolve_mask(x, mask)
        opts = self.solver_options or default_anm_options()
        xhat, u, cert, report = anm_solve(x, mask, opts)
        self.estimated_data_ = xhat
        self.toeplitz_ = u
        self.certificate_ = cert
        self.report_ = report
        m = x.shape[0]
        step = self.f_step if self.f_step is not None else 1.0 / (16 * m)
        f_grid = np.arange(0.0, 1.0, step)
        vals = anm_dual_poly(cert, f_grid)
        peaks = self._localize(cert.Q, f_grid, vals)
        mismatch = (self.n_components is not None
                    and len(peaks) != self.n_components)
        return self._store_peaks(PeakSet(peaks, count_mismatch=mismatch))

    def _localize(self, q, f_grid, vals) -> list[Peak]:
        above = vals >= self.threshold
        if not above.any():
            return []
        # group threshold crossings into circularly contiguous runs
        idx = np.flatnonzero(above)
        breaks = np.flatnonzero(np.diff(idx) > 1)
        runs = np.split(idx, breaks + 1)
        if len(runs) > 1 and idx[0] == 0 and idx[-1] == vals.size - 1:
            runs[0] = np.concatenate([runs[-1], runs[0]])
            runs = runs[:-1]
        step = f_grid[1] - f_grid[0]
        peaks = []
        for run in runs:
            j = run[np.argmax(vals[run])]
            _, f, v = _refine_max_2d(
                lambda rr, ff: poly_value_at(q, 1.0, ff),
                1.0, float(f_grid[j]), 0.0, step,
            )
            if v >= self.post_threshold:
                peaks.append(Peak(1.0, f, v))
        return peaks


class Music(BaseEstimator, _PeakAttrsMixin):
    """Classical scalar-signal MUSIC (undamped frequencies).

    Builds the windowed sample autocorrelation matrix of the signal, splits
    signal and noise subspaces, and takes the K largest local maxima of the
    pseudospectrum; estimates are refined off-grid.  Dampings are reported
    as 1.
    """

    def __init__(self, n_components=1, window=None, f_step=None):
        self.n_components = n_components
        self.window = window
        self.f_step = f_step

    def fit(self, y):
        y = as_complex_vector(y)
        m = self.window if self.window is not None else y.size // 2
        if y.size <= m:
            raise ParameterError("signal is too short for the chosen window")
        corr = sample_autocorrelation(y, m)
        pair = subspace_split(corr, self.n_components)
        step = self.f_step if self.f_step is not None else 1.0 / (16 * m)
        f_grid = np.arange(0.0, 1.0, step)
        vals = np.sqrt(
            np.sum(
                np.abs(
                    pair.signal.conj().T
                    @ (np.exp(2j * np.pi * np.arange(m)[:, None] * f_grid) / np.sqrt(m))
                )
                ** 2,
                axis=0,
            )
        )[None, :]
        grid = RFGrid(np.array([1.0]), f_grid)
        peaks = top_local_maxima(vals, grid, self.n_components, refine=False)
        refined = [
            Peak(1.0, *_refine_and_value(pair.signal, p.f, step)) for p in peaks
        ]
        return self._store_peaks(PeakSet(refined, peaks.count_mismatch))


def _refine_and_value(q, f0, step):
    _, f, v = _refine_max_2d(
        lambda rr, ff: poly_value_at(q, 1.0, ff), 1.0, f0, 0.0, step
    )
    return f, v


class DampedMusic(BaseEstimator, _PeakAttrsMixin):
    """Scalar-signal damped MUSIC via the Hankel matrix.

    Forms the (L+1)/2-row Hankel matrix of the signal and localizes the K
    largest local maxima of the 2-D imaging function over the
    damping-frequency plane.
    """

    def __init__(self, n_components=1, hankel_rows=None, grid=None):
        self.n_components = n_components
        self.hankel_rows = hankel_rows
        self.grid = grid

    def fit(self, y):
        y = as_complex_vector(y)
        m = self.hankel_rows if self.hankel_rows is not None else (y.size + 1) // 2
        h = make_hankel(y, m)
        grid = _grid_for(self.grid, m)
        return self._store_peaks(
            music_peaks_from_matrix(h, self.n_components, grid)
        )
