"""Dual-polynomial evaluation over the damping-frequency plane, peak
localization at the level-1 set, sub-grid refinement, and false-peak pruning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .nnm import DualCertificate
from .signal_model import SampleMask, make_atom, _atom_scale, freq_distance
from .validation import as_complex_matrix

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RFGrid:
    """Evaluation grid over damping (r) and frequency (f)."""

    r_values: np.ndarray
    f_values: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r_values, dtype=float))
        f = np.atleast_1d(np.asarray(self.f_values, dtype=float))
        if r.size == 0 or f.size == 0:
            raise ParameterError("grid axes must be nonempty")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(f) <= 0):
            raise ParameterError("grid axes must be strictly increasing")
        if r[0] <= 0 or r[-1] > 1 or f[0] < 0 or f[-1] >= 1:
            raise ParameterError("grid must satisfy r in (0,1], f in [0,1)")
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "f_values", f)

    @property
    def r_step(self) -> float:
        return float(self.r_values[1] - self.r_values[0]) if self.r_values.size > 1 else 0.002

    @property
    def f_step(self) -> float:
        return float(self.f_values[1] - self.f_values[0]) if self.f_values.size > 1 else 1e-3

    @classmethod
    def default(cls, m: int, r_min: float = 0.75, r_max: float = 1.0,
                r_step: float = 0.002, f_step: float | None = None) -> "RFGrid":
        """Coarse grid: f spacing 1/(8M) (atom correlation width is ~1/M)."""
        if f_step is None:
            f_step = 1.0 / (8 * m)
        n_r = int(round((r_max - r_min) / r_step))
        r = r_min + r_step * np.arange(n_r + 1)
        f = np.arange(0.0, 1.0 - f_step / 2, f_step)
        return cls(np.clip(r, r_step, 1.0), f)


@dataclass(frozen=True)
class Peak:
    r: float
    f: float
    value: float


@dataclass
class PeakSet:
    """Localized peaks, sorted by (f, r); ``count_mismatch`` is set when an
    expected model order was provided and not matched."""

    peaks: list[Peak] = field(default_factory=list)
    count_mismatch: bool = False

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def sorted(self) -> "PeakSet":
        return PeakSet(
            sorted(self.peaks, key=lambda p: (p.f, p.r)), self.count_mismatch
        )

    @property
    def r(self) -> np.ndarray:
        return np.array([p.r for p in self.peaks])

    @property
    def f(self) -> np.ndarray:
        return np.array([p.f for p in self.peaks])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.peaks])


def _poly_values(q: np.ndarray, r_values, f_values) -> np.ndarray:
    """||Q^H a(r_i, f_j)||_2 for all grid pairs, exploiting separability of
    the atom into a damping profile times a Fourier column."""
    m = q.shape[0]
    t = np.arange(m)
    fourier = np.exp(2j * np.pi * t[:, None] * np.asarray(f_values)[None, :])
    out = np.empty((len(r_values), len(f_values)))
    for i, r in enumerate(r_values):
        damp = _atom_scale(r, m) * r ** t
        block = (q * damp[:, None]).conj().T @ fourier
        out[i] = np.sqrt(np.sum(np.abs(block) ** 2, axis=0))
    return out


def eval_dual_poly(cert: DualCertificate | np.ndarray, grid: RFGrid) -> np.ndarray:
    """Evaluate ||Q^H a(r, f)||_2 on the grid; |r_values| x |f_values|."""
    q = cert.Q if isinstance(cert, DualCertificate) else as_complex_matrix(cert, "Q")
    return _poly_values(q, grid.r_values, grid.f_values)


def poly_value_at(q: np.ndarray, r: float, f: float) -> float:
    a = make_atom(r, f % 1.0, q.shape[0])
    return float(np.linalg.norm(q.conj().T @ a))


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-9):
    """Golden-section maximization on [lo, hi]; returns (x, fn(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def _refine_max_2d(value_fn, r0: float, f0: float, dr: float, df: float,
                   tol: float = 1e-9, passes: int = 4):
    """Alternating per-coordinate golden-section ascent around (r0, f0).

    Brackets start at one grid step per coordinate and shrink every pass; the
    result never has a lower value than the starting point.
    """
    best_r, best_f = float(r0), float(f0)
    best_v = value_fn(best_r, best_f)
    wr, wf = dr, df
    for _ in range(passes):
        if wf > 0:
            lo, hi = best_f - wf, best_f + wf
            x, v = _golden_max(lambda f: value_fn(best_r, f % 1.0), lo, hi, tol)
            if v > best_v:
                best_f, best_v = x % 1.0, v
        if wr > 0:
            lo = max(best_r - wr, 1e-12)
            hi = min(best_r + wr, 1.0)
            x, v = _golden_max(lambda r: value_fn(r, best_f), lo, hi, tol)
            if v > best_v:
                best_r, best_v = x, v
        wr, wf = wr / 8.0, wf / 8.0
    return best_r, best_f, best_v


def refine_peak(cert: DualCertificate | np.ndarray, r0: float, f0: float,
                dr: float = 0.002, df: float | None = None):
    """Sub-grid maximization of the dual polynomial from a starting cell.

    Returns (r, f) clamped to r in (0, 1], f in [0, 1).  The search is a
    derivative-free alternating golden-section; flat regions return the
    starting point.
    """
    q = cert.Q if isinstance(cert, DualCertificate) else as_complex_matrix(cert, "Q")
    if df is None:
        df = 1.0 / (8 * q.shape[0])
    r, f, _ = _refine_max_2d(lambda rr, ff: poly_value_at(q, rr, ff), r0, f0, dr, df)
    return r, f


def _cluster_cells(cells: np.ndarray) -> list[np.ndarray]:
    """Group grid cells into 8-connected components (array of (i, j) rows)."""
    cellset = {tuple(c) for c in cells}
    seen: set[tuple[int, int]] = set()
    clusters = []
    for start in sorted(cellset):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = []
        while stack:
            ci, cj = stack.pop()
            comp.append((ci, cj))
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (ci + di, cj + dj)
                    if nb in cellset and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        clusters.append(np.array(comp))
    return clusters


def _local_max_cells(values: np.ndarray, cells, wrap_f: bool = True):
    """Cells from ``cells`` that are >= all existing 8-neighbours (f wraps)."""
    nr, nf = values.shape
    out = []
    for ci, cj in cells:
        v = values[ci, cj]
        ok = True
        for di in (-1, 0, 1):
            ni = ci + di
            if ni < 0 or ni >= nr:
                continue
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                nj = cj + dj
                if wrap_f:
                    nj %= nf
                elif nj < 0 or nj >= nf:
                    continue
                if values[ni, nj] > v:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append((ci, cj))
    return out


def _merge_refined(found: list[Peak], r_tol: float, f_tol: float) -> list[Peak]:
    """Collapse refined peaks closer than half a grid step; keep the highest
    value (ties: lower f, then lower r)."""
    found = sorted(found, key=lambda p: (-p.value, p.f, p.r))
    kept: list[Peak] = []
    for p in found:
        if all(
            abs(p.r - k.r) > r_tol or freq_distance(p.f, k.f) > f_tol for k in kept
        ):
            kept.append(p)
    return kept


def locate_peaks(values: np.ndarray, grid: RFGrid, threshold: float,
                 cert: DualCertificate | np.ndarray | None = None,
                 expected_k: int | None = None,
                 refine: bool = True,
                 max_starts_per_cluster: int = 16) -> PeakSet:
    """Localize cells where the polynomial reaches ``threshold``.

    Cells at or above the threshold are clustered by 8-connectivity; within
    each cluster the locally maximal cells seed a sub-grid refinement (when a
    certificate is supplied), and refined peaks closer than half a grid step
    are merged.  When ``expected_k`` is given and the final count differs,
    the result is flagged (not fatal).
    """
    if not 0.0 < threshold <= 1.0:
        raise ParameterError("threshold must lie in (0, 1]")
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.r_values.size, grid.f_values.size):
        raise ParameterError("values shape does not match grid")
    cells = np.argwhere(values >= threshold)
    peaks: list[Peak] = []
    if cells.size:
        q = None
        if cert is not None:
            q = cert.Q if isinstance(cert, DualCertificate) else np.asarray(cert)
        for comp in _cluster_cells(cells):
            starts = _local_max_cells(values, comp)
            if not starts:
                starts = [tuple(comp[np.argmax(values[comp[:, 0], comp[:, 1]])])]
            starts = sorted(
                starts, key=lambda c: (-values[c[0], c[1]], grid.f_values[c[1]],
                                       grid.r_values[c[0]])
            )[:max_starts_per_cluster]
            for ci, cj in starts:
                r0 = float(grid.r_values[ci])
                f0 = float(grid.f_values[cj])
                v0 = float(values[ci, cj])
                if refine and q is not None:
                    r, f, v = _refine_max_2d(
                        lambda rr, ff: poly_value_at(q, rr, ff),
                        r0, f0, grid.r_step, grid.f_step,
                    )
                    peaks.append(Peak(r, f, v))
                else:
                    peaks.append(Peak(r0, f0, v0))
        peaks = _merge_refined(peaks, grid.r_step / 2, grid.f_step / 2)
    mismatch = expected_k is not None and len(peaks) != expected_k
    return PeakSet(sorted(peaks, key=lambda p: (p.f, p.r)), count_mismatch=mismatch)


def _strict_local_max_mask(values: np.ndarray) -> np.ndarray:
    """Boolean mask of cells strictly above all 8 neighbours (f-axis wraps,
    r-axis edges padded with -inf)."""
    padded = np.pad(values, ((1, 1), (0, 0)), constant_values=-np.inf)
    mask = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        rows = padded[1 + di : 1 + di + values.shape[0], :]
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= values > np.roll(rows, -dj, axis=1)
    return mask


def top_local_maxima(values: np.ndarray, grid: RFGrid, k: int,
                     cert: DualCertificate | np.ndarray | None = None,
                     refine: bool = True) -> PeakSet:
    """The ``k`` largest strict local maxima of a surface (classical
    MUSIC-style peak picking; ties broken by lower f then lower r)."""
    values = np.asarray(values, dtype=float)
    cand = [tuple(c) for c in np.argwhere(_strict_local_max_mask(values))]
    cand.sort(key=lambda c: (-values[c[0], c[1]], grid.f_values[c[1]],
                             grid.r_values[c[0]]))
    peaks = []
    q = None
    if cert is not None:
        q = cert.Q if isinstance(cert, DualCertificate) else np.asarray(cert)
    for ci, cj in cand[:k]:
        r0, f0 = float(grid.r_values[ci]), float(grid.f_values[cj])
        if refine and q is not None:
            r, f, v = _refine_max_2d(
                lambda rr, ff: poly_value_at(q, rr, ff),
                r0, f0, grid.r_step, grid.f_step,
            )
            peaks.append(Peak(r, f, v))
        else:
            peaks.append(Peak(r0, f0, float(values[ci, cj])))
    mismatch = len(peaks) != k
    return PeakSet(sorted(peaks, key=lambda p: (p.f, p.r)), count_mismatch=mismatch)


def false_peak_filter(candidates: PeakSet, observed, mask: SampleMask | None,
                      rel_tol: float = 1e-6) -> PeakSet:
    """Drop candidate peaks whose least-squares amplitudes are negligible.

    Fits coefficient rows C in  P_Omega(A C) ~= P_Omega(observed)  with A the
    atom matrix of the candidates, then removes candidates whose row norm is
    below ``rel_tol`` times the largest.  On a rank-deficient atom matrix all
    candidates are kept and a warning is issued.
    """
    if len(candidates) == 0:
        raise ParameterError("candidate set must be nonempty")
    observed = as_complex_matrix(observed, "observed", allow_nan=True)
    m, n = observed.shape
    if mask is None:
        mask = SampleMask.full(m, n)
    if mask.count == 0:
        raise ParameterError("mask must contain observed entries")
    obs = mask.to_bool()
    if not np.isfinite(observed[obs]).all():
        raise ParameterError("observed entries contain non-finite values")
    atoms = np.column_stack([make_atom(p.r, p.f, m) for p in candidates])
    p = atoms.shape[1]
    coeffs = np.zeros((p, n), dtype=np.complex128)
    ill = False
    for j in range(n):
        rows = obs[:, j]
        if not rows.any():
            continue
        a_sub = atoms[rows]
        if np.linalg.matrix_rank(a_sub, tol=1e-10 * max(a_sub.shape)) < p:
            ill = True
        sol, *_ = np.linalg.lstsq(a_sub, observed[rows, j], rcond=None)
        coeffs[:, j] = sol
    if ill:
        warnings.warn(
            "atom matrix is rank deficient on the observed rows; "
            "keeping all candidate peaks",
            RuntimeWarning,
        )
        return PeakSet(list(candidates.peaks), candidates.count_mismatch)
    row_norms = np.linalg.norm(coeffs, axis=1)
    if row_norms.max() == 0:
        return PeakSet(list(candidates.peaks), candidates.count_mismatch)
    keep = row_norms >= rel_tol * row_norms.max()
    kept = [p for p, k in zip(candidates.peaks, keep) if k]
    return PeakSet(kept, candidates.count_mismatch)
