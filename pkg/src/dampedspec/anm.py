"""Atomic norm minimization baseline for undamped frequency estimation.

Solves the Toeplitz-structured SDP

    min (1/2M) Tr(Toep(u)) + (1/2) Tr(D)
    s.t. [[Toep(u), X], [X^H, D]] >= 0,  X = B on the observed set

by operator splitting: a PSD-cone projection (Hermitian eigen-decomposition
of the (M+N) x (M+N) block matrix) alternating with a structure step that
averages Toeplitz diagonals, restores the observed entries, and applies the
linear objective shifts.  The dual certificate for the equality constraints
is read off the converged multiplier and rescaled so that the dual
polynomial on unit-norm atoms peaks at 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .nnm import DualCertificate, SolveReport, SolverOptions, real_inner
from .signal_model import SampleMask
from .validation import as_complex_matrix


@dataclass(frozen=True)
class ToeplitzVector:
    """First column of a Hermitian Toeplitz matrix (u[0] real)."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.complex128).ravel()
        if u.size == 0:
            raise ParameterError("u must be nonempty")
        u = u.copy()
        u[0] = u[0].real
        object.__setattr__(self, "u", u)

    def matrix(self) -> np.ndarray:
        return toeplitz_from_first_col(self.u)


def toeplitz_from_first_col(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128).ravel()
    m = u.size
    idx = np.arange(m)
    diff = idx[:, None] - idx[None, :]
    t = np.where(diff >= 0, u[np.abs(diff)], np.conj(u[np.abs(diff)]))
    return t


def _toeplitz_diag_means(w: np.ndarray) -> np.ndarray:
    """Hermitian-symmetrized diagonal means: the nearest Toeplitz matrix."""
    m = w.shape[0]
    u = np.empty(m, dtype=np.complex128)
    u[0] = np.mean(np.real(np.diag(w)))
    for k in range(1, m):
        lower = np.mean(np.diagonal(w, -k))
        upper = np.mean(np.diagonal(w, k))
        u[k] = 0.5 * (lower + np.conj(upper))
    return u


def default_anm_options() -> SolverOptions:
    """Looser tolerances than the completion solver: the baseline only needs
    localization-grade accuracy."""
    return SolverOptions(
        max_iter=20000,
        tol_primal=1e-7,
        tol_change=1e-7,
        min_iter_before_stall=2000,
        stall_window=500,
    )


def anm_solve(observed, mask: SampleMask | None = None,
              options: SolverOptions | None = None):
    """Solve the ANM SDP on (partially) observed data.

    Parameters
    ----------
    observed : array, M x N
    mask : SampleMask or None
        None means fully observed.
    options : SolverOptions, optional

    Returns
    -------
    xhat : ndarray
        Estimated data matrix (equals ``observed`` on the mask).
    u : ToeplitzVector
        First column of the optimal Toeplitz block.
    cert : DualCertificate
        Equality-constraint dual, scaled so ||Q^H a(f)|| peaks at 1 on
        unit-norm atoms.
    report : SolveReport
        ``objective`` is the atomic norm in the unit-atom normalization
        (sqrt(M) times the raw SDP objective), so it is directly comparable
        with <Q, B>_R.
    """
    opts = options or default_anm_options()
    b_in = as_complex_matrix(observed, "observed", allow_nan=True)
    m, n = b_in.shape
    if mask is None:
        mask = SampleMask.full(m, n)
    if mask.count == 0:
        raise ParameterError("mask must contain at least one observed entry")
    if (mask.m, mask.n) != (m, n):
        raise ParameterError("mask shape does not match observed")
    obs = mask.to_bool()
    b = np.zeros_like(b_in)
    b[obs] = b_in[obs]
    if not np.isfinite(b).all():
        raise ParameterError("observed entries contain non-finite values")
    norm_b = np.linalg.norm(b[obs])
    if norm_b == 0:
        zero_u = ToeplitzVector(np.zeros(m))
        zero_q = DualCertificate(np.zeros((m, n)), support=mask)
        return (np.zeros((m, n), dtype=complex), zero_u, zero_q,
                SolveReport(0, 0.0, 0.0, 0.0, True, gap=0.0))

    dim = m + n
    rho = opts.rho0 if opts.rho0 is not None else 1.0 / np.linalg.norm(b, 2)
    x = b.copy()
    u_vec = np.zeros(m, dtype=np.complex128)
    d = np.eye(n, dtype=np.complex128) * np.linalg.norm(b, 2)
    lam = np.zeros((dim, dim), dtype=np.complex128)
    g = _assemble(u_vec, x, d)
    s_mat = g.copy()
    converged = False
    feas = np.inf
    relchg = np.inf
    feas_hist: list[float] = []
    it = 0
    for it in range(1, opts.max_iter + 1):
        # PSD projection step
        target = g - lam / rho
        target = 0.5 * (target + target.conj().T)
        evals, evecs = np.linalg.eigh(target)
        pos = np.maximum(evals, 0.0)
        s_mat = (evecs * pos) @ evecs.conj().T
        # structure step: Toeplitz averaging, observed entries, linear shifts
        w = s_mat + lam / rho
        w = 0.5 * (w + w.conj().T)
        u_vec = _toeplitz_diag_means(w[:m, :m])
        u_vec[0] -= 1.0 / (2.0 * rho * m)
        x_old = x
        x = 0.5 * (w[:m, m:] + w[m:, :m].conj().T)
        x[obs] = b[obs]
        d = w[m:, m:] - np.eye(n) / (2.0 * rho)
        g_old = g
        g = _assemble(u_vec, x, d)
        # multiplier update
        lam = lam + rho * (s_mat - g)

        r_split = np.linalg.norm(s_mat - g)
        s_split = rho * np.linalg.norm(g - g_old)
        feas = r_split / max(norm_b, 1e-300)
        relchg = np.linalg.norm(x - x_old) / max(np.linalg.norm(x_old), 1e-300)
        if feas < opts.tol_primal and relchg < opts.tol_change:
            converged = True
            break
        if r_split > 10.0 * s_split:
            rho *= 2.0
        elif s_split > 10.0 * r_split:
            rho /= 2.0
        feas_hist.append(feas)
        if (
            it >= opts.min_iter_before_stall
            and len(feas_hist) > opts.stall_window
            and feas > 100.0 * opts.tol_primal
            and feas > opts.stall_ratio * feas_hist[-opts.stall_window - 1]
        ):
            break

    # Equality-constraint multiplier: nu = -2 * Lambda_{12} on the mask.
    # Scaling by sqrt(M) moves the dual polynomial to unit-norm atoms.
    q = -2.0 * np.sqrt(m) * lam[:m, m:]
    q[~obs] = 0.0
    qnorm_poly = _max_poly_norm(q)
    if qnorm_poly > 1.0:
        q /= qnorm_poly
    objective = float(np.sqrt(m) * (np.real(np.trace(toeplitz_from_first_col(u_vec)))
                                    / (2.0 * m) + np.real(np.trace(d)) / 2.0))
    gap = abs(real_inner(q, b) - objective) / max(abs(objective), 1e-300)
    report = SolveReport(
        iterations=it,
        primal_residual=float(feas),
        dual_residual=float(relchg),
        objective=objective,
        converged=converged,
        gap=float(gap),
    )
    cert = DualCertificate(q, support=mask, norm_kind="atomic")
    return x, ToeplitzVector(u_vec), cert, report


def _assemble(u_vec, x, d) -> np.ndarray:
    m, n = x.shape
    g = np.empty((m + n, m + n), dtype=np.complex128)
    g[:m, :m] = toeplitz_from_first_col(u_vec)
    g[:m, m:] = x
    g[m:, :m] = x.conj().T
    g[m:, m:] = 0.5 * (d + d.conj().T)
    return g


def _max_poly_norm(q: np.ndarray, n_grid: int = 4096) -> float:
    """Continuum max of ||Q^H a(f)||: grid scan plus golden refinement of the
    top grid local maxima (undamped atoms)."""
    from .dualpoly import _golden_max, poly_value_at

    m = q.shape[0]
    f = np.arange(n_grid) / n_grid
    atoms = np.exp(2j * np.pi * np.arange(m)[:, None] * f[None, :]) / np.sqrt(m)
    vals = np.sqrt(np.sum(np.abs(q.conj().T @ atoms) ** 2, axis=0))
    best = float(vals.max())
    step = 1.0 / n_grid
    is_max = (vals > np.roll(vals, 1)) & (vals >= np.roll(vals, -1))
    top = np.argsort(vals[is_max])[-4:]
    for j in np.flatnonzero(is_max)[top]:
        _, v = _golden_max(
            lambda ff: poly_value_at(q, 1.0, ff % 1.0),
            f[j] - step, f[j] + step,
        )
        best = max(best, float(v))
    return best


def anm_dual_poly(cert: DualCertificate | np.ndarray, f_grid) -> np.ndarray:
    """||Q^H a(f)||_2 over a frequency grid, with unit-norm undamped atoms."""
    q = cert.Q if isinstance(cert, DualCertificate) else as_complex_matrix(cert, "Q")
    f_grid = np.atleast_1d(np.asarray(f_grid, dtype=float))
    m = q.shape[0]
    atoms = np.exp(2j * np.pi * np.arange(m)[:, None] * f_grid[None, :]) / np.sqrt(m)
    return np.sqrt(np.sum(np.abs(q.conj().T @ atoms) ** 2, axis=0))
