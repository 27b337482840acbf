"""Nuclear-norm machinery: dual certificates, SVT, completion, denoising.

The full-data dual certificate is closed form (orthogonal factors of a
truncated SVD).  The missing-data problem

    minimize ||X||_*   subject to  X_ij = B_ij on the observed set

is solved by operator splitting (ADMM): a singular-value-thresholding step,
an observed-entry projection step, and a multiplier update.  The running
multiplier of the equality constraint converges to a dual-optimal matrix
supported on the observed set, which is exactly the certificate whose
polynomial localizes the spectral parameters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ParameterError, RankMismatchError
from .signal_model import SampleMask, SpectralParams
from .validation import as_complex_matrix


@dataclass(frozen=True)
class DualCertificate:
    """Matrix Q whose polynomial Q(r, f) = Q^H a(r, f) localizes parameters.

    ``support`` is set for missing-data certificates, which vanish off the
    observed entries.  Nuclear-norm certificates live in the spectral-norm
    unit ball; atomic-norm certificates are bounded in the dual atomic norm
    (the sup of the polynomial) instead, which ``norm_kind`` selects.
    """

    Q: np.ndarray
    support: SampleMask | None = None
    norm_kind: str = "spectral"

    def __post_init__(self):
        q = as_complex_matrix(self.Q, "Q")
        if self.norm_kind == "spectral":
            norm = np.linalg.norm(q, 2)
        elif self.norm_kind == "atomic":
            m = q.shape[0]
            f = np.arange(2048) / 2048.0
            atoms = np.exp(2j * np.pi * np.arange(m)[:, None] * f[None, :])
            norm = float(
                np.sqrt(np.sum(np.abs(q.conj().T @ atoms) ** 2, axis=0)).max()
            ) / np.sqrt(m)
        else:
            raise ParameterError(f"unknown norm_kind {self.norm_kind!r}")
        if norm > 1.0 + 1e-6:
            raise ParameterError(
                f"certificate {self.norm_kind} norm {norm:.3e} exceeds 1"
            )
        if self.support is not None:
            off = q - self.support.project(q)
            if np.abs(off).max() > 1e-12:
                raise ParameterError("certificate has energy off its support")
        object.__setattr__(self, "Q", q)

    @property
    def shape(self):
        return self.Q.shape


@dataclass
class SolveReport:
    """Convergence diagnostics of an iterative solver."""

    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool
    gap: float = float("nan")
    w_norm: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverOptions:
    """Options for the splitting solvers.

    ``rho0=None`` picks 1 / sigma_1(zero-filled observations).  A stall guard
    stops runs whose feasibility stops improving long before the tolerance
    (non-recoverable instances), reporting ``converged=False``.
    """

    max_iter: int = 50000
    tol_primal: float = 1e-9
    tol_change: float = 1e-9
    rho0: float | None = None
    gap_tol: float = 1e-4
    over_relax: float = 1.6
    stall_window: int = 1000
    stall_ratio: float = 0.9
    min_iter_before_stall: int = 3000

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


def nuclear_norm(x) -> float:
    return float(np.linalg.svd(as_complex_matrix(x), compute_uv=False).sum())


def real_inner(a, b) -> float:
    """Real inner product Re(Tr(B^H A))."""
    return float(np.real(np.vdot(b, a)))


def svt(x, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal operator of tau * ||.||_*."""
    x = as_complex_matrix(x)
    tau = float(tau)
    if tau < 0:
        raise ParameterError("tau must be nonnegative")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vh


def full_data_dual(x, k: int) -> DualCertificate:
    """Closed-form dual certificate U V^H from a rank-``k`` data matrix.

    Raises if the numerical rank of ``x`` differs from ``k``
    (sigma_{k+1} / sigma_1 must be below 1e-8).
    """
    x = as_complex_matrix(x)
    k = int(k)
    if not 1 <= k <= min(x.shape):
        raise ParameterError(f"k must lie in [1, {min(x.shape)}]")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0 or s[k - 1] / s[0] < 1e-8:
        raise RankMismatchError(f"numerical rank of the data matrix is below {k}")
    if k < s.size and s[k] / s[0] >= 1e-8:
        raise RankMismatchError(f"numerical rank of the data matrix exceeds {k}")
    return DualCertificate(Q=u[:, :k] @ vh[:k])


def subspace_certificate(x, k: int) -> DualCertificate:
    """U V^H from the rank-``k`` truncation of ``x``, without a rank gate.

    Used by two-step pipelines that run a MUSIC-style localization on an
    approximately low-rank completion.
    """
    x = as_complex_matrix(x)
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0 or k > s.size:
        raise ParameterError("matrix rank is too low for the requested k")
    return DualCertificate(Q=u[:, :k] @ vh[:k])


def nnm_denoise(y, lam: float):
    """Closed-form nuclear-norm denoising: argmin 0.5||Y-X||_F^2 + lam ||X||_*.

    Returns (Xhat, Q) where Xhat = svt(Y, lam) and Q = (Y - Xhat) / lam is a
    subgradient of the nuclear norm at Xhat (so ||Q|| <= 1).
    """
    y = as_complex_matrix(y, "Y")
    lam = float(lam)
    if lam <= 0:
        raise ParameterError("lambda must be positive")
    xhat = svt(y, lam)
    return xhat, DualCertificate(Q=(y - xhat) / lam)


def _certificate_w_norm(q: np.ndarray, xhat: np.ndarray) -> float:
    """Spectral norm of W = Q - U V^H w.r.t. the numerical rank of xhat."""
    u, s, vh = np.linalg.svd(xhat, full_matrices=False)
    if s[0] == 0:
        return float(np.linalg.norm(q, 2))
    k = int(np.sum(s / s[0] > 1e-8))
    w = q - u[:, :k] @ vh[:k]
    return float(np.linalg.norm(w, 2))


def nnm_complete(observed, mask: SampleMask, options: SolverOptions | None = None):
    """Nuclear norm minimization subject to agreement on observed entries.

    Parameters
    ----------
    observed : array, M x N
        Matrix whose entries on ``mask`` are the measurements (other entries
        are ignored).
    mask : SampleMask
        Observed index set.
    options : SolverOptions, optional

    Returns
    -------
    xhat : ndarray
        Completed matrix (exactly feasible on the mask).
    cert : DualCertificate
        Dual-optimal matrix supported on the mask, rescaled to spectral norm
        <= 1 if finite precision pushed it slightly above.
    report : SolveReport
    """
    opts = options or SolverOptions()
    observed = as_complex_matrix(observed, "observed", allow_nan=True)
    if observed.shape != (mask.m, mask.n):
        raise ParameterError("observed shape does not match mask")
    if mask.count == 0:
        raise ParameterError("mask must contain at least one observed entry")
    obs = mask.to_bool()
    b = np.zeros_like(observed)
    b[obs] = observed[obs]
    if not np.isfinite(b).all():
        raise ParameterError("observed entries contain non-finite values")
    norm_b = np.linalg.norm(b[obs])
    if norm_b == 0:
        # all-zero observations: the minimizer is X = 0 with Q = 0
        zero = np.zeros_like(b)
        report = SolveReport(0, 0.0, 0.0, 0.0, True, gap=0.0, w_norm=0.0)
        return zero, DualCertificate(Q=zero, support=mask), report

    rho = opts.rho0 if opts.rho0 is not None else 1.0 / np.linalg.norm(b, 2)
    x = b.copy()
    z = b.copy()
    u = np.zeros_like(b)  # scaled multiplier; Lambda = rho * u
    feas = np.inf
    relchg = np.inf
    converged = False
    feas_hist: list[float] = []
    it = 0
    alpha = opts.over_relax
    for it in range(1, opts.max_iter + 1):
        x_old = x
        # SVT step
        uu, ss, vvh = np.linalg.svd(z - u, full_matrices=False)
        x = (uu * np.maximum(ss - 1.0 / rho, 0.0)) @ vvh
        # observed-entry projection step (with over-relaxation)
        z_old = z
        x_relaxed = x if alpha == 1.0 else alpha * x + (1.0 - alpha) * z_old
        z = x_relaxed + u
        z[obs] = b[obs]
        # multiplier update
        u = u + x_relaxed - z
        u[~obs] = 0.0

        r_split = np.linalg.norm(x - z)
        s_split = rho * np.linalg.norm(z - z_old)
        feas = np.linalg.norm(x[obs] - b[obs]) / norm_b
        relchg = np.linalg.norm(x - x_old) / max(np.linalg.norm(x_old), 1e-300)
        if feas < opts.tol_primal and relchg < opts.tol_change:
            converged = True
            break
        # residual balancing keeps the two ADMM residuals comparable
        if r_split > 10.0 * s_split:
            rho *= 2.0
            u /= 2.0
        elif s_split > 10.0 * r_split:
            rho /= 2.0
            u *= 2.0
        feas_hist.append(feas)
        if (
            it >= opts.min_iter_before_stall
            and len(feas_hist) > opts.stall_window
            and feas > 100.0 * opts.tol_primal
            and feas > opts.stall_ratio * feas_hist[-opts.stall_window - 1]
        ):
            break

    xhat = z  # exactly feasible; off-mask entries agree with x at convergence
    q = -rho * u
    q[~obs] = 0.0
    qnorm = np.linalg.norm(q, 2)
    if qnorm > 1.0:
        q /= qnorm
    obj = nuclear_norm(xhat)
    gap = abs(real_inner(q, b) - obj) / max(obj, 1e-300)
    report = SolveReport(
        iterations=it,
        primal_residual=float(feas),
        dual_residual=float(relchg),
        objective=obj,
        converged=converged,
        gap=float(gap),
        w_norm=_certificate_w_norm(q, xhat),
    )
    return xhat, DualCertificate(Q=q, support=mask), report


def coherence_diagnostics(x, k: int):
    """Leverage-score coherences (mu0, mu1, mu2) of a rank-``k`` matrix.

    mu1 = (M/K) max_m ||U^T e_m||^2 over rows, mu2 = (N/K) max_n over columns
    of the right factor, mu0 = max(mu1, mu2).
    """
    x = as_complex_matrix(x)
    m, n = x.shape
    k = int(k)
    if not 1 <= k <= min(m, n):
        raise ParameterError(f"k must lie in [1, {min(m, n)}]")
    u, _, vh = np.linalg.svd(x, full_matrices=False)
    mu1 = m / k * float(np.max(np.sum(np.abs(u[:, :k]) ** 2, axis=1)))
    mu2 = n / k * float(np.max(np.sum(np.abs(vh[:k]) ** 2, axis=0)))
    return max(mu1, mu2), mu1, mu2


def gamma_factor(r: float, m: int) -> float:
    """Vandermonde conditioning factor: (r^{2M}-1)/(2 log r), or M at r = 1."""
    r = float(r)
    if not 0.0 < r <= 1.0:
        raise ParameterError("r must lie in (0, 1]")
    if 1.0 - r < 1e-12:
        return float(m)
    lg = np.log1p(r - 1.0)
    return float(np.expm1(2.0 * m * lg) / (2.0 * lg))


def corollary_bound(params: SpectralParams, m: int, c2: float) -> float:
    """Parameter-specific lower-bound proxy for the squared minimum singular
    value of the unnormalized atom matrix.

    Computes min_k (1/r_k) [gamma_M(r_k) - (c2/Df)(1 + r_k^{2M})] with Df the
    minimum wrap-around frequency separation (taken as 1 when K = 1).  The
    constant ``c2`` is caller-supplied; the value may be negative, in which
    case the bound is vacuous.  Diagnostic only.
    """
    if c2 <= 0:
        raise ParameterError("c2 must be positive")
    df = params.min_freq_separation()
    vals = []
    for rk in params.r:
        r2m = rk ** (2 * m)
        vals.append((gamma_factor(rk, m) - (c2 / df) * (1.0 + r2m)) / rk)
    return float(min(vals))
