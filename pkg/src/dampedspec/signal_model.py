"""Generative model for damped spectrally sparse signals.

Builds unit-norm damped-exponential atoms, synthetic data matrices (both the
multi-channel M x N form and the scalar Hankel form), observation masks, and
circularly-symmetric complex Gaussian noise.  Everything is deterministic
given a seed, so Monte-Carlo experiments are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .validation import (
    as_complex_matrix,
    as_complex_vector,
    check_damping,
    check_frequency,
    check_positive_int,
)

# Below this distance from r = 1 the generic scale formula is a 0/0 ratio;
# switch to the exact r = 1 branch.
_R_ONE_EPS = 1e-12


@dataclass(frozen=True)
class SpectralParams:
    """Damping/frequency/amplitude triples (r_k, f_k, c_k) of a signal.

    Entries are stored sorted by (f, r) so that parameter sets compare
    canonically.  Amplitudes may be omitted (``c=None``) for estimators that
    only recover (r, f).
    """

    r: np.ndarray
    f: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if r.shape != f.shape or r.ndim != 1 or r.size == 0:
            raise ParameterError("r and f must be 1-D arrays of equal, nonzero length")
        if np.any(r <= 0.0) or np.any(r > 1.0):
            raise ParameterError("all damping ratios must lie in (0, 1]")
        if np.any(f < 0.0) or np.any(f >= 1.0):
            raise ParameterError("all frequencies must lie in [0, 1)")
        c = self.c
        if c is not None:
            c = np.atleast_1d(np.asarray(c, dtype=np.complex128))
            if c.shape != r.shape:
                raise ParameterError("c must match the length of r and f")
            if np.any(c == 0):
                raise ParameterError("amplitudes must be nonzero")
        pairs = {(ri, fi) for ri, fi in zip(r, f)}
        if len(pairs) != r.size:
            raise ParameterError("(r, f) pairs must be pairwise distinct")
        order = np.lexsort((r, f))
        object.__setattr__(self, "r", r[order])
        object.__setattr__(self, "f", f[order])
        object.__setattr__(self, "c", None if c is None else c[order])

    @property
    def k(self) -> int:
        return self.r.size

    @classmethod
    def from_entries(cls, entries) -> "SpectralParams":
        """Build from an iterable of (r, f) or (r, f, c) tuples."""
        entries = list(entries)
        if not entries:
            raise ParameterError("at least one (r, f) entry is required")
        r = [e[0] for e in entries]
        f = [e[1] for e in entries]
        c = [e[2] for e in entries] if len(entries[0]) > 2 else None
        return cls(np.asarray(r), np.asarray(f), None if c is None else np.asarray(c))

    def min_freq_separation(self) -> float:
        """Minimum pairwise wrap-around frequency distance; 1.0 when K = 1."""
        if self.k == 1:
            return 1.0
        d = np.abs(self.f[:, None] - self.f[None, :])
        d = np.minimum(d, 1.0 - d)
        iu = np.triu_indices(self.k, 1)
        return float(d[iu].min())


def freq_distance(f1, f2):
    """Wrap-around distance between frequencies on the unit circle."""
    d = np.abs(np.asarray(f1, dtype=float) - np.asarray(f2, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def _atom_scale(r: float, m: int) -> float:
    # sqrt((1-r^2)/(1-r^{2M})), with the r -> 1 limit 1/sqrt(M)
    if 1.0 - r < _R_ONE_EPS:
        return 1.0 / np.sqrt(m)
    num = (1.0 - r) * (1.0 + r)
    den = -np.expm1(2.0 * m * np.log1p(r - 1.0))
    return float(np.sqrt(num / den))


def make_atom(r: float, f: float, m: int) -> np.ndarray:
    """Unit-norm sampled damped exponential of length ``m``.

    Entry t is ``s * r**t * exp(2j*pi*f*t)`` where the scale ``s`` enforces
    unit Euclidean norm.
    """
    r = check_damping(r)
    f = check_frequency(f)
    m = check_positive_int(m, "m")
    t = np.arange(m)
    return _atom_scale(r, m) * (r * np.exp(2j * np.pi * f)) ** t


def unnormalized_atom(r: float, f: float, m: int) -> np.ndarray:
    """Raw Vandermonde column [1, z, ..., z^{m-1}] with z = r * e^{2j pi f}."""
    r = check_damping(r)
    f = check_frequency(f)
    m = check_positive_int(m, "m")
    return (r * np.exp(2j * np.pi * f)) ** np.arange(m)


def tilde_coeff(c, r: float, m: int):
    """Rescaled amplitude: ``c / scale`` so that c~ * atom = c * raw column."""
    r = check_damping(r)
    m = check_positive_int(m, "m")
    return np.asarray(c, dtype=np.complex128) / _atom_scale(r, m)


def atom_matrix(params: SpectralParams, m: int) -> np.ndarray:
    """M x K matrix whose columns are the unit atoms of ``params``."""
    return np.column_stack([make_atom(ri, fi, m) for ri, fi in zip(params.r, params.f)])


def vandermonde_matrix(params: SpectralParams, m: int) -> np.ndarray:
    """M x K matrix of unnormalized atoms (raw Vandermonde columns)."""
    return np.column_stack(
        [unnormalized_atom(ri, fi, m) for ri, fi in zip(params.r, params.f)]
    )


def validate_mode_matrix(phi, k: int | None = None, atol: float = 1e-8) -> np.ndarray:
    """Check that ``phi`` is N x K with unit-norm columns."""
    phi = as_complex_matrix(phi, "phi")
    if k is not None and phi.shape[1] != k:
        raise ParameterError(f"phi must have {k} columns, got {phi.shape[1]}")
    norms = np.linalg.norm(phi, axis=0)
    if np.any(np.abs(norms - 1.0) > atol):
        raise ParameterError("columns of phi must have unit Euclidean norm")
    return phi


def random_mode_matrix(n: int, k: int, rng) -> np.ndarray:
    """Complex Gaussian N x K matrix with columns normalized to unit norm."""
    rng = np.random.default_rng(rng)
    phi = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return phi / np.linalg.norm(phi, axis=0, keepdims=True)


def dft_mode_matrix(n: int, k: int, phi11: float = 1.0) -> np.ndarray:
    """N x K mode matrix from columns 1..K of the N-point DFT matrix.

    The raw (unit-magnitude-entry) DFT columns are used; ``phi11`` replaces
    the (0, 0) entry before the columns are renormalized.  ``phi11=1`` leaves
    the Fourier structure untouched.
    """
    if k >= n:
        raise ParameterError("need k < n distinct DFT columns")
    rows = np.arange(n)[:, None]
    cols = np.arange(1, k + 1)[None, :]
    phi = np.exp(-2j * np.pi * rows * cols / n)
    phi[0, 0] = phi11
    return phi / np.linalg.norm(phi, axis=0, keepdims=True)


def synth_data_matrix(params: SpectralParams, phi, m: int) -> np.ndarray:
    """Noiseless M x N data matrix: sum_k c~_k a(r_k, f_k) phi_k^T."""
    if params.c is None:
        raise ParameterError("params must carry amplitudes c")
    m = check_positive_int(m, "m")
    phi = validate_mode_matrix(phi, params.k)
    x = np.zeros((m, phi.shape[0]), dtype=np.complex128)
    for ck, rk, fk, col in zip(params.c, params.r, params.f, phi.T):
        x += tilde_coeff(ck, rk, m) * np.outer(make_atom(rk, fk, m), col)
    return x


def smv_signal(params: SpectralParams, length: int) -> np.ndarray:
    """Scalar signal x(t) = sum_k c_k r_k^t exp(2j pi f_k t), t = 0..length-1."""
    if params.c is None:
        raise ParameterError("params must carry amplitudes c")
    length = check_positive_int(length, "length")
    t = np.arange(length)
    x = np.zeros(length, dtype=np.complex128)
    for ck, rk, fk in zip(params.c, params.r, params.f):
        x += ck * (rk * np.exp(2j * np.pi * fk)) ** t
    return x


def make_hankel(y, m: int) -> np.ndarray:
    """M x (L - M + 1) Hankel matrix with entry (i, j) = y[i + j]."""
    y = as_complex_vector(y)
    m = check_positive_int(m, "m")
    if m > y.size:
        raise ParameterError(f"m={m} exceeds signal length {y.size}")
    from scipy.linalg import hankel

    return hankel(y[:m], y[m - 1 :])


@dataclass(frozen=True)
class SampleMask:
    """Set of observed (row, col) indices of an m x n matrix."""

    m: int
    n: int
    indices: np.ndarray = field(repr=False)  # (count, 2) int array, sorted

    def __post_init__(self):
        m = check_positive_int(self.m, "m")
        n = check_positive_int(self.n, "n")
        idx = np.asarray(self.indices, dtype=np.intp).reshape(-1, 2)
        if idx.size:
            if idx[:, 0].min() < 0 or idx[:, 0].max() >= m:
                raise ParameterError("row indices out of range")
            if idx[:, 1].min() < 0 or idx[:, 1].max() >= n:
                raise ParameterError("column indices out of range")
        flat = idx[:, 0] * n + idx[:, 1]
        if np.unique(flat).size != flat.size:
            raise ParameterError("mask contains duplicate indices")
        order = np.argsort(flat)
        object.__setattr__(self, "indices", idx[order])

    @property
    def count(self) -> int:
        return self.indices.shape[0]

    @classmethod
    def full(cls, m: int, n: int) -> "SampleMask":
        ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
        return cls(m, n, np.column_stack([ii.ravel(), jj.ravel()]))

    @classmethod
    def from_bool(cls, observed) -> "SampleMask":
        observed = np.asarray(observed, dtype=bool)
        if observed.ndim != 2:
            raise ParameterError("boolean mask must be 2-D")
        return cls(observed.shape[0], observed.shape[1], np.argwhere(observed))

    def to_bool(self) -> np.ndarray:
        b = np.zeros((self.m, self.n), dtype=bool)
        b[self.indices[:, 0], self.indices[:, 1]] = True
        return b

    def is_full(self) -> bool:
        return self.count == self.m * self.n

    def project(self, x) -> np.ndarray:
        """Zero out the unobserved entries of ``x``."""
        x = as_complex_matrix(x, allow_nan=True)
        if x.shape != (self.m, self.n):
            raise ParameterError(
                f"matrix shape {x.shape} does not match mask ({self.m}, {self.n})"
            )
        out = np.zeros_like(x)
        rows, cols = self.indices[:, 0], self.indices[:, 1]
        out[rows, cols] = x[rows, cols]
        return out


def sample_mask(m: int, n: int, count: int, seed) -> SampleMask:
    """Uniformly random mask with exactly ``count`` observed entries."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    count = int(count)
    if count < 0 or count > m * n:
        raise ParameterError(f"count must lie in [0, {m * n}], got {count}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(m * n, size=count, replace=False)
    return SampleMask(m, n, np.column_stack(np.divmod(flat, n)))


def add_noise(x, sigma: float, seed) -> np.ndarray:
    """Add i.i.d. circularly-symmetric complex Gaussian noise.

    ``sigma`` is the per-entry standard deviation: real and imaginary parts
    are independent N(0, sigma^2 / 2).
    """
    x = as_complex_matrix(x)
    sigma = float(sigma)
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    if sigma == 0.0:
        return x.copy()
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + (sigma / np.sqrt(2.0)) * e


def snr_db(x, e) -> float:
    """Empirical SNR 10*log10(||x||_F^2 / ||e||_F^2) of signal vs noise."""
    x = np.asarray(x)
    e = np.asarray(e)
    return float(10.0 * np.log10(np.linalg.norm(x) ** 2 / np.linalg.norm(e) ** 2))
