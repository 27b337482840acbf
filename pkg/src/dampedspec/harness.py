"""Reproducible experiment harness: scenario configs, Monte-Carlo loops,
success metrics, sweeps, and CSV/JSON emission.

All randomness flows from the config's master seed; per-trial generators are
derived from (seed, trial, stage) so results do not depend on execution
order, worker count, or which algorithms share a trial.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import linear_sum_assignment

from .anm import default_anm_options
from .dualpoly import PeakSet, RFGrid, eval_dual_poly, top_local_maxima
from .errors import EstimationError, ParameterError
from .estimators import (
    AnmEstimator,
    certificate_peaks,
    md_music_peaks,
    music_peaks_from_matrix,
)
from .nnm import (
    SolverOptions,
    coherence_diagnostics,
    full_data_dual,
    nnm_complete,
    nnm_denoise,
)
from .signal_model import (
    SampleMask,
    SpectralParams,
    add_noise,
    dft_mode_matrix,
    freq_distance,
    random_mode_matrix,
    sample_mask,
    snr_db,
    synth_data_matrix,
)
from .subspace import esprit

# stages for per-trial seed derivation
_STAGE_DATA, _STAGE_MASK, _STAGE_NOISE = 0, 1, 2

SUCCESS_TOL = 1e-5  # max parameter deviation counted as successful recovery
DATA_SUCCESS_TOL = 1e-5  # RelErr threshold for data-matrix recovery


# ---------------------------------------------------------------------------
# metrics


def rel_err(xhat, xstar) -> float:
    """Relative recovery error ||Xhat - X*||_F / ||X*||_F."""
    xhat = np.asarray(xhat)
    xstar = np.asarray(xstar)
    return float(np.linalg.norm(xhat - xstar) / np.linalg.norm(xstar))


def _as_rf(est) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(est, SpectralParams):
        return est.r, est.f
    if isinstance(est, PeakSet):
        return est.r, est.f
    arr = np.asarray(est, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def match_params(est, truth: SpectralParams) -> dict:
    """Optimally assign estimates to the truth and report deviations.

    The assignment minimizes wrap-around frequency distance plus damping
    distance; ``reason`` is "count_mismatch" when the mode counts differ.
    """
    r_est, f_est = _as_rf(est)
    if r_est.size != truth.k:
        return {"reason": "count_mismatch", "max_dr": np.inf, "max_df": np.inf}
    cost = freq_distance(f_est[:, None], truth.f[None, :]) + np.abs(
        r_est[:, None] - truth.r[None, :]
    )
    rows, cols = linear_sum_assignment(cost)
    max_dr = float(np.abs(r_est[rows] - truth.r[cols]).max())
    max_df = float(freq_distance(f_est[rows], truth.f[cols]).max())
    return {"reason": "ok", "max_dr": max_dr, "max_df": max_df}


def success_params(est, truth: SpectralParams, tol: float = SUCCESS_TOL) -> bool:
    """Both max |r - r*| and max wrap-around |f - f*| within ``tol`` under
    optimal assignment, with matching mode counts."""
    m = match_params(est, truth)
    return m["reason"] == "ok" and m["max_dr"] <= tol and m["max_df"] <= tol


def success_frequencies(est, truth: SpectralParams, tol: float = SUCCESS_TOL) -> bool:
    """Frequency-only success (used for the damping-free ANM baseline)."""
    _, f_est = _as_rf(est)
    if f_est.size != truth.k:
        return False
    cost = freq_distance(f_est[:, None], truth.f[None, :])
    rows, cols = linear_sum_assignment(cost)
    return bool(freq_distance(f_est[rows], truth.f[cols]).max() <= tol)


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score confidence interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    hw = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return float(max(center - hw, 0.0)), float(min(center + hw, 1.0))


# ---------------------------------------------------------------------------
# configuration


def parse_range(spec: str) -> np.ndarray:
    """Parse inclusive 'start:step:end' range syntax (e.g. '0.05:0.05:0.95')."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParameterError(f"range spec must be start:step:end, got {spec!r}")
    start, step, end = (float(p) for p in parts)
    if step <= 0 or end < start:
        raise ParameterError(f"invalid range spec {spec!r}")
    n = int(round((end - start) / step))
    vals = start + step * np.arange(n + 1)
    return vals[vals <= end + step * 1e-9]


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    ``kind`` selects the driver: "trials" (Monte-Carlo over one setting),
    "sweep" (one parameter swept, trials per point), "phase_transition"
    (grid over model order and sample count), or "coherence" (sweep plus
    coherence diagnostics).  See the README for the JSON schema.
    """

    scenario: str
    kind: str = "trials"
    m: int = 50
    n: int = 50
    k: int = 3
    # --- ground-truth parameters: explicit lists or random draws from sets
    r_true: list | None = None
    f_true: list | None = None
    f_set: str | None = None
    r_set: str | None = None
    c_mode: str = "gaussian"  # gaussian | ones
    phi_mode: str = "gaussian"  # gaussian | dft | dft_phi11
    phi11: float = 1.0
    # --- observation model
    missing_fraction: float = 0.0
    n_observed: int | None = None
    noise_sigma: float = 0.0
    denoise_lambda: float | None = None
    # --- Monte-Carlo controls
    trials: int = 50
    seed: object = 0  # int or list of ints (SeedSequence entropy)
    algorithms: tuple = ("md_music",)
    success_tol: float = SUCCESS_TOL
    # Redraw amplitudes/mode shapes every trial, or fix one data matrix and
    # randomize only the mask and noise across trials (the reference
    # missing-data experiment reuses a single full data matrix).
    redraw_modes: bool = True
    # --- localization grid
    grid_f_step: float | None = None
    grid_r_min: float = 0.75
    grid_r_max: float = 1.0
    grid_r_step: float = 0.002
    # --- solver options (JSON-style dicts)
    nnm_options: dict = field(default_factory=dict)
    anm_options: dict = field(default_factory=dict)
    # --- sweep / phase-transition structure
    sweep_param: str | None = None  # m | delta_f | phi11 | n_observed
    sweep_values: list | None = None
    k_values: list | None = None
    n_observed_values: list | None = None

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.r_true is not None and self.f_true is not None:
            if len(self.r_true) != len(self.f_true):
                raise ParameterError("r_true and f_true lengths differ")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        return d

    def grid(self) -> RFGrid:
        return RFGrid.default(
            self.m,
            r_min=self.grid_r_min,
            r_max=self.grid_r_max,
            r_step=self.grid_r_step,
            f_step=self.grid_f_step,
        )

    def solver_options(self) -> SolverOptions:
        if self.nnm_options:
            return SolverOptions.from_dict(self.nnm_options)
        return SolverOptions()

    def anm_solver_options(self) -> SolverOptions:
        if self.anm_options:
            return SolverOptions.from_dict(self.anm_options)
        return default_anm_options()

    def observed_count(self) -> int:
        total = self.m * self.n
        if self.n_observed is not None:
            count = int(self.n_observed)
        else:
            count = int(round((1.0 - self.missing_fraction) * total))
        if not 0 <= count <= total:
            raise ParameterError("observed count outside [0, m*n]")
        return count


def _seed_tuple(seed) -> tuple:
    if isinstance(seed, (list, tuple)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


# ---------------------------------------------------------------------------
# trial data generation


@dataclass
class TrialData:
    params: SpectralParams
    phi: np.ndarray
    x_star: np.ndarray
    mask: SampleMask
    y: np.ndarray  # full (possibly noisy) data
    observed: np.ndarray  # zero-filled observed matrix
    snr_db: float | None


def _draw_params(config: ExperimentConfig, rng) -> SpectralParams:
    if config.r_true is not None and config.f_true is not None:
        r = np.asarray(config.r_true, dtype=float)
        f = np.asarray(config.f_true, dtype=float)
    else:
        if config.f_set is None or config.r_set is None:
            raise ParameterError("config needs explicit r_true/f_true or f_set/r_set")
        f_pool = parse_range(config.f_set)
        r_pool = parse_range(config.r_set)
        if config.k > f_pool.size:
            raise ParameterError("k exceeds the frequency pool size")
        # distinct frequencies keep the pairs separated; dampings may repeat
        f = rng.choice(f_pool, size=config.k, replace=False)
        r = rng.choice(r_pool, size=config.k, replace=True)
    if config.c_mode == "ones":
        c = np.ones(config.k, dtype=complex)
    elif config.c_mode == "gaussian":
        c = (rng.standard_normal(config.k) + 1j * rng.standard_normal(config.k)) / np.sqrt(2.0)
    else:
        raise ParameterError(f"unknown c_mode {config.c_mode!r}")
    return SpectralParams(r=r, f=f, c=c)


def _draw_phi(config: ExperimentConfig, rng) -> np.ndarray:
    if config.phi_mode == "gaussian":
        return random_mode_matrix(config.n, config.k, rng)
    if config.phi_mode == "dft":
        return dft_mode_matrix(config.n, config.k)
    if config.phi_mode == "dft_phi11":
        return dft_mode_matrix(config.n, config.k, phi11=config.phi11)
    raise ParameterError(f"unknown phi_mode {config.phi_mode!r}")


def make_trial_data(config: ExperimentConfig, trial: int) -> TrialData:
    """Deterministic data for one trial; each stage draws from its own
    (seed, trial, stage) stream."""
    base = _seed_tuple(config.seed)
    data_trial = trial if config.redraw_modes else 0
    rng_data = np.random.default_rng(np.random.SeedSequence(base + (data_trial, _STAGE_DATA)))
    params = _draw_params(config, rng_data)
    phi = _draw_phi(config, rng_data)
    x_star = synth_data_matrix(params, phi, config.m)
    mask = sample_mask(
        config.m,
        config.n,
        config.observed_count(),
        np.random.SeedSequence(base + (trial, _STAGE_MASK)),
    )
    if config.noise_sigma > 0:
        y = add_noise(
            x_star,
            config.noise_sigma,
            np.random.SeedSequence(base + (trial, _STAGE_NOISE)),
        )
        snr = snr_db(x_star, y - x_star)
    else:
        y = x_star
        snr = None
    return TrialData(params, phi, x_star, mask, y, mask.project(y), snr)


# ---------------------------------------------------------------------------
# algorithms


@dataclass
class AlgoResult:
    algorithm: str
    param_success: bool | None = None
    freq_success: bool | None = None
    data_success: bool | None = None
    rel_err: float | None = None
    n_peaks: int = 0
    peaks: list = field(default_factory=list)  # [(r, f, value), ...]
    wall_time_s: float = 0.0
    reason: str = ""

    def to_row(self) -> dict:
        row = asdict(self)
        row["peaks"] = json.dumps(
            [[round(r, 12), round(f, 12), None if v != v else round(v, 9)]
             for r, f, v in self.peaks]
        )
        return row


@dataclass
class TrialResult:
    scenario: str
    trial: int
    snr_db: float | None
    results: dict  # algorithm name -> AlgoResult


def _peaks_list(peaks: PeakSet) -> list:
    return [(float(p.r), float(p.f), float(p.value)) for p in peaks]


def _grade(res: AlgoResult, est, data: TrialData, config: ExperimentConfig,
           xhat=None) -> AlgoResult:
    res.param_success = success_params(est, data.params, config.success_tol)
    res.freq_success = success_frequencies(est, data.params, config.success_tol)
    if xhat is not None:
        res.rel_err = rel_err(xhat, data.x_star)
        res.data_success = res.rel_err <= DATA_SUCCESS_TOL
    return res


class _TrialRunner:
    """Executes the configured algorithms on one trial, sharing the nuclear
    norm completion solve among the methods that consume it."""

    def __init__(self, config: ExperimentConfig, data: TrialData):
        self.config = config
        self.data = data
        self._nnm_solution = None

    def nnm_solution(self):
        if self._nnm_solution is None:
            self._nnm_solution = nnm_complete(
                self.data.observed, self.data.mask, self.config.solver_options()
            )
        return self._nnm_solution

    def run(self, name: str) -> AlgoResult:
        t0 = time.perf_counter()
        try:
            res = getattr(self, "_run_" + name)()
        except (ParameterError, EstimationError) as exc:
            res = AlgoResult(algorithm=name, param_success=False,
                             freq_success=False, reason=type(exc).__name__)
        res.algorithm = name
        res.wall_time_s = time.perf_counter() - t0
        return res

    # --- full-data methods

    def _run_nn_music(self) -> AlgoResult:
        cfg, data = self.config, self.data
        cert = full_data_dual(data.observed, cfg.k)
        peaks = certificate_peaks(cert, cfg.k, cfg.grid())
        res = AlgoResult("nn_music", n_peaks=len(peaks), peaks=_peaks_list(peaks))
        return _grade(res, peaks, data, cfg, xhat=data.observed)

    def _run_nn_music_denoise(self) -> AlgoResult:
        cfg, data = self.config, self.data
        if cfg.denoise_lambda is None:
            raise ParameterError("denoise scenario needs denoise_lambda")
        xhat, cert = nnm_denoise(data.observed, cfg.denoise_lambda)
        grid = cfg.grid()
        values = eval_dual_poly(cert, grid)
        peaks = top_local_maxima(values, grid, cfg.k, cert=cert)
        res = AlgoResult("nn_music_denoise", n_peaks=len(peaks),
                         peaks=_peaks_list(peaks))
        return _grade(res, peaks, data, cfg, xhat=xhat)

    def _run_esprit(self) -> AlgoResult:
        cfg, data = self.config, self.data
        est = esprit(data.observed, cfg.k)
        res = AlgoResult("esprit",
                         peaks=[(r, f, float("nan")) for r, f in zip(est.r, est.f)],
                         n_peaks=est.k)
        return _grade(res, est, data, cfg)

    # --- missing-data methods

    def _run_md_music(self) -> AlgoResult:
        cfg, data = self.config, self.data
        xhat, cert, report = self.nnm_solution()
        peaks = md_music_peaks(cert, data.observed, data.mask, cfg.k, cfg.grid())
        res = AlgoResult("md_music", n_peaks=len(peaks), peaks=_peaks_list(peaks),
                         reason="" if report.converged else "solver_not_converged")
        return _grade(res, peaks, data, cfg, xhat=xhat)

    def _run_nnm_complete(self) -> AlgoResult:
        # data-matrix recovery only; used by studies that measure completion
        cfg, data = self.config, self.data
        xhat, cert, report = self.nnm_solution()
        res = AlgoResult("nnm_complete",
                         reason="" if report.converged else "solver_not_converged")
        res.rel_err = rel_err(xhat, data.x_star)
        res.data_success = res.rel_err <= DATA_SUCCESS_TOL
        return res

    def _run_nnm_music(self) -> AlgoResult:
        cfg, data = self.config, self.data
        xhat, _, _ = self.nnm_solution()
        peaks = music_peaks_from_matrix(xhat, cfg.k, cfg.grid())
        res = AlgoResult("nnm_music", n_peaks=len(peaks), peaks=_peaks_list(peaks))
        return _grade(res, peaks, data, cfg, xhat=xhat)

    def _run_nnm_esprit(self) -> AlgoResult:
        cfg, data = self.config, self.data
        xhat, _, _ = self.nnm_solution()
        est = esprit(xhat, cfg.k)
        res = AlgoResult("nnm_esprit",
                         peaks=[(r, f, float("nan")) for r, f in zip(est.r, est.f)],
                         n_peaks=est.k)
        return _grade(res, est, data, cfg, xhat=xhat)

    def _run_mn_music(self) -> AlgoResult:
        cfg, data = self.config, self.data
        peaks = music_peaks_from_matrix(data.observed, cfg.k, cfg.grid())
        res = AlgoResult("mn_music", n_peaks=len(peaks), peaks=_peaks_list(peaks))
        return _grade(res, peaks, data, cfg)

    def _run_anm(self) -> AlgoResult:
        cfg, data = self.config, self.data
        mask = None if data.mask.is_full() else data.mask
        est = AnmEstimator(n_components=cfg.k,
                           solver_options=cfg.anm_solver_options())
        est.fit(data.observed, mask=mask)
        res = AlgoResult("anm", n_peaks=est.n_modes_,
                         peaks=_peaks_list(est.peaks_),
                         reason="" if est.report_.converged else "solver_not_converged")
        res = _grade(res, est.peaks_, data, cfg, xhat=est.estimated_data_)
        res.param_success = None  # the undamped model carries no dampings
        return res


KNOWN_ALGORITHMS = tuple(sorted(
    name[len("_run_"):] for name in vars(_TrialRunner) if name.startswith("_run_")
))


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    data = make_trial_data(config, trial)
    runner = _TrialRunner(config, data)
    results = {}
    for name in config.algorithms:
        if name not in KNOWN_ALGORITHMS:
            raise ParameterError(f"unknown algorithm {name!r}")
        results[name] = runner.run(name)
    return TrialResult(config.scenario, trial, data.snr_db, results)


# ---------------------------------------------------------------------------
# scenario driver


@dataclass
class ScenarioResult:
    config: ExperimentConfig
    trials: list
    aggregates: dict

    def to_summary(self) -> dict:
        return {
            "scenario": self.config.scenario,
            "config": self.config.to_dict(),
            "aggregates": self.aggregates,
        }


def _aggregate(config: ExperimentConfig, trials: list) -> dict:
    out = {}
    for name in config.algorithms:
        rows = [t.results[name] for t in trials]
        n = len(rows)
        agg = {"n_trials": n}
        for key in ("param_success", "freq_success", "data_success"):
            short = "p_" + key.removesuffix("_success")
            vals = [getattr(r, key) for r in rows]
            if all(v is None for v in vals):
                agg[short] = None
                continue
            wins = sum(bool(v) for v in vals)
            lo, hi = wilson_interval(wins, n)
            agg[short] = wins / n
            agg[short + "_wilson"] = [lo, hi]
        errs = [r.rel_err for r in rows if r.rel_err is not None]
        agg["mean_rel_err"] = float(np.mean(errs)) if errs else None
        agg["median_rel_err"] = float(np.median(errs)) if errs else None
        out[name] = agg
    return out


def _run_trial_star(args):
    return run_trial(*args)


def run_scenario(config: ExperimentConfig, threads: int = 1) -> ScenarioResult:
    """Run all trials of a scenario; deterministic given the master seed.

    Trials are independent work items; with ``threads > 1`` they execute in
    a process pool and are merged by trial index.
    """
    jobs = [(config, t) for t in range(config.trials)]
    if threads > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(_run_trial_star, jobs, chunksize=1))
    else:
        trials = [run_trial(*j) for j in jobs]
    trials.sort(key=lambda t: t.trial)
    return ScenarioResult(config, trials, _aggregate(config, trials))


# ---------------------------------------------------------------------------
# sweeps, phase transition, coherence


def _derived_point_config(config: ExperimentConfig, param: str, value) -> ExperimentConfig:
    d = config.to_dict()
    d.update(kind="trials", sweep_param=None, sweep_values=None)
    base = list(_seed_tuple(config.seed))
    if param == "m":
        d["m"] = int(value)
        d["seed"] = base + [int(value)]
    elif param == "delta_f":
        if not config.f_true or len(config.f_true) < 2:
            raise ParameterError("delta_f sweep needs f_true with >= 2 entries")
        f = list(config.f_true)
        f[1] = f[0] + float(value)
        d["f_true"] = f
        d["seed"] = base + [int(round(value * 10**9))]
    elif param == "phi11":
        d["phi_mode"] = "dft_phi11"
        d["phi11"] = float(value)
        d["seed"] = base + [int(round(value * 10**9))]
    elif param == "n_observed":
        d["n_observed"] = int(value)
        d["seed"] = base + [int(value)]
    else:
        raise ParameterError(f"unknown sweep parameter {param!r}")
    d["scenario"] = f"{config.scenario}[{param}={value}]"
    return ExperimentConfig.from_dict(d)


def run_sweep(config: ExperimentConfig, threads: int = 1) -> dict:
    """Run a 1-D parameter sweep; returns {value: ScenarioResult}."""
    if config.sweep_param is None or not config.sweep_values:
        raise ParameterError("sweep config needs sweep_param and sweep_values")
    out = {}
    for value in config.sweep_values:
        point = _derived_point_config(config, config.sweep_param, value)
        out[value] = run_scenario(point, threads=threads)
    return out


def run_phase_transition(config: ExperimentConfig, threads: int = 1) -> dict:
    """Success-probability surfaces over (K, |Omega|).

    Returns {"k_values", "n_observed_values", "p_param", "p_data", "p_diff"}
    with probability matrices of shape (len(k_values), len(n_observed_values)).
    """
    if not config.k_values or not config.n_observed_values:
        raise ParameterError("phase transition needs k_values and n_observed_values")
    k_values = [int(k) for k in config.k_values]
    obs_values = [int(v) for v in config.n_observed_values]
    p_param = np.zeros((len(k_values), len(obs_values)))
    p_data = np.zeros_like(p_param)
    base = list(_seed_tuple(config.seed))
    for i, k in enumerate(k_values):
        for j, n_obs in enumerate(obs_values):
            d = config.to_dict()
            d.update(
                kind="trials", k=k, n_observed=n_obs,
                k_values=None, n_observed_values=None,
                seed=base + [k, n_obs],
                scenario=f"{config.scenario}[k={k},obs={n_obs}]",
                algorithms=["md_music"],
            )
            res = run_scenario(ExperimentConfig.from_dict(d), threads=threads)
            agg = res.aggregates["md_music"]
            p_param[i, j] = agg["p_param"]
            p_data[i, j] = agg["p_data"]
    return {
        "k_values": k_values,
        "n_observed_values": obs_values,
        "p_param": p_param,
        "p_data": p_data,
        "p_diff": p_param - p_data,
    }


def run_coherence_study(config: ExperimentConfig, threads: int = 1) -> list:
    """Sweep with per-point coherence diagnostics of the (deterministic)
    data matrix; rows carry the sweep value, the coherences, and the data
    recovery probability with a Wilson interval."""
    if config.sweep_param not in ("delta_f", "phi11"):
        raise ParameterError("coherence study sweeps delta_f or phi11")
    if not config.sweep_values:
        raise ParameterError("coherence study needs sweep_values")
    rows = []
    for value in config.sweep_values:
        point = _derived_point_config(config, config.sweep_param, value)
        data0 = make_trial_data(point, 0)
        mu0, mu1, mu2 = coherence_diagnostics(data0.x_star, point.k)
        res = run_scenario(point, threads=threads)
        agg = res.aggregates[point.algorithms[0]]
        wins = int(round(agg["p_data"] * agg["n_trials"]))
        lo, hi = wilson_interval(wins, agg["n_trials"])
        rows.append({
            "value": float(value), "mu0": mu0, "mu1": mu1, "mu2": mu2,
            "p_data": agg["p_data"], "wilson_lo": lo, "wilson_hi": hi,
            "n_trials": agg["n_trials"],
        })
    return rows
