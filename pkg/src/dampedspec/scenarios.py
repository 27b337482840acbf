"""Built-in experiment scenarios.

Each entry reproduces one of the reference experiments: full-data recovery,
the noisy denoising demo, missing-data recovery at two missing fractions,
the three-algorithm comparison table, the (K, |Omega|) phase transition, the
two coherence studies, and the comparisons against the undamped atomic-norm
baseline.
"""

from __future__ import annotations

from .harness import ExperimentConfig

# canonical K = 3 damped configuration
_R3 = [0.92, 0.98, 0.85]
_F3 = [0.1, 0.4, 0.8]

# damped configuration for the atomic-norm comparison (minimum separation 0.06)
_R3_ANM = [0.86, 0.92, 0.98]
_F3_ANM = [0.1, 0.16, 0.8]


def _builtin() -> dict[str, ExperimentConfig]:
    s: dict[str, ExperimentConfig] = {}

    s["full_k3"] = ExperimentConfig(
        scenario="full_k3", m=50, n=50, k=3, r_true=_R3, f_true=_F3,
        trials=50, seed=101, algorithms=("nn_music",),
    )
    s["full_k3_noisy"] = ExperimentConfig(
        scenario="full_k3_noisy", m=50, n=50, k=3, r_true=_R3, f_true=_F3,
        noise_sigma=0.1, denoise_lambda=3.9558, trials=20, seed=202,
        algorithms=("nn_music_denoise",),
    )
    # one full data matrix, masks re-randomized per trial (as in the
    # reference missing-data experiment)
    s["missing_20"] = ExperimentConfig(
        scenario="missing_20", m=50, n=50, k=3, r_true=_R3, f_true=_F3,
        missing_fraction=0.2, trials=50, seed=303, algorithms=("md_music",),
        redraw_modes=False,
    )
    s["missing_40"] = ExperimentConfig(
        scenario="missing_40", m=50, n=50, k=3, r_true=_R3, f_true=_F3,
        missing_fraction=0.4, trials=50, seed=303, algorithms=("md_music",),
        redraw_modes=False,
    )
    s["mn_music_20"] = ExperimentConfig(
        scenario="mn_music_20", m=50, n=50, k=3, r_true=_R3, f_true=_F3,
        missing_fraction=0.2, trials=20, seed=305, algorithms=("mn_music",),
    )
    # one- vs two-step comparison across missing fractions (table of
    # success probabilities; default 300 trials per cell, --trials restores
    # larger counts)
    s["table1"] = ExperimentConfig(
        scenario="table1", kind="sweep", m=50, n=20, k=3,
        r_true=_R3, f_true=_F3, trials=300, seed=404,
        algorithms=("md_music", "nnm_music", "nnm_esprit"),
        sweep_param="n_observed",
        sweep_values=[900, 800, 700, 600],  # 10/20/30/40% missing of 50x20
        nnm_options={"max_iter": 15000},
    )
    s["phase_transition"] = ExperimentConfig(
        scenario="phase_transition", kind="phase_transition", m=70, n=50,
        f_set="0.05:0.05:0.95", r_set="0.94:0.0025:1",
        trials=20, seed=505, algorithms=("md_music",),
        k_values=[1, 2, 3, 4],
        n_observed_values=[210, 350, 490, 630, 770, 910, 1050, 1190, 1330, 1470, 1610],
        nnm_options={"max_iter": 12000},
    )
    # coherence vs minimum frequency separation (70% missing, Fourier modes);
    # sweep points at half-grid offsets where the atom correlation decays
    # monotonically
    s["coherence_deltaf"] = ExperimentConfig(
        scenario="coherence_deltaf", kind="coherence", m=50, n=30, k=2,
        r_true=[1.0, 1.0], f_true=[0.1, 0.2], c_mode="ones", phi_mode="dft",
        n_observed=450, trials=200, seed=606, algorithms=("nnm_complete",),
        sweep_param="delta_f",
        sweep_values=[0.01, 0.03, 0.05, 0.07, 0.09, 0.11, 0.13, 0.15, 0.17, 0.19],
    )
    # coherence vs the magnitude of one mode-shape entry (Df = 1/M)
    s["coherence_phi"] = ExperimentConfig(
        scenario="coherence_phi", kind="coherence", m=50, n=10, k=2,
        r_true=[1.0, 1.0], f_true=[0.1, 0.12], c_mode="ones",
        phi_mode="dft_phi11", n_observed=450, trials=200, seed=707,
        algorithms=("nnm_complete",), sweep_param="phi11",
        sweep_values=[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    )
    # full-data damped comparison against the undamped atomic-norm baseline
    s["anm_full_m_sweep"] = ExperimentConfig(
        scenario="anm_full_m_sweep", kind="sweep", n=10, k=3,
        r_true=_R3_ANM, f_true=_F3_ANM, trials=100, seed=808,
        algorithms=("nn_music", "anm"), sweep_param="m",
        sweep_values=[8, 10, 12, 14, 16, 18, 20],
    )
    s["anm_full_deltaf_sweep"] = ExperimentConfig(
        scenario="anm_full_deltaf_sweep", kind="sweep", m=20, n=10, k=2,
        r_true=[0.92, 0.98], f_true=[0.1, 0.2], trials=100, seed=809,
        algorithms=("nn_music", "anm"), sweep_param="delta_f",
        sweep_values=[0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2],
    )
    # missing-data comparisons (20% / 40% removed, larger separation 0.1)
    for frac, tag, seed in ((0.2, "20", 810), (0.4, "40", 811)):
        s[f"anm_missing_{tag}_m_sweep"] = ExperimentConfig(
            scenario=f"anm_missing_{tag}_m_sweep", kind="sweep", n=10, k=3,
            r_true=_R3_ANM, f_true=[0.1, 0.2, 0.8], missing_fraction=frac,
            trials=100, seed=seed, algorithms=("md_music", "anm"),
            sweep_param="m", sweep_values=[8, 10, 12, 14, 16, 18, 20],
        )
    return s


BUILTIN_SCENARIOS = _builtin()


def get_scenario(name: str) -> ExperimentConfig:
    try:
        return BUILTIN_SCENARIOS[name]
    except KeyError:
        raise KeyError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        ) from None
