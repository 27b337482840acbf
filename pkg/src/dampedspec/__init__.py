"""Damped spectral estimation via subspace methods and nuclear-norm duality.

Estimates the damping ratios and frequencies of spectrally sparse signals
from full or partially observed data: the classical MUSIC family, dual
certificates of nuclear norm minimization for both full and missing data,
closed-form nuclear-norm denoising, and an atomic-norm baseline, plus a
reproducible experiment harness (see the ``dsk`` command line tool).
"""

from .errors import EstimationError, ParameterError, RankMismatchError
from .signal_model import (
    SampleMask,
    SpectralParams,
    add_noise,
    atom_matrix,
    dft_mode_matrix,
    freq_distance,
    make_atom,
    make_hankel,
    random_mode_matrix,
    sample_mask,
    smv_signal,
    snr_db,
    synth_data_matrix,
    tilde_coeff,
    unnormalized_atom,
    vandermonde_matrix,
)
from .subspace import (
    SubspacePair,
    SvdFactors,
    dmusic_imaging,
    esprit,
    estimate_rank,
    mmv_music,
    mn_music,
    music_spectrum,
    sample_autocorrelation,
    subspace_split,
    truncated_svd,
)
from .nnm import (
    DualCertificate,
    SolveReport,
    SolverOptions,
    coherence_diagnostics,
    corollary_bound,
    full_data_dual,
    gamma_factor,
    nnm_complete,
    nnm_denoise,
    nuclear_norm,
    subspace_certificate,
    svt,
)
from .anm import ToeplitzVector, anm_dual_poly, anm_solve, default_anm_options
from .dualpoly import (
    Peak,
    PeakSet,
    RFGrid,
    eval_dual_poly,
    false_peak_filter,
    locate_peaks,
    refine_peak,
    top_local_maxima,
)
from .estimators import (
    AnmEstimator,
    DampedMusic,
    EspritEstimator,
    MDMusic,
    MNMusic,
    Music,
    NNMusic,
    NNMPlusEsprit,
    NNMPlusMusic,
)
from .harness import (
    ExperimentConfig,
    TrialResult,
    make_trial_data,
    match_params,
    rel_err,
    run_coherence_study,
    run_phase_transition,
    run_scenario,
    run_sweep,
    run_trial,
    success_frequencies,
    success_params,
)
from .scenarios import BUILTIN_SCENARIOS, get_scenario

__version__ = "0.1.0"
