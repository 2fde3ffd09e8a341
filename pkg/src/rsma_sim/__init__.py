"""Quantization-aware RSMA precoding: Q-GPI-RS solver, baselines, Monte Carlo harness."""

from .baselines import BASELINE_KINDS, baseline_precoder, normalize_power
from .channel import (
    ArrayGeometry,
    ChannelRealization,
    UserGeometry,
    draw_aods,
    effective_channel,
    half_wavelength_ula,
    kl_factorize,
    one_ring_covariance,
    sample_channel,
)
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidProfile,
    InvalidResolution,
    InvalidUser,
    ParseError,
    RankDeficient,
    RsmaSimError,
    SingularMatrix,
    ValidationError,
    ZeroChannel,
    ZeroPrecoder,
)
from .gpi import (
    QuadraticForms,
    SolveResult,
    SolverOptions,
    build_forms,
    extract_precoder,
    gpi_sem_solve,
    gpi_solve,
    init_precoder,
    kkt_matrices,
    nep_residual,
    objective,
    stack_precoder,
    stream_rates,
)
from .harness import (
    ALGORITHMS,
    ExperimentSpec,
    SummaryRow,
    TrialRecord,
    load_spec,
    read_csv,
    run_experiment,
    summarize,
    write_csv,
    write_summary_csv,
)
from .linalg import (
    BlockDiag,
    blockdiag_solve,
    canonical_phase,
    hermitian_solve,
    principal_gep_oracle,
    sample_complex_gaussian,
    seeded_rng,
    trial_rng,
)
from .quantization import (
    BETA_TABLE,
    QuantizerProfile,
    adc_noise_variance,
    beta_of_bits,
    dac_noise_covariance,
    ideal_profile,
)
from .rates import (
    RateReport,
    check_power,
    lse_min,
    rate_report,
    sinr_common,
    sinr_private,
    softmin_weights,
)

__version__ = "0.1.0"
