"""Over-the-air TDD reciprocity calibration: simulation, estimators, CRBs, benchmarks."""

from .model import (
    AntennaPartition,
    CalibrationVector,
    ChannelRealization,
    GEOMETRIC,
    GeometryConfig,
    IID_RAYLEIGH,
    ImpairmentConfig,
    RfImpairments,
    calibration_vector,
    compose_digital_channel,
    gen_channel,
    gen_impairments,
)
from .airlink import (
    ALL_ONES,
    IDENTITY,
    MeasurementSet,
    NoncoherentSchedule,
    PilotSet,
    UNIT_PHASE_RANDOM,
    default_pilots,
    measurements_to_csv,
    noise_variance_from_snr,
    simulate_exchange,
    simulate_noncoherent,
)
from .stacking import (
    StackedSystem,
    build_stacked,
    build_stacked_noncoherent,
    check_identifiability,
)
from .estimators import (
    ConstraintSpec,
    EstimationReport,
    aml_estimate,
    argos_estimate,
    avalanche_estimate,
    daisy_chain_estimate,
    ls_estimate,
    mse,
    normalize_for_constraint,
    rogalin_estimate,
)
from .crb import (
    CrbContext,
    CrbResult,
    build_composites,
    build_f_perp,
    context_from_model,
    crb_f,
    crb_f_known_h,
    fim,
    ml_compressed_cost,
)
from .grouping import (
    GroupScheme,
    brute_force_best_pair_count,
    custom_scheme,
    make_scheme,
    max_calibratable,
    optimal_group_sizes,
    scheme_from_text,
    scheme_to_text,
)
from .bench import (
    ExperimentConfig,
    ResultRow,
    ResultTable,
    UnidentifiableError,
    cli_main,
    emit_csv,
    parse_config,
    run_experiment,
)
