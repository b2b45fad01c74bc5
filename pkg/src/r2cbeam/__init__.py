"""Radar-aided mmWave V2I beam training at desk scale.

Paired radar/comm scenario generation, spatial covariance tooling, two small
radar-to-comm translation networks trained from scratch, and an overhead-aware
beam training rate experiment.
"""

from .covariance import (
    CovarianceMatrix,
    NonConvergenceWarning,
    NotToeplitzError,
    ToeplitzColumn,
    comm_covariance,
    first_column,
    project_toeplitz_psd,
    sample_covariance,
    toeplitz_from_column,
)
from .scenario import (
    ChannelFreq,
    ChannelTaps,
    GeneratorConfig,
    MismatchConfig,
    PathCluster,
    PathRay,
    PulseConfig,
    RadarSimConfig,
    ScenarioSample,
    UlaConfig,
    channel_freq_response,
    channel_taps,
    generate_paired_scenario,
    raised_cosine,
    simulate_radar_snapshots,
    steering_vector,
)
from .spectrum import (
    Aps,
    DftGrid,
    aps,
    aps_linear_map,
    dft_grid,
    from_log_scale,
    similarity,
    to_log_scale,
    top_indices,
)
from .neuralnet import (
    AdamState,
    DivergedLossError,
    LayerSpec,
    NetworkParams,
    TrainConfig,
    adam_step,
    aps_net_apply,
    col_aps_loss,
    col_net_apply,
    grad_check,
    layer_backward,
    layer_forward,
    mse_loss,
    train,
)
from .beamtraining import (
    Codebook,
    MissingModelError,
    RateConfig,
    RateRow,
    SearchResult,
    StrategyInputs,
    beam_search,
    build_codebook,
    candidate_window,
    effective_rate,
    reference_angle,
    run_strategy,
    spectral_efficiency,
)

__version__ = "0.1.0"
