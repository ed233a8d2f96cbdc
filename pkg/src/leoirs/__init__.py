"""Link-level simulator for a LEO satellite downlink aided by two cooperating
intelligent reflecting surfaces (one next to the ground node, one flying with
the satellite).

The package is organized bottom-up:

``util``         dB helpers, angle wrapping, seeded RNG substreams
``arrays``       uniform planar array geometry and responses
``geometry``     circular-orbit propagation, node placement, angle pairs
``channels``     per-link channel synthesis and the effective end-to-end channel
``beamforming``  closed-form active/passive beam design and baseline schemes
``estimation``   pilot training and least-squares recovery of the local CSI
``tracking``     angle prediction between training periods, frame protocol
``experiments``  sweeps, Monte Carlo averaging, metrics
``figures``      matplotlib rendering of result tables
``cli``          command line front end (``leoirs``)
"""

from .arrays import ArrayGeometry, steering_vector, upa_response
from .beamforming import (
    SCHEMES,
    BeamSolution,
    LocalCsi,
    SideModel,
    baseline_solution,
    brute_force_oracle,
    mrt_mrc,
    optimal_common_phase,
    optimal_gain,
    optimal_passive,
    perfect_csi,
    quantize_phases,
    quantized_solution,
    side_vector,
    solve_from_csi,
    solve_side,
)
from .channels import (
    ChannelSet,
    PathGain,
    SplitGains,
    build_channel_set,
    effective_channel,
    los_far_field,
    near_field_channel,
    path_gain,
    rank_one_factors,
    rician_mix,
    split_path_gains,
)
from .estimation import (
    TrainingConfig,
    TrainingRecord,
    downlink_training,
    estimate_aoa,
    estimate_local_csi,
    estimate_path_gains,
    initial_access_beams,
    ls_unstack,
    phase_diff,
    pilot_schedule,
    train_both_sides,
    uplink_training,
)
from .experiments import (
    ResultRow,
    SweepSpec,
    achievable_rate,
    apply_scheme_dims,
    channel_gain,
    config_for,
    run_sweep,
    run_tracking_experiment,
    scheme_dims,
    split_elements,
)
from .geometry import (
    AoAPair,
    ScenarioConfig,
    aoa_pair,
    distance,
    mean_distance,
    node_position,
    orbital_period,
    satellite_position,
    scenario_array,
)
from .tracking import (
    ProtocolConfig,
    TrackPoint,
    TrackState,
    increment_from_orbit,
    predict_aoa,
    run_protocol,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "AoAPair",
    "BeamSolution",
    "ChannelSet",
    "LocalCsi",
    "PathGain",
    "ProtocolConfig",
    "ResultRow",
    "SCHEMES",
    "ScenarioConfig",
    "SideModel",
    "SplitGains",
    "SweepSpec",
    "TrackPoint",
    "TrackState",
    "TrainingConfig",
    "TrainingRecord",
    "achievable_rate",
    "aoa_pair",
    "apply_scheme_dims",
    "baseline_solution",
    "brute_force_oracle",
    "build_channel_set",
    "channel_gain",
    "config_for",
    "distance",
    "downlink_training",
    "effective_channel",
    "estimate_aoa",
    "estimate_local_csi",
    "estimate_path_gains",
    "increment_from_orbit",
    "initial_access_beams",
    "los_far_field",
    "ls_unstack",
    "mean_distance",
    "mrt_mrc",
    "near_field_channel",
    "node_position",
    "optimal_common_phase",
    "optimal_gain",
    "optimal_passive",
    "orbital_period",
    "path_gain",
    "perfect_csi",
    "phase_diff",
    "pilot_schedule",
    "predict_aoa",
    "quantize_phases",
    "quantized_solution",
    "rank_one_factors",
    "rician_mix",
    "run_protocol",
    "run_sweep",
    "run_tracking_experiment",
    "satellite_position",
    "scenario_array",
    "scheme_dims",
    "side_vector",
    "solve_from_csi",
    "solve_side",
    "split_elements",
    "split_path_gains",
    "steering_vector",
    "train_both_sides",
    "upa_response",
    "uplink_training",
]
