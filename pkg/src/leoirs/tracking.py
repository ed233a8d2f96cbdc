"""Frame-based beam tracking along the orbit.

A frame starts with a training period that refreshes both sides' parametric
CSI. Between trainings the satellite keeps moving, so each side predicts its
angles forward using the angular rates implied by the public orbit model and
re-solves its beams at every sample ("proposed"). The comparison mode
("benchmark") trains identically but freezes the beams for the rest of the
frame; "perfect" re-solves from ground-truth line-of-sight CSI at every
sample and upper-bounds both.

The angular rate over a frame is taken as the secant slope of the true AoA
trajectory (mode "finite_difference") or as the small-angle approximation
speed / mean distance with the sign read off the trajectory (mode
"closed_form"). Prediction is linear in time on top of the trained angles;
gain phases are not predicted, only re-estimated at frame starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .beamforming import (
    SCHEMES,
    BeamSolution,
    LocalCsi,
    SideModel,
    baseline_solution,
    mrt_mrc,
    solve_from_csi,
)
from .channels import ChannelSet, build_channel_set
from .estimation import TrainingConfig, initial_access_beams, train_both_sides
from .experiments import achievable_rate, channel_gain
from .geometry import NODES, AoAPair, ScenarioConfig, aoa_pair, mean_distance, node_position, scenario_array
from .util import substream, wrap_angle

MODES = ("proposed", "benchmark", "perfect")
INCREMENT_MODES = ("finite_difference", "closed_form")

# The peer whose motion each array tracks.
_PEER = {"gn": "sat", "irs1": "sat", "sat": "gn", "irs2": "gn"}


@dataclass(frozen=True)
class ProtocolConfig:
    """Timing and training knobs of the tracked link."""

    frame_duration_s: float = 10.0
    total_time_s: float = 40.0
    sample_interval_s: float = 0.5
    training_time_s: float = 1.0
    training: TrainingConfig = field(default_factory=TrainingConfig)
    increment_mode: str = "finite_difference"

    def __post_init__(self) -> None:
        if self.frame_duration_s <= 0 or self.total_time_s <= 0:
            raise ValueError("durations must be positive")
        if not 0 < self.sample_interval_s <= self.total_time_s:
            raise ValueError("sample interval must lie in (0, total_time]")
        if not 0 <= self.training_time_s < self.frame_duration_s:
            raise ValueError("training time must be shorter than the frame")
        if self.increment_mode not in INCREMENT_MODES:
            raise ValueError(f"increment_mode must be one of {INCREMENT_MODES}")

    @property
    def frame_count(self) -> int:
        return max(1, math.ceil(self.total_time_s / self.frame_duration_s))


@dataclass(frozen=True)
class TrackPoint:
    """One sample of the tracked link."""

    t_s: float
    gamma: float
    rate_bps_hz: float
    scheme: str
    mode: str
    frame_idx: int


@dataclass(frozen=True)
class TrackState:
    """What a frame's training leaves behind for the rest of the frame."""

    frame_idx: int
    trained_at: float
    csi_gn: LocalCsi
    csi_sat: LocalCsi
    rates: dict[str, tuple[float, float]]
    beams: BeamSolution


def increment_from_orbit(
    cfg: ScenarioConfig, node: str, t0: float, t1: float, mode: str = "finite_difference"
) -> tuple[float, float]:
    """Angular rates (dtheta/dt, dphi/dt) of ``node``'s AoA toward its peer.

    ``finite_difference`` returns the secant slope of the exact trajectory
    over [t0, t1], which doubles as the frame-average rate. ``closed_form``
    uses the transverse approximation speed / mean distance for the azimuth
    rate (sign read off an infinitesimal step) and zero elevation rate.
    """
    if node not in NODES:
        raise ValueError(f"node must be one of {NODES}")
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    if mode not in INCREMENT_MODES:
        raise ValueError(f"mode must be one of {INCREMENT_MODES}")
    peer = _PEER[node]

    def aoa_at(t: float) -> AoAPair:
        geom = scenario_array(cfg, node, t)
        if geom is None:
            raise ValueError(f"node {node!r} has no array in this configuration")
        return aoa_pair(geom, node_position(cfg, peer, t))

    a0 = aoa_at(t0)
    if mode == "finite_difference":
        a1 = aoa_at(t1)
        dt = t1 - t0
        return (wrap_angle(a1.theta_rad - a0.theta_rad) / dt, wrap_angle(a1.phi_rad - a0.phi_rad) / dt)
    eps = min(1e-3, (t1 - t0) * 1e-3)
    a_eps = aoa_at(t0 + eps)
    sign = 1.0 if wrap_angle(a_eps.theta_rad - a0.theta_rad) >= 0 else -1.0
    rate = cfg.orbit_speed_mps / mean_distance(cfg, t0, t1)
    return (sign * rate, 0.0)


def predict_aoa(aoa: AoAPair, rates: tuple[float, float], dt: float) -> AoAPair:
    """Linear angle extrapolation ``dt`` seconds past the last estimate."""
    return AoAPair(aoa.theta_rad + rates[0] * dt, aoa.phi_rad + rates[1] * dt)


def _cold_start_solution(cs: ChannelSet) -> BeamSolution:
    """Beams in force before the first training completes.

    Uniform active beams; each surface phase-conjugates its static short
    link, which needs no knowledge of the satellite position.
    """
    w2, theta2 = initial_access_beams(cs)
    if cs.m1 > 0:
        theta1 = np.conj(cs.h_bar_i1) / np.abs(cs.h_bar_i1)
    else:
        theta1 = np.zeros(0, dtype=complex)
    w1 = np.ones(cs.n1, dtype=complex) / math.sqrt(cs.n1)
    return BeamSolution(w1=w1, theta1=theta1, w2=w2, theta2=theta2)


def _advanced_csi(csi: LocalCsi, rates: dict[str, tuple[float, float]], node: str, irs: str, dt: float) -> LocalCsi:
    moved = replace(csi, aoa_node=predict_aoa(csi.aoa_node, rates[node], dt))
    if csi.aoa_irs is not None and irs in rates:
        moved = replace(moved, aoa_irs=predict_aoa(csi.aoa_irs, rates[irs], dt))
    return moved


def _train_frame(
    cfg: ScenarioConfig,
    pc: ProtocolConfig,
    seed: int,
    scheme: str,
    frame_idx: int,
    frame_start: float,
) -> TrackState:
    cs = build_channel_set(cfg, frame_start, rng=substream(seed, "train", frame_idx))
    noise_rng = substream(seed, "train-noise", frame_idx)
    csi_gn, csi_sat = train_both_sides(cs, pc.training, rng=noise_rng)
    t1 = frame_start + pc.frame_duration_s
    rates: dict[str, tuple[float, float]] = {}
    for node in NODES:
        if scenario_array(cfg, node, frame_start) is not None:
            rates[node] = increment_from_orbit(cfg, node, frame_start, t1, pc.increment_mode)
    beams = solve_from_csi(
        csi_gn,
        csi_sat,
        SideModel.from_channel_set(cs, "gn"),
        SideModel.from_channel_set(cs, "sat"),
        scheme,
    )
    return TrackState(
        frame_idx=frame_idx,
        trained_at=frame_start,
        csi_gn=csi_gn,
        csi_sat=csi_sat,
        rates=rates,
        beams=beams,
    )


def run_protocol(
    cfg: ScenarioConfig,
    pc: ProtocolConfig,
    seed: int = 0,
    scheme: str = "two_sided",
    mode: str = "proposed",
) -> list[TrackPoint]:
    """Simulate the tracked link and return one TrackPoint per sample.

    All modes see identical channel realizations at each sample (the fading
    substream is indexed by the sample counter only), so curves from
    different modes with the same seed are directly comparable. Training is
    drawn per frame, again mode-independently. Samples taken before a
    frame's training period has elapsed still use the previous frame's
    state (or the cold-start beams during the very first training).
    """
    if scheme not in SCHEMES or scheme == "random_phase":
        raise ValueError(f"scheme {scheme!r} cannot be tracked (needs CSI-driven beams)")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    n_samples = int(round(pc.total_time_s / pc.sample_interval_s))
    max_frame = pc.frame_count - 1
    state: Optional[TrackState] = None
    points: list[TrackPoint] = []
    for k in range(n_samples + 1):
        t = k * pc.sample_interval_s
        frame_idx = min(int(t // pc.frame_duration_s), max_frame)
        frame_start = frame_idx * pc.frame_duration_s
        ready_frame = frame_idx if t >= frame_start + pc.training_time_s else frame_idx - 1
        cs_t = build_channel_set(cfg, t, rng=substream(seed, "track", k))
        if mode == "perfect":
            sol = baseline_solution(cs_t, scheme)
        elif ready_frame < 0:
            sol = _cold_start_solution(cs_t)
        else:
            if state is None or state.frame_idx != ready_frame:
                cfg_frame_start = ready_frame * pc.frame_duration_s
                state = _train_frame(cfg, pc, seed, scheme, ready_frame, cfg_frame_start)
            if mode == "benchmark":
                sol = state.beams
            else:
                dt = t - state.trained_at
                csi_gn = _advanced_csi(state.csi_gn, state.rates, "gn", "irs1", dt)
                csi_sat = _advanced_csi(state.csi_sat, state.rates, "sat", "irs2", dt)
                sol = solve_from_csi(
                    csi_gn,
                    csi_sat,
                    SideModel.from_channel_set(cs_t, "gn"),
                    SideModel.from_channel_set(cs_t, "sat"),
                    scheme,
                )
        gamma = channel_gain(cs_t, sol)
        points.append(
            TrackPoint(
                t_s=t,
                gamma=gamma,
                rate_bps_hz=achievable_rate(gamma, cfg.noise_var),
                scheme=scheme,
                mode=mode,
                frame_idx=frame_idx,
            )
        )
    return points
