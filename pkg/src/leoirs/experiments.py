"""Monte-Carlo experiment drivers: link metrics, sweeps, comparisons.

A sweep point is (variable value, scheme); the driver averages the link gain
and achievable rate over paired fading trials. Trial pairing comes from the
seed substream layout: trial k at sweep point j always draws from
substream(seed, "sweep", j, k) regardless of scheme, so schemes with the
same surface dimensions see identical channel realizations and their rate
differences are free of trial-to-trial noise.

To compare schemes at a common hardware budget, the total element count is
reapportioned per scheme (both surfaces, one surface, or none) and each
share is arranged into the most square grid that divides it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .beamforming import SCHEMES, BeamSolution, baseline_solution, quantized_solution
from .channels import ChannelSet, build_channel_set
from .geometry import ScenarioConfig
from .util import substream

SWEEP_KINDS = ("tx_power_dbm", "elements_total", "time_s")

# Sides whose reflection profile is re-gridded under phase quantization.
# Reflect-array profiles model a fixed analog surface and stay continuous;
# random profiles are already arbitrary, so re-gridding them says nothing.
_QUANTIZE_SIDES = {
    "two_sided": ("gn", "sat"),
    "sat_irs_only": ("sat",),
    "gn_irs_only": ("gn",),
    "no_irs": (),
    "sat_reflectarray_gn_irs": ("gn",),
    "sat_reflectarray_only": (),
    "cpb_without_common_phase": ("gn", "sat"),
    "random_phase": (),
}


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: a variable, its values, and the schemes to compare."""

    kind: str
    values: tuple[float, ...]
    schemes: tuple[str, ...]
    base: ScenarioConfig
    trials: int = 100
    t_s: float = 10.0
    phase_levels: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if not self.schemes:
            raise ValueError("sweep needs at least one scheme")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.phase_levels is not None and self.phase_levels < 2:
            raise ValueError("phase_levels must be at least 2")
        if self.kind == "elements_total":
            for v in self.values:
                if v != int(v) or v < 0:
                    raise ValueError("element counts must be non-negative integers")


@dataclass(frozen=True)
class ResultRow:
    """One output record: a point of the sweep for one scheme."""

    variable: str
    scheme: str
    value: float
    gamma: float
    rate_bps_hz: float
    trials: int
    seed: int


def channel_gain(cs: ChannelSet, sol: BeamSolution) -> float:
    """Beamformed link gain |w1^T H_eff(theta1, theta2) w2|^2.

    Applies the composite channel to the transmit beam block by block rather
    than forming the effective matrix, so the cost stays linear in each
    matrix size.
    """
    w1 = np.asarray(sol.w1, dtype=complex)
    w2 = np.asarray(sol.w2, dtype=complex)
    theta1 = np.asarray(sol.theta1, dtype=complex)
    theta2 = np.asarray(sol.theta2, dtype=complex)
    through_i2 = theta2 * (cs.h_si2 @ w2)
    at_gn = cs.h_sg @ w2 + cs.h_i2g @ through_i2
    at_i1 = cs.h_si1 @ w2 + cs.h_i2i1 @ through_i2
    received = at_gn + cs.h_i1g @ (theta1 * at_i1)
    return float(abs(w1 @ received) ** 2)


def achievable_rate(gamma: float, noise_var: float) -> float:
    """Spectral efficiency log2(1 + gamma / noise_var) in bps/Hz."""
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    return math.log2(1.0 + gamma / noise_var)


def split_elements(total: int) -> tuple[int, int]:
    """Arrange ``total`` elements into the most square integer grid.

    Returns (nx, ny) with nx <= ny, nx the largest divisor of ``total`` not
    exceeding its square root. Zero maps to (0, 0).
    """
    if total < 0:
        raise ValueError("element count must be non-negative")
    if total == 0:
        return (0, 0)
    nx = 1
    for d in range(1, math.isqrt(total) + 1):
        if total % d == 0:
            nx = d
    return (nx, total // nx)


def scheme_dims(scheme: str, m_total: int) -> tuple[int, int]:
    """Element budget (GN surface, SAT surface) for a scheme.

    Two-surface schemes split the budget as evenly as possible; one-surface
    schemes concentrate it; ``no_irs`` uses none.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme in ("sat_irs_only", "sat_reflectarray_only"):
        return (0, m_total)
    if scheme == "gn_irs_only":
        return (m_total, 0)
    if scheme == "no_irs":
        return (0, 0)
    return (m_total // 2, m_total - m_total // 2)


def apply_scheme_dims(cfg: ScenarioConfig, scheme: str, m_total: int) -> ScenarioConfig:
    """Rewrite the surface grids of ``cfg`` for one scheme's element share.

    A share that already matches a surface's configured size keeps that
    surface's explicit grid; only reapportioned shares get the square split.
    """
    m1, m2 = scheme_dims(scheme, m_total)
    m1x, m1y = (cfg.m1x, cfg.m1y) if m1 == cfg.m1 else split_elements(m1)
    m2x, m2y = (cfg.m2x, cfg.m2y) if m2 == cfg.m2 else split_elements(m2)
    return replace(cfg, m1x=m1x, m1y=m1y, m2x=m2x, m2y=m2y)


def config_for(spec: SweepSpec, value: float) -> tuple[ScenarioConfig, float]:
    """Scenario and evaluation time for one sweep value (scheme-independent)."""
    if spec.kind == "tx_power_dbm":
        return replace(spec.base, tx_power_dbm=float(value)), spec.t_s
    if spec.kind == "time_s":
        return spec.base, float(value)
    return spec.base, spec.t_s  # elements_total: dims applied per scheme


def run_sweep(spec: SweepSpec, seed: int = 0) -> list[ResultRow]:
    """Run the sweep and return one averaged row per (value, scheme)."""
    rows: list[ResultRow] = []
    base_total = spec.base.m1 + spec.base.m2
    for j, value in enumerate(spec.values):
        cfg_point, t_eval = config_for(spec, value)
        for scheme in spec.schemes:
            m_total = int(value) if spec.kind == "elements_total" else base_total
            cfg = apply_scheme_dims(cfg_point, scheme, m_total)
            gammas = np.empty(spec.trials)
            rates = np.empty(spec.trials)
            for trial in range(spec.trials):
                cs = build_channel_set(cfg, t_eval, rng=substream(seed, "sweep", j, trial))
                scheme_rng = (
                    substream(seed, "scheme", j, trial) if scheme == "random_phase" else None
                )
                sol = baseline_solution(cs, scheme, rng=scheme_rng)
                if spec.phase_levels is not None:
                    sides = _QUANTIZE_SIDES[scheme]
                    if sides:
                        sol = quantized_solution(cs, sol, spec.phase_levels, sides=sides)
                gammas[trial] = channel_gain(cs, sol)
                rates[trial] = achievable_rate(gammas[trial], cfg.noise_var)
            rows.append(
                ResultRow(
                    variable=spec.kind,
                    scheme=scheme,
                    value=float(value),
                    gamma=float(gammas.mean()),
                    rate_bps_hz=float(rates.mean()),
                    trials=spec.trials,
                    seed=seed,
                )
            )
    return rows


def run_tracking_experiment(
    cfg: ScenarioConfig,
    pc,
    seed: int = 0,
    schemes: tuple[str, ...] = ("two_sided",),
    modes: tuple[str, ...] = ("proposed", "benchmark"),
) -> list[ResultRow]:
    """Time series of the tracked link for each (scheme, mode) pair.

    Returns one row per protocol sample with the scheme column encoded as
    ``scheme:mode`` so a flat table holds every curve. ``pc`` is a
    tracking.ProtocolConfig; the import is deferred to keep the module
    dependency one-way.
    """
    from .tracking import run_protocol

    rows: list[ResultRow] = []
    m_total = cfg.m1 + cfg.m2
    for scheme in schemes:
        cfg_s = apply_scheme_dims(cfg, scheme, m_total)
        for mode in modes:
            for pt in run_protocol(cfg_s, pc, seed=seed, scheme=scheme, mode=mode):
                rows.append(
                    ResultRow(
                        variable="time_s",
                        scheme=f"{scheme}:{mode}",
                        value=pt.t_s,
                        gamma=pt.gamma,
                        rate_bps_hz=pt.rate_bps_hz,
                        trials=1,
                        seed=seed,
                    )
                )
    return rows
