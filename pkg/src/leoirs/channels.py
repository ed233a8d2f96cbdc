"""Per-link channel synthesis and the effective end-to-end channel.

Six links connect the four nodes (GN, IRS-1, SAT, IRS-2):

* four long links crossing the ground/space gap (SAT-GN, SAT-IRS1, IRS2-GN,
  IRS2-IRS1), modeled as far-field rank-one outer products of array responses
  scaled by a complex path gain, optionally mixed with Rician fading;
* two short links inside each terminal cluster (IRS1-GN, SAT-IRS2), modeled
  by default as deterministic rank-one products with an element-wise
  spherical-wave variant behind a config switch.

Matrix orientation convention: ``h_xy`` maps the transmit side y to the
receive side x, i.e. rows index the first-named node's elements. All long
links share one angle pair per node (each node sees its distant peer cluster
under essentially one direction), which is what makes the two-factor
decomposition used by the beamforming module exact for consistent gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .arrays import ArrayGeometry, upa_response
from .geometry import AoAPair, ScenarioConfig, aoa_pair, distance, node_position, scenario_array
from .util import substream

_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class PathGain:
    """Complex far-field gain (sqrt(beta)/d) e^{-2j pi d / lambda} of one link."""

    value: complex
    distance_m: float


@dataclass(frozen=True)
class SplitGains:
    """Multiplicative per-node split of the four long-link gains.

    Gauge: rho_g = 1. The products rho_g*rho_s, rho_i1*rho_s and rho_g*rho_i2
    reproduce three of the link gains exactly; rho_i1*rho_i2 reproduces the
    inter-IRS gain up to ``residual`` (relative), which measures how far the
    actual geometry is from an exactly separable set of path gains.
    """

    rho_g: complex
    rho_i1: complex
    rho_s: complex
    rho_i2: complex
    residual: float


def path_gain(distance_m: float, wavelength: float, beta: float) -> PathGain:
    """Far-field path gain at the given distance."""
    if distance_m <= 0:
        raise ValueError("path gain needs a positive distance")
    if wavelength <= 0 or beta <= 0:
        raise ValueError("wavelength and beta must be positive")
    amp = math.sqrt(beta) / distance_m
    phase = -2.0 * math.pi * distance_m / wavelength
    return PathGain(value=amp * complex(math.cos(phase), math.sin(phase)), distance_m=distance_m)


def _gain_value(rho) -> complex:
    return rho.value if isinstance(rho, PathGain) else complex(rho)


def los_far_field(rho, a_rx: NDArray[np.complex128], a_tx: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rank-one far-field channel rho * a_rx a_tx^T."""
    return _gain_value(rho) * np.outer(a_rx, a_tx)


def near_field_channel(
    rx: ArrayGeometry, tx: ArrayGeometry, wavelength: float, beta: float
) -> NDArray[np.complex128]:
    """Element-wise spherical-wave channel between two arrays.

    Entry (n, m) carries the gain and phase of the exact distance between
    receive element n and transmit element m.
    """
    d = np.linalg.norm(rx.element_positions()[:, None, :] - tx.element_positions()[None, :, :], axis=2)
    if np.any(d <= 0):
        raise ValueError("arrays overlap: zero element-to-element distance")
    return (math.sqrt(beta) / d) * np.exp(-2j * math.pi * d / wavelength)


def rank_one_factors(
    rx: ArrayGeometry, tx: ArrayGeometry, wavelength: float, beta: float
) -> tuple[complex, NDArray[np.complex128], NDArray[np.complex128]]:
    """Rank-one surrogate (delta, h_rx, h_tx) of a short link.

    ``delta`` is the path gain of the reference-point distance; ``h_rx`` and
    ``h_tx`` are the arrays' far-field responses toward the other array's
    reference point. ``delta * outer(h_rx, h_tx)`` approximates the
    element-wise channel to first order in aperture/distance.
    """
    d_ref = distance(rx.origin, tx.origin)
    delta = path_gain(d_ref, wavelength, beta).value
    h_rx = upa_response(rx, aoa_pair(rx, tx.origin), wavelength)
    h_tx = upa_response(tx, aoa_pair(tx, rx.origin), wavelength)
    return delta, h_rx, h_tx


def split_path_gains(rho_gs, rho_i1s, rho_gi2, rho_i1i2) -> SplitGains:
    """Split the four long-link gains into per-node factors (gauge rho_g = 1)."""
    gs, i1s, gi2, i1i2 = (_gain_value(r) for r in (rho_gs, rho_i1s, rho_gi2, rho_i1i2))
    if any(v == 0 for v in (gs, i1s, gi2, i1i2)):
        raise ValueError("all four link gains must be nonzero")
    rho_i1 = i1s / gs
    residual = abs(rho_i1 * gi2 - i1i2) / abs(i1i2)
    return SplitGains(rho_g=1.0 + 0.0j, rho_i1=rho_i1, rho_s=gs, rho_i2=gi2, residual=float(residual))


@dataclass(frozen=True)
class ChannelSet:
    """All six link channels at one time instant plus their LoS metadata.

    The matrices may include a Rician NLoS component; the metadata (angle
    pairs, path gains, split gains, rank-one factors) always describes the
    deterministic LoS geometry and serves as estimation ground truth.
    """

    h_sg: NDArray[np.complex128]
    h_si1: NDArray[np.complex128]
    h_i2g: NDArray[np.complex128]
    h_i2i1: NDArray[np.complex128]
    h_i1g: NDArray[np.complex128]
    h_si2: NDArray[np.complex128]
    aoa_g: AoAPair
    aoa_i1: Optional[AoAPair]
    aoa_s: AoAPair
    aoa_i2: Optional[AoAPair]
    a_g: NDArray[np.complex128]
    a_i1: NDArray[np.complex128]
    a_s: NDArray[np.complex128]
    a_i2: NDArray[np.complex128]
    rho_gs: PathGain
    rho_i1s: PathGain
    rho_gi2: PathGain
    rho_i1i2: PathGain
    split: SplitGains
    delta1: complex
    h_bar_g: NDArray[np.complex128]
    h_bar_i1: NDArray[np.complex128]
    delta2: complex
    h_bar_i2: NDArray[np.complex128]
    h_bar_s: NDArray[np.complex128]
    geom_gn: ArrayGeometry
    geom_irs1: Optional[ArrayGeometry]
    geom_sat: ArrayGeometry
    geom_irs2: Optional[ArrayGeometry]
    wavelength_m: float
    kappa_linear: float
    consistent_gains: bool
    short_link_model: str

    @property
    def n1(self) -> int:
        return self.h_sg.shape[0]

    @property
    def n2(self) -> int:
        return self.h_sg.shape[1]

    @property
    def m1(self) -> int:
        return self.h_i1g.shape[1]

    @property
    def m2(self) -> int:
        return self.h_si2.shape[0]

    def dump_text(self) -> str:
        """Debug dump: one block per matrix, row-major 're,im' pairs.

        Not a stability-guaranteed format.
        """
        lines = [
            f"# channel set n1={self.n1} n2={self.n2} m1={self.m1} m2={self.m2}",
            f"# wavelength_m={self.wavelength_m!r} kappa_linear={self.kappa_linear!r}",
        ]
        for name in ("h_sg", "h_si1", "h_i2g", "h_i2i1", "h_i1g", "h_si2"):
            mat = getattr(self, name)
            lines.append(f"# {name} shape={mat.shape[0]}x{mat.shape[1]}")
            for row in mat:
                lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
        return "\n".join(lines) + "\n"


def effective_channel(
    cs: ChannelSet, theta1: NDArray[np.complex128], theta2: NDArray[np.complex128]
) -> NDArray[np.complex128]:
    """Compose the end-to-end SAT-to-GN channel for given reflection vectors.

    Four propagation terms are summed: the direct link, the single reflections
    off each surface, and the double reflection IRS-2 -> IRS-1. Products are
    associated to avoid forming any matrix larger than the inputs.
    """
    theta1 = np.asarray(theta1, dtype=complex).reshape(-1)
    theta2 = np.asarray(theta2, dtype=complex).reshape(-1)
    if theta1.shape[0] != cs.m1 or theta2.shape[0] != cs.m2:
        raise ValueError(
            f"reflection vector lengths ({theta1.shape[0]}, {theta2.shape[0]}) "
            f"do not match the IRS sizes ({cs.m1}, {cs.m2})"
        )
    for theta in (theta1, theta2):
        if theta.size and np.max(np.abs(np.abs(theta) - 1.0)) > _UNIT_TOL:
            raise ValueError("reflection coefficients must be unit modulus")
    through_i2 = theta2[:, None] * cs.h_si2  # (M2, N2)
    at_i1 = cs.h_si1 + cs.h_i2i1 @ through_i2  # (M1, N2)
    return cs.h_sg + cs.h_i2g @ through_i2 + cs.h_i1g @ (theta1[:, None] * at_i1)


def rician_mix(
    h_los: NDArray[np.complex128], kappa_linear: float, rng: Optional[np.random.Generator] = None
) -> NDArray[np.complex128]:
    """Mix a deterministic LoS matrix with i.i.d. NLoS fading.

    Returns sqrt(kappa/(1+kappa)) H_los + sqrt(1/(1+kappa)) H_nlos where the
    NLoS entries are circularly-symmetric Gaussian with per-entry variance
    equal to the mean-square of the LoS entries, so the expected Frobenius
    norm is kappa-invariant.
    """
    if kappa_linear < 0:
        raise ValueError("Rician factor must be non-negative")
    if math.isinf(kappa_linear) or h_los.size == 0:
        return h_los
    if rng is None:
        raise ValueError("finite Rician factor requires an RNG")
    entry_power = float(np.mean(np.abs(h_los) ** 2))
    scale = math.sqrt(entry_power / 2.0)
    nlos = scale * (rng.standard_normal(h_los.shape) + 1j * rng.standard_normal(h_los.shape))
    return math.sqrt(kappa_linear / (1.0 + kappa_linear)) * h_los + math.sqrt(
        1.0 / (1.0 + kappa_linear)
    ) * nlos


def build_channel_set(
    cfg: ScenarioConfig,
    t: float,
    kappa_linear: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> ChannelSet:
    """Synthesize every link at time t.

    ``kappa_linear`` overrides the config's Rician factor (pass ``math.inf``
    for a purely deterministic set). With the default ``consistent_gains``
    flag the inter-IRS gain is synthesized as the product of its split
    factors, making the gain split exactly separable; the flag ``False`` uses
    the true reference distance instead (the difference is the split
    residual, about 1e-4 for the default scenario).
    """
    kappa = cfg.kappa_linear if kappa_linear is None else float(kappa_linear)
    if not math.isinf(kappa) and rng is None:
        rng = substream(cfg.rng_seed, "channel")

    geom_gn = scenario_array(cfg, "gn", t)
    geom_irs1 = scenario_array(cfg, "irs1", t)
    geom_sat = scenario_array(cfg, "sat", t)
    geom_irs2 = scenario_array(cfg, "irs2", t)
    assert geom_gn is not None and geom_sat is not None
    p_gn = node_position(cfg, "gn", t)
    p_irs1 = node_position(cfg, "irs1", t)
    p_sat = node_position(cfg, "sat", t)
    p_irs2 = node_position(cfg, "irs2", t)

    lam, beta = cfg.wavelength_m, cfg.beta_linear
    n1, n2, m1, m2 = cfg.n1, cfg.n2, cfg.m1, cfg.m2

    # One angle pair per node, toward its distant peer node.
    aoa_g = aoa_pair(geom_gn, p_sat)
    aoa_s = aoa_pair(geom_sat, p_gn)
    a_g = upa_response(geom_gn, aoa_g, lam)
    a_s = upa_response(geom_sat, aoa_s, lam)
    if geom_irs1 is not None:
        aoa_i1 = aoa_pair(geom_irs1, p_sat)
        a_i1 = upa_response(geom_irs1, aoa_i1, lam)
    else:
        aoa_i1, a_i1 = None, np.zeros(0, dtype=complex)
    if geom_irs2 is not None:
        aoa_i2 = aoa_pair(geom_irs2, p_gn)
        a_i2 = upa_response(geom_irs2, aoa_i2, lam)
    else:
        aoa_i2, a_i2 = None, np.zeros(0, dtype=complex)

    rho_gs = path_gain(distance(p_gn, p_sat), lam, beta)
    rho_i1s = path_gain(distance(p_irs1, p_sat), lam, beta)
    rho_gi2 = path_gain(distance(p_gn, p_irs2), lam, beta)
    rho_i1i2 = path_gain(distance(p_irs1, p_irs2), lam, beta)
    split = split_path_gains(rho_gs, rho_i1s, rho_gi2, rho_i1i2)
    inter_irs_gain = split.rho_i1 * split.rho_i2 if cfg.consistent_gains else rho_i1i2.value

    h_sg = los_far_field(rho_gs, a_g, a_s)
    h_si1 = los_far_field(rho_i1s, a_i1, a_s)
    h_i2g = los_far_field(rho_gi2, a_g, a_i2)
    h_i2i1 = los_far_field(inter_irs_gain, a_i1, a_i2)

    if geom_irs1 is not None:
        delta1, h_bar_g, h_bar_i1 = rank_one_factors(geom_gn, geom_irs1, lam, beta)
        if cfg.short_link_model == "near_field":
            h_i1g = near_field_channel(geom_gn, geom_irs1, lam, beta)
        else:
            h_i1g = delta1 * np.outer(h_bar_g, h_bar_i1)
    else:
        delta1 = 0.0 + 0.0j
        h_bar_g = np.zeros(n1, dtype=complex)
        h_bar_i1 = np.zeros(0, dtype=complex)
        h_i1g = np.zeros((n1, 0), dtype=complex)
    if geom_irs2 is not None:
        delta2, h_bar_i2, h_bar_s = rank_one_factors(geom_irs2, geom_sat, lam, beta)
        if cfg.short_link_model == "near_field":
            h_si2 = near_field_channel(geom_irs2, geom_sat, lam, beta)
        else:
            h_si2 = delta2 * np.outer(h_bar_i2, h_bar_s)
    else:
        delta2 = 0.0 + 0.0j
        h_bar_i2 = np.zeros(0, dtype=complex)
        h_bar_s = np.zeros(n2, dtype=complex)
        h_si2 = np.zeros((0, n2), dtype=complex)

    if not math.isinf(kappa):
        # Fading applies to the long links only; the short in-cluster links
        # are static and assumed known offline.
        h_sg = rician_mix(h_sg, kappa, rng)
        h_si1 = rician_mix(h_si1, kappa, rng)
        h_i2g = rician_mix(h_i2g, kappa, rng)
        h_i2i1 = rician_mix(h_i2i1, kappa, rng)

    return ChannelSet(
        h_sg=h_sg,
        h_si1=h_si1,
        h_i2g=h_i2g,
        h_i2i1=h_i2i1,
        h_i1g=h_i1g,
        h_si2=h_si2,
        aoa_g=aoa_g,
        aoa_i1=aoa_i1,
        aoa_s=aoa_s,
        aoa_i2=aoa_i2,
        a_g=a_g,
        a_i1=a_i1,
        a_s=a_s,
        a_i2=a_i2,
        rho_gs=rho_gs,
        rho_i1s=rho_i1s,
        rho_gi2=rho_gi2,
        rho_i1i2=rho_i1i2,
        split=split,
        delta1=delta1,
        h_bar_g=h_bar_g,
        h_bar_i1=h_bar_i1,
        delta2=delta2,
        h_bar_i2=h_bar_i2,
        h_bar_s=h_bar_s,
        geom_gn=geom_gn,
        geom_irs1=geom_irs1,
        geom_sat=geom_sat,
        geom_irs2=geom_irs2,
        wavelength_m=lam,
        kappa_linear=kappa,
        consistent_gains=cfg.consistent_gains,
        short_link_model=cfg.short_link_model,
    )
