"""Closed-form active/passive beam design, quantization, baseline schemes.

The end-to-end channel of a consistent rank-one scenario factors into two
independent side vectors,

    f_gn(theta1)  = rho_g a_g + rho_i1 * delta1 * (h_bar_i1^T Theta1 a_i1) h_bar_g
    f_sat(theta2) = rho_s a_s + rho_i2 * delta2 * (h_bar_i2^T Theta2 a_i2) h_bar_s

with H_eff = f_gn f_sat^T, so the joint gain |w1^T H_eff w2|^2 separates into
per-side problems. Each side is solved in closed form: the reflection phases
conjugate-match the element-wise product of the two responses seen by the
surface (maximizing the coherent sum), a common phase aligns the reflected
path with the direct path, and the active beamformer is the matched filter
(MRT/MRC) on the resulting side vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .arrays import ArrayGeometry, upa_response
from .channels import ChannelSet, effective_channel
from .geometry import AoAPair
from .util import wrap_angle

SCHEMES = (
    "two_sided",
    "sat_irs_only",
    "gn_irs_only",
    "sat_reflectarray_only",
    "sat_reflectarray_gn_irs",
    "cpb_without_common_phase",
    "random_phase",
    "no_irs",
)

SIDES = ("gn", "sat")

_UNIT_TOL = 1e-10
_BRUTE_FORCE_CAP = 10**7
_CHUNK = 65536


@dataclass(frozen=True)
class LocalCsi:
    """The parametric CSI one side needs to beamform.

    Per side this is: the angle pair toward the distant peer as seen by the
    node array and by its companion surface, the phase difference
    ``delta_rho`` between the node's and the surface's split path gains, and
    (optionally) their magnitude ratio. Everything else the solver uses is
    static offline knowledge (array geometry, short-link factors).
    """

    aoa_node: AoAPair
    aoa_irs: Optional[AoAPair]
    delta_rho: float
    side: str
    gain_ratio: Optional[float] = None

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        object.__setattr__(self, "delta_rho", wrap_angle(float(self.delta_rho)))


@dataclass(frozen=True)
class SideModel:
    """Static offline knowledge of one side: geometry and short-link factors."""

    geom_node: ArrayGeometry
    geom_irs: Optional[ArrayGeometry]
    wavelength_m: float
    delta: complex
    h_node: NDArray[np.complex128]
    h_irs: NDArray[np.complex128]

    @classmethod
    def from_channel_set(cls, cs: ChannelSet, side: str) -> "SideModel":
        if side == "gn":
            return cls(cs.geom_gn, cs.geom_irs1, cs.wavelength_m, cs.delta1, cs.h_bar_g, cs.h_bar_i1)
        if side == "sat":
            return cls(cs.geom_sat, cs.geom_irs2, cs.wavelength_m, cs.delta2, cs.h_bar_s, cs.h_bar_i2)
        raise ValueError(f"side must be one of {SIDES}")

    @property
    def m(self) -> int:
        return self.h_irs.shape[0]


@dataclass(frozen=True)
class BeamSolution:
    """A complete beam configuration: two active vectors, two reflection vectors."""

    w1: NDArray[np.complex128]
    theta1: NDArray[np.complex128]
    w2: NDArray[np.complex128]
    theta2: NDArray[np.complex128]

    def __post_init__(self) -> None:
        for name in ("w1", "w2"):
            w = np.asarray(getattr(self, name), dtype=complex).reshape(-1)
            object.__setattr__(self, name, w)
            if abs(np.linalg.norm(w) - 1.0) > _UNIT_TOL:
                raise ValueError(f"{name} must have unit norm")
        for name in ("theta1", "theta2"):
            th = np.asarray(getattr(self, name), dtype=complex).reshape(-1)
            object.__setattr__(self, name, th)
            if th.size and np.max(np.abs(np.abs(th) - 1.0)) > _UNIT_TOL:
                raise ValueError(f"{name} entries must have unit modulus")


def _check_theta(theta: NDArray[np.complex128], m: int, label: str) -> NDArray[np.complex128]:
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    if theta.shape[0] != m:
        raise ValueError(f"{label} has length {theta.shape[0]}, expected {m}")
    return theta


def side_vector(cs: ChannelSet, theta: NDArray[np.complex128], side: str) -> NDArray[np.complex128]:
    """Side vector f(theta) evaluated from the stored channel matrices.

    For the GN side: rho_g a_g + rho_i1 H_i1g Theta a_i1; for the SAT side:
    rho_s a_s + rho_i2 H_si2^T Theta a_i2. On a consistent rank-one set the
    outer product of the two side vectors reproduces the effective channel.
    """
    if side == "gn":
        theta = _check_theta(theta, cs.m1, "theta1")
        return cs.split.rho_g * cs.a_g + cs.split.rho_i1 * (cs.h_i1g @ (theta * cs.a_i1))
    if side == "sat":
        theta = _check_theta(theta, cs.m2, "theta2")
        return cs.split.rho_s * cs.a_s + cs.split.rho_i2 * (cs.h_si2.T @ (theta * cs.a_i2))
    raise ValueError(f"side must be one of {SIDES}")


def mrt_mrc(f: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Matched active beamformer w = conj(f)/||f|| (so w^T f = ||f|| >= 0)."""
    f = np.asarray(f, dtype=complex).reshape(-1)
    norm = np.linalg.norm(f)
    if norm == 0:
        raise ValueError("cannot match a zero side vector")
    return np.conj(f) / norm


def optimal_passive(
    h_irs: NDArray[np.complex128], a_irs: NDArray[np.complex128], common_phase: float = 0.0
) -> NDArray[np.complex128]:
    """Reflection vector aligning every element of the reflected path.

    Returns e^{j psi} conj(h_irs * a_irs) normalized to unit modulus, which
    maximizes |h_irs^T diag(theta) a_irs| (the coherent sum reaches M).
    """
    h_irs = np.asarray(h_irs, dtype=complex).reshape(-1)
    a_irs = np.asarray(a_irs, dtype=complex).reshape(-1)
    if h_irs.shape != a_irs.shape:
        raise ValueError("response vectors must have equal length")
    prod = h_irs * a_irs
    mags = np.abs(prod)
    if np.any(mags == 0):
        raise ValueError("response entries must be nonzero")
    return np.exp(1j * common_phase) * np.conj(prod) / mags


def optimal_common_phase(
    delta_rho: float,
    delta: complex,
    a_node: NDArray[np.complex128],
    h_node: NDArray[np.complex128],
) -> tuple[float, bool]:
    """Common phase aligning the reflected path with the direct path.

    psi* = delta_rho - angle(delta * a_node^H h_node). When the two node
    responses are (numerically) orthogonal the cross term vanishes and any
    common phase is optimal; 0 is returned with the degenerate flag set.
    """
    a_node = np.asarray(a_node, dtype=complex).reshape(-1)
    h_node = np.asarray(h_node, dtype=complex).reshape(-1)
    inner = np.vdot(a_node, h_node)
    scale = np.linalg.norm(a_node) * np.linalg.norm(h_node)
    if delta == 0 or scale == 0 or abs(inner) <= 1e-12 * scale:
        return 0.0, True
    return wrap_angle(float(delta_rho) - float(np.angle(delta * inner))), False


def optimal_gain(
    n_node: int, m: int, rho_node: complex, rho_irs: complex, delta: complex, inner: complex
) -> float:
    """Closed-form maximum of ||f(theta)||^2 over unit-modulus theta.

    ``inner`` is a_node^H h_node. The three terms are the direct-path power,
    the coherently combined reflected-path power, and the aligned cross term:
    N |rho_node|^2 + N M^2 |rho_irs delta|^2 + 2 M |rho_node^* rho_irs delta inner|.
    """
    if n_node < 1:
        raise ValueError("need at least one node antenna")
    if m < 0:
        raise ValueError("element count must be >= 0")
    direct = n_node * abs(rho_node) ** 2
    if m == 0:
        return float(direct)
    reflected = n_node * (m**2) * abs(rho_irs * delta) ** 2
    cross = 2.0 * m * abs(np.conj(rho_node) * rho_irs * delta * inner)
    return float(direct + reflected + cross)


def solve_side(
    csi: LocalCsi,
    model: SideModel,
    gains: Optional[tuple[complex, complex]] = None,
    common_phase: Optional[float] = None,
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Solve one side from its local CSI: returns (theta, w).

    ``gains`` optionally supplies the exact complex (rho_node, rho_irs) pair;
    by default the gauge (1, r e^{-j delta_rho}) with r = csi.gain_ratio
    (or 1) is used, which leaves the beam directions unchanged. Passing
    ``common_phase`` overrides the optimal common phase (used by the
    no-common-phase baseline).
    """
    a_node = upa_response(model.geom_node, csi.aoa_node, model.wavelength_m)
    if model.geom_irs is None or csi.aoa_irs is None or model.m == 0:
        return np.zeros(0, dtype=complex), mrt_mrc(a_node)
    a_irs = upa_response(model.geom_irs, csi.aoa_irs, model.wavelength_m)
    if gains is None:
        ratio = 1.0 if csi.gain_ratio is None else float(csi.gain_ratio)
        rho_node, rho_irs = 1.0 + 0.0j, ratio * np.exp(-1j * csi.delta_rho)
    else:
        rho_node, rho_irs = complex(gains[0]), complex(gains[1])
    if common_phase is None:
        delta_rho = wrap_angle(float(np.angle(rho_node) - np.angle(rho_irs)))
        psi, _ = optimal_common_phase(delta_rho, model.delta, a_node, model.h_node)
    else:
        psi = float(common_phase)
    theta = optimal_passive(model.h_irs, a_irs, psi)
    coherent = np.sum(model.h_irs * theta * a_irs)
    f = rho_node * a_node + rho_irs * model.delta * coherent * model.h_node
    return theta, mrt_mrc(f)


def quantize_phases(theta: NDArray[np.complex128], k: int) -> NDArray[np.complex128]:
    """Snap each unit-modulus entry to the nearest of K uniform phase levels.

    Grid {0, 2 pi/K, ..., (K-1) 2 pi/K} under circular distance; exact ties
    resolve to the lower grid index. The per-element phase error is <= pi/K.
    """
    if k < 2:
        raise ValueError("need at least two phase levels")
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    if theta.size == 0:
        return theta.copy()
    if np.max(np.abs(np.abs(theta) - 1.0)) > 1e-6:
        raise ValueError("reflection coefficients must be unit modulus")
    step = 2.0 * math.pi / k
    raw = np.angle(theta) / step
    idx = np.floor(raw + 0.5)
    ties = idx == raw + 0.5
    idx[ties] -= 1.0
    return np.exp(1j * step * idx)


def perfect_csi(cs: ChannelSet, side: str) -> LocalCsi:
    """Ground-truth LocalCsi of one side, read off the channel metadata."""
    if side == "gn":
        rho_node, rho_irs, aoa_node, aoa_irs, m = cs.split.rho_g, cs.split.rho_i1, cs.aoa_g, cs.aoa_i1, cs.m1
    elif side == "sat":
        rho_node, rho_irs, aoa_node, aoa_irs, m = cs.split.rho_s, cs.split.rho_i2, cs.aoa_s, cs.aoa_i2, cs.m2
    else:
        raise ValueError(f"side must be one of {SIDES}")
    if m == 0 or aoa_irs is None:
        return LocalCsi(aoa_node=aoa_node, aoa_irs=None, delta_rho=0.0, side=side, gain_ratio=None)
    delta_rho = wrap_angle(float(np.angle(rho_node) - np.angle(rho_irs)))
    return LocalCsi(
        aoa_node=aoa_node,
        aoa_irs=aoa_irs,
        delta_rho=delta_rho,
        side=side,
        gain_ratio=float(abs(rho_irs / rho_node)),
    )


def _exact_gains(cs: ChannelSet, side: str) -> tuple[complex, complex]:
    if side == "gn":
        return cs.split.rho_g, cs.split.rho_i1
    return cs.split.rho_s, cs.split.rho_i2


def _reflectarray_theta(model: SideModel) -> NDArray[np.complex128]:
    """Static reflect-array profile: phase-conjugate of the short-link response."""
    return np.conj(model.h_irs) / np.abs(model.h_irs)


def solve_from_csi(
    csi_gn: LocalCsi,
    csi_sat: LocalCsi,
    model_gn: SideModel,
    model_sat: SideModel,
    scheme: str = "two_sided",
) -> BeamSolution:
    """Build a full beam configuration for a scheme from per-side CSI only."""
    if scheme in ("two_sided", "sat_irs_only", "gn_irs_only", "no_irs"):
        theta1, w1 = solve_side(csi_gn, model_gn)
        theta2, w2 = solve_side(csi_sat, model_sat)
    elif scheme == "cpb_without_common_phase":
        theta1, w1 = solve_side(csi_gn, model_gn, common_phase=0.0)
        theta2, w2 = solve_side(csi_sat, model_sat, common_phase=0.0)
    elif scheme in ("sat_reflectarray_only", "sat_reflectarray_gn_irs"):
        theta1, w1 = solve_side(csi_gn, model_gn)
        theta2 = _reflectarray_theta(model_sat)
        a_node = upa_response(model_sat.geom_node, csi_sat.aoa_node, model_sat.wavelength_m)
        if csi_sat.aoa_irs is None:
            raise ValueError(f"{scheme} requires a satellite-side surface")
        a_irs = upa_response(model_sat.geom_irs, csi_sat.aoa_irs, model_sat.wavelength_m)
        ratio = 1.0 if csi_sat.gain_ratio is None else float(csi_sat.gain_ratio)
        rho_irs = ratio * np.exp(-1j * csi_sat.delta_rho)
        coherent = np.sum(model_sat.h_irs * theta2 * a_irs)
        w2 = mrt_mrc(a_node + rho_irs * model_sat.delta * coherent * model_sat.h_node)
    else:
        raise ValueError(f"scheme {scheme!r} cannot be driven from CSI alone")
    return BeamSolution(w1=w1, theta1=theta1, w2=w2, theta2=theta2)


_SCHEME_DIM_RULES = {
    "two_sided": (True, True),
    "cpb_without_common_phase": (True, True),
    "sat_reflectarray_gn_irs": (True, True),
    "sat_irs_only": (False, True),
    "sat_reflectarray_only": (False, True),
    "gn_irs_only": (True, False),
    "no_irs": (False, False),
}


def baseline_solution(
    cs: ChannelSet, scheme: str, rng: Optional[np.random.Generator] = None
) -> BeamSolution:
    """Beam configuration of one comparison scheme under perfect CSI.

    Active beamformers are always MRT/MRC on the side vectors that result
    from the scheme's reflection choice. ``random_phase`` requires an RNG.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme != "random_phase":
        want_m1, want_m2 = _SCHEME_DIM_RULES[scheme]
        if want_m1 != (cs.m1 > 0) or want_m2 != (cs.m2 > 0):
            raise ValueError(
                f"scheme {scheme!r} needs (m1>0, m2>0) == {(want_m1, want_m2)}, "
                f"got sizes ({cs.m1}, {cs.m2})"
            )

    model_gn = SideModel.from_channel_set(cs, "gn")
    model_sat = SideModel.from_channel_set(cs, "sat")

    if scheme == "random_phase":
        if rng is None:
            raise ValueError("random_phase requires an RNG")
        theta1 = np.exp(2j * math.pi * rng.random(cs.m1))
        theta2 = np.exp(2j * math.pi * rng.random(cs.m2))
    elif scheme in ("sat_reflectarray_only", "sat_reflectarray_gn_irs"):
        theta1, _ = solve_side(perfect_csi(cs, "gn"), model_gn, gains=_exact_gains(cs, "gn"))
        theta2 = _reflectarray_theta(model_sat)
    elif scheme == "cpb_without_common_phase":
        theta1, _ = solve_side(perfect_csi(cs, "gn"), model_gn, _exact_gains(cs, "gn"), common_phase=0.0)
        theta2, _ = solve_side(perfect_csi(cs, "sat"), model_sat, _exact_gains(cs, "sat"), common_phase=0.0)
    else:
        theta1, _ = solve_side(perfect_csi(cs, "gn"), model_gn, gains=_exact_gains(cs, "gn"))
        theta2, _ = solve_side(perfect_csi(cs, "sat"), model_sat, gains=_exact_gains(cs, "sat"))

    w1 = mrt_mrc(side_vector(cs, theta1, "gn"))
    w2 = mrt_mrc(side_vector(cs, theta2, "sat"))
    return BeamSolution(w1=w1, theta1=theta1, w2=w2, theta2=theta2)


def quantized_solution(cs: ChannelSet, sol: BeamSolution, k: int, sides: tuple[str, ...] = SIDES) -> BeamSolution:
    """Quantize a solution's reflection phases and re-match the active beams."""
    theta1 = quantize_phases(sol.theta1, k) if "gn" in sides else sol.theta1
    theta2 = quantize_phases(sol.theta2, k) if "sat" in sides else sol.theta2
    return BeamSolution(
        w1=mrt_mrc(side_vector(cs, theta1, "gn")),
        theta1=theta1,
        w2=mrt_mrc(side_vector(cs, theta2, "sat")),
        theta2=theta2,
    )


def _brute_force_side(cs: ChannelSet, side: str, k: int) -> tuple[NDArray[np.complex128], float]:
    """Exhaustive per-side search over the K-level phase grid."""
    if side == "gn":
        m, rho_node, rho_irs = cs.m1, cs.split.rho_g, cs.split.rho_i1
        a_node, a_irs, link = cs.a_g, cs.a_i1, cs.h_i1g
    else:
        m, rho_node, rho_irs = cs.m2, cs.split.rho_s, cs.split.rho_i2
        a_node, a_irs, link = cs.a_s, cs.a_i2, cs.h_si2.T
    if m == 0:
        return np.zeros(0, dtype=complex), float(np.linalg.norm(rho_node * a_node) ** 2)
    total = k**m
    if total > _BRUTE_FORCE_CAP:
        raise ValueError(f"search space {k}^{m} exceeds the per-side cap of {_BRUTE_FORCE_CAP}")
    powers = k ** np.arange(m)
    best_gamma, best_idx, best_theta = -1.0, -1, None
    direct = rho_node * a_node
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        digits = (idx[:, None] // powers[None, :]) % k  # (chunk, m)
        thetas = np.exp(2j * math.pi * digits / k)
        f = direct[:, None] + rho_irs * (link @ (thetas.T * a_irs[:, None]))  # (n, chunk)
        gammas = np.sum(np.abs(f) ** 2, axis=0)
        j = int(np.argmax(gammas))
        if gammas[j] > best_gamma:
            best_gamma = float(gammas[j])
            best_idx = int(idx[j])
            best_theta = thetas[j].copy()
    assert best_theta is not None and best_idx >= 0
    return best_theta, best_gamma


def brute_force_oracle(cs: ChannelSet, k: int) -> tuple[BeamSolution, float]:
    """Global discrete optimum by exhaustive search (test oracle).

    Requires a deterministic, consistently-split rank-one channel set so the
    gain factorizes per side (the per-side maxima then compose to the joint
    maximum). The active beams are MRT/MRC at the argmax; the returned gamma
    is evaluated directly on the effective channel. Ties resolve to the
    lowest enumeration index.
    """
    if k < 2:
        raise ValueError("need at least two phase levels")
    if not math.isinf(cs.kappa_linear):
        raise ValueError("brute force oracle needs a deterministic (infinite Rician factor) set")
    if not cs.consistent_gains or cs.short_link_model != "rank_one":
        raise ValueError("brute force oracle needs consistent gains and rank-one short links")
    theta1, _ = _brute_force_side(cs, "gn", k)
    theta2, _ = _brute_force_side(cs, "sat", k)
    w1 = mrt_mrc(side_vector(cs, theta1, "gn"))
    w2 = mrt_mrc(side_vector(cs, theta2, "sat"))
    sol = BeamSolution(w1=w1, theta1=theta1, w2=w2, theta2=theta2)
    h_eff = effective_channel(cs, theta1, theta2)
    gamma = float(abs(w1 @ h_eff @ w2) ** 2)
    return sol, gamma
