"""Pilot training and least-squares recovery of the per-side CSI.

Training works one side at a time. For the GN side the satellite transmits
``I_D`` unit pilots through fixed beams while IRS-1 steps through a schedule
of reflection vectors; the i-th received block is

    y_i = c0 + H_i1g (theta_i * s),      c0, s independent of i,

which stacks into the linear model y = G_bar [x_node; x_irs] + noise with
x_node = rho_bar_node a_node, x_irs = rho_bar_irs a_irs and

    G_bar = [[I, H Theta_1], [I, H Theta_2], ...].

The LS solve recovers the two stacked components, a matched-filter grid
search recovers each angle pair, projections recover the effective gains,
and their ratio yields the phase difference (the common transmit factor
cancels). The satellite side trains symmetrically on the uplink with IRS-2
scheduled and the GN transmitting through its already-optimized beams.

Identifiability: beyond the counting condition I*N >= N + M, a rank-one
short link H makes the columns of the IRS block live in span(h_node) per
pilot, so G_bar has full column rank only if the schedule matrix extended by
the all-ones column, [1, T] with T[i, m] = theta_i[m], has full column rank;
that needs I >= M + 1 pilots. The default pilot count is therefore M + 2.
The DFT schedule used here assigns element m the frequency (m+1) mod I, which
for I >= M + 1 makes [1, T] orthogonal and the normal equations diagonal.
Insufficient pilot counts are caught by an explicit rank check, not silently
accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .arrays import ArrayGeometry, upa_response
from .beamforming import BeamSolution, LocalCsi, SideModel, solve_side
from .channels import ChannelSet
from .geometry import AoAPair
from .util import wrap_angle

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_DENSE_LIMIT = 5 * 10**7  # entries; dense observation matrices beyond this are refused


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs of one training period.

    ``i_d`` / ``i_u`` are the downlink/uplink pilot counts; ``None`` selects
    M + 2 for the side's surface size. ``noise_var`` is the per-entry
    observation noise variance (normalized units; 0 = noiseless).
    ``grid_points`` and ``refine_iters`` control the angle search;
    ``in_plane`` restricts it to the scenario plane (phi = 0).
    """

    i_d: Optional[int] = None
    i_u: Optional[int] = None
    noise_var: float = 0.0
    grid_points: int = 256
    refine_iters: int = 48
    in_plane: bool = True

    def __post_init__(self) -> None:
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        if self.grid_points < 8:
            raise ValueError("need at least 8 grid points")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be non-negative")

    def pilots(self, side: str, m: int) -> int:
        configured = self.i_d if side == "gn" else self.i_u
        return int(configured) if configured is not None else m + 2


@dataclass(frozen=True)
class TrainingRecord:
    """Raw observations of one training period plus what generated them."""

    y: NDArray[np.complex128]  # stacked blocks, length I * N
    h_link: NDArray[np.complex128]  # short-link channel seen by the schedule, N x M
    schedule: NDArray[np.complex128]  # I x M, row i = theta_i
    noise_var: float
    side: str

    @property
    def n(self) -> int:
        return self.h_link.shape[0]

    @property
    def m(self) -> int:
        return self.h_link.shape[1]

    @property
    def pilots(self) -> int:
        return self.schedule.shape[0]

    @property
    def theta_schedule(self) -> list[NDArray[np.complex128]]:
        return [self.schedule[i] for i in range(self.pilots)]

    @property
    def observation_matrix(self) -> NDArray[np.complex128]:
        """Dense stacked observation matrix (small problems only)."""
        i, n, m = self.pilots, self.n, self.m
        if i * n * (n + m) > _DENSE_LIMIT:
            raise ValueError("observation matrix too large to densify; use ls_unstack")
        eye = np.eye(n, dtype=complex)
        blocks = [np.hstack([eye, self.h_link * self.schedule[k][None, :]]) for k in range(i)]
        return np.vstack(blocks)


def pilot_schedule(m: int, n: int, i: int) -> NDArray[np.complex128]:
    """Unit-modulus reflection schedule, one row per pilot.

    Row i, element m carries exp(-2j pi i ((m+1) mod I) / I): each element
    blinks at its own DFT frequency. The counting precondition i*n >= n+m is
    enforced here; the stronger rank-one identifiability condition i >= m+1
    is left to the downstream rank check so that deliberately insufficient
    schedules can be constructed and observed to fail.
    """
    if m < 0 or n < 1 or i < 1:
        raise ValueError("need m >= 0, n >= 1, i >= 1")
    if i * n < n + m:
        raise ValueError(f"identifiability violated: {i} pilots x {n} antennas < {n + m} unknowns")
    if m == 0:
        return np.ones((i, 0), dtype=complex)
    freqs = (np.arange(1, m + 1)) % i
    grid = np.outer(np.arange(i), freqs)
    return np.exp(-2j * math.pi * grid / i)


def _noise(shape: tuple[int, ...], noise_var: float, rng: Optional[np.random.Generator]):
    if noise_var == 0:
        return 0.0
    if rng is None:
        raise ValueError("noisy training requires an RNG")
    scale = math.sqrt(noise_var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def downlink_training(
    cs: ChannelSet,
    sat_beams: tuple[NDArray[np.complex128], NDArray[np.complex128]],
    tc: TrainingConfig,
    rng: Optional[np.random.Generator] = None,
) -> TrainingRecord:
    """Simulate GN-side training: SAT transmits, IRS-1 runs the schedule.

    ``sat_beams`` is the satellite's fixed (w2, theta2) pair during the
    training period. The observation is generated from the full stored
    channel matrices (including any NLoS component), not from the rank-one
    model the estimator assumes.
    """
    w2, theta2 = sat_beams
    pilots = tc.pilots("gn", cs.m1)
    schedule = pilot_schedule(cs.m1, cs.n1, pilots)
    through_i2 = np.asarray(theta2, dtype=complex) * (cs.h_si2 @ w2)  # (M2,)
    c0 = cs.h_sg @ w2 + cs.h_i2g @ through_i2  # (N1,)
    s = cs.h_si1 @ w2 + cs.h_i2i1 @ through_i2  # (M1,)
    blocks = c0[None, :] + (schedule * s[None, :]) @ cs.h_i1g.T  # (I, N1)
    blocks = blocks + _noise(blocks.shape, tc.noise_var, rng)
    return TrainingRecord(
        y=blocks.reshape(-1), h_link=cs.h_i1g, schedule=schedule, noise_var=tc.noise_var, side="gn"
    )


def uplink_training(
    cs: ChannelSet,
    gn_beams: tuple[NDArray[np.complex128], NDArray[np.complex128]],
    tc: TrainingConfig,
    rng: Optional[np.random.Generator] = None,
) -> TrainingRecord:
    """Simulate SAT-side training: GN transmits, IRS-2 runs the schedule."""
    w1, theta1 = gn_beams
    pilots = tc.pilots("sat", cs.m2)
    schedule = pilot_schedule(cs.m2, cs.n2, pilots)
    through_i1 = np.asarray(theta1, dtype=complex) * (cs.h_i1g.T @ w1)  # (M1,)
    c0 = cs.h_sg.T @ w1 + cs.h_si1.T @ through_i1  # (N2,)
    s = cs.h_i2g.T @ w1 + cs.h_i2i1.T @ through_i1  # (M2,)
    blocks = c0[None, :] + (schedule * s[None, :]) @ cs.h_si2  # (I, N2)
    blocks = blocks + _noise(blocks.shape, tc.noise_var, rng)
    return TrainingRecord(
        y=blocks.reshape(-1), h_link=cs.h_si2.T, schedule=schedule, noise_var=tc.noise_var, side="sat"
    )


def ls_unstack(rec: TrainingRecord) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Least-squares split of the stacked observation into its two components.

    Solves the normal equations of the stacked model without forming the
    dense observation matrix: with T the schedule and s = sum_i theta_i,

        G^H G = [[I_pilots * I_N,    H diag(s)],
                 [diag(s)^H H^H,     (H^H H) o (T^H T)]]

    (o = entrywise product). Raises if the system is numerically
    rank-deficient, which is how insufficient pilot counts surface.
    """
    i, n, m = rec.pilots, rec.n, rec.m
    blocks = rec.y.reshape(i, n)
    if m == 0:
        return blocks.mean(axis=0), np.zeros(0, dtype=complex)
    h = rec.h_link
    t = rec.schedule
    s_sum = t.sum(axis=0)
    gram = np.empty((n + m, n + m), dtype=complex)
    gram[:n, :n] = i * np.eye(n)
    cross = h * s_sum[None, :]
    gram[:n, n:] = cross
    gram[n:, :n] = cross.conj().T
    gram[n:, n:] = (h.conj().T @ h) * (t.conj().T @ t)
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 1e-10 * eigs[-1]:
        raise ValueError(
            "observation matrix is rank-deficient: the pilot schedule cannot "
            "separate the node and surface components (need more pilots)"
        )
    rhs = np.empty(n + m, dtype=complex)
    rhs[:n] = blocks.sum(axis=0)
    rhs[n:] = np.einsum("im,mi->m", t.conj(), h.conj().T @ blocks.T)
    z = np.linalg.solve(gram, rhs)
    return z[:n], z[n:]


def _grid(lo: float, hi: float, count: int) -> NDArray[np.float64]:
    return np.linspace(lo, hi, count, endpoint=False)


def _golden_max(fun, lo: float, hi: float, iters: int) -> float:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def estimate_aoa(
    y: NDArray[np.complex128], geom: ArrayGeometry, wavelength: float, tc: TrainingConfig
) -> AoAPair:
    """Matched-filter angle estimate from one recovered array component.

    Grid search of |a(theta, phi)^H y| followed by golden-section refinement
    around the best cell. The in-plane mode searches theta only (phi = 0).
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.shape[0] != geom.size:
        raise ValueError("observation length does not match the array size")
    if not np.any(y):
        raise ValueError("cannot estimate an angle from an all-zero observation")

    def metric(theta: float, phi: float) -> float:
        a = upa_response(geom, AoAPair(theta, phi), wavelength)
        return float(abs(np.vdot(a, y)))

    thetas = _grid(-math.pi, math.pi, tc.grid_points)
    if tc.in_plane:
        scores = [metric(th, 0.0) for th in thetas]
        best = int(np.argmax(scores))
        cell = 2.0 * math.pi / tc.grid_points
        theta_hat = _golden_max(lambda th: metric(th, 0.0), thetas[best] - cell, thetas[best] + cell, tc.refine_iters)
        return AoAPair(theta_hat, 0.0)
    phis = np.linspace(-math.pi / 2, math.pi / 2, max(9, tc.grid_points // 4))
    best_score, best_th, best_ph = -1.0, 0.0, 0.0
    for ph in phis:
        for th in thetas:
            sc = metric(th, ph)
            if sc > best_score:
                best_score, best_th, best_ph = sc, th, ph
    cell_t = 2.0 * math.pi / tc.grid_points
    cell_p = math.pi / max(8, tc.grid_points // 4 - 1)
    theta_hat, phi_hat = best_th, best_ph
    for _ in range(2):
        theta_hat = _golden_max(lambda th: metric(th, phi_hat), theta_hat - cell_t, theta_hat + cell_t, tc.refine_iters)
        phi_hat = _golden_max(
            lambda ph: metric(theta_hat, ph),
            max(-math.pi / 2, phi_hat - cell_p),
            min(math.pi / 2, phi_hat + cell_p),
            tc.refine_iters,
        )
    return AoAPair(theta_hat, phi_hat)


def estimate_path_gains(
    y_node: NDArray[np.complex128],
    y_irs: NDArray[np.complex128],
    aoa_node: AoAPair,
    aoa_irs: Optional[AoAPair],
    geom_node: ArrayGeometry,
    geom_irs: Optional[ArrayGeometry],
    wavelength: float,
) -> tuple[complex, complex]:
    """Projection estimates of the effective gains: a^H y / count."""
    a_node = upa_response(geom_node, aoa_node, wavelength)
    rho_node = complex(np.vdot(a_node, y_node) / geom_node.size)
    if geom_irs is None or aoa_irs is None or y_irs.size == 0:
        return rho_node, 0.0 + 0.0j
    a_irs = upa_response(geom_irs, aoa_irs, wavelength)
    rho_irs = complex(np.vdot(a_irs, y_irs) / geom_irs.size)
    return rho_node, rho_irs


def phase_diff(rho_node_hat: complex, rho_irs_hat: complex) -> float:
    """Phase difference angle(rho_node) - angle(rho_irs), wrapped to [-pi, pi)."""
    if rho_node_hat == 0 or rho_irs_hat == 0:
        raise ValueError("phase difference of a zero gain is undefined")
    return wrap_angle(float(np.angle(rho_node_hat) - np.angle(rho_irs_hat)))


def estimate_local_csi(
    cs: ChannelSet,
    side: str,
    peer_solution: tuple[NDArray[np.complex128], NDArray[np.complex128]],
    tc: TrainingConfig,
    rng: Optional[np.random.Generator] = None,
) -> LocalCsi:
    """One full training period for one side: train, unstack, estimate.

    ``peer_solution`` is the transmitting side's fixed (w, theta) during the
    period: (w2, theta2) of the satellite for side="gn", (w1, theta1) of the
    ground node for side="sat".
    """
    if side == "gn":
        rec = downlink_training(cs, peer_solution, tc, rng)
        geom_node, geom_irs = cs.geom_gn, cs.geom_irs1
    elif side == "sat":
        rec = uplink_training(cs, peer_solution, tc, rng)
        geom_node, geom_irs = cs.geom_sat, cs.geom_irs2
    else:
        raise ValueError("side must be 'gn' or 'sat'")
    y_node, y_irs = ls_unstack(rec)
    aoa_node = estimate_aoa(y_node, geom_node, cs.wavelength_m, tc)
    if geom_irs is None or y_irs.size == 0:
        return LocalCsi(aoa_node=aoa_node, aoa_irs=None, delta_rho=0.0, side=side, gain_ratio=None)
    aoa_irs = estimate_aoa(y_irs, geom_irs, cs.wavelength_m, tc)
    rho_node, rho_irs = estimate_path_gains(
        y_node, y_irs, aoa_node, aoa_irs, geom_node, geom_irs, cs.wavelength_m
    )
    return LocalCsi(
        aoa_node=aoa_node,
        aoa_irs=aoa_irs,
        delta_rho=phase_diff(rho_node, rho_irs),
        side=side,
        gain_ratio=float(abs(rho_irs / rho_node)),
    )


def initial_access_beams(cs: ChannelSet) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Pre-designed satellite beams for the very first downlink training.

    The reflect profile conjugate-matches the offline-known short link and
    the active beam is uniform; any fixed nonzero choice only rescales the
    effective gains, which cancels in the phase-difference estimate.
    """
    if cs.m2 > 0:
        theta2 = np.conj(cs.h_bar_i2) / np.abs(cs.h_bar_i2)
    else:
        theta2 = np.zeros(0, dtype=complex)
    w2 = np.ones(cs.n2, dtype=complex) / math.sqrt(cs.n2)
    return w2, theta2


def train_both_sides(
    cs: ChannelSet,
    tc: TrainingConfig,
    rng: Optional[np.random.Generator] = None,
    sat_beams: Optional[tuple[NDArray[np.complex128], NDArray[np.complex128]]] = None,
) -> tuple[LocalCsi, LocalCsi]:
    """One complete training period: downlink first, then uplink.

    The satellite transmits with ``sat_beams`` (default: the initial-access
    design); the GN estimates its CSI, solves its side, and transmits the
    uplink pilots through the solved beams for the satellite's estimation.
    """
    if sat_beams is None:
        sat_beams = initial_access_beams(cs)
    csi_gn = estimate_local_csi(cs, "gn", sat_beams, tc, rng)
    theta1, w1 = solve_side(csi_gn, SideModel.from_channel_set(cs, "gn"))
    csi_sat = estimate_local_csi(cs, "sat", (w1, theta1), tc, rng)
    return csi_gn, csi_sat
