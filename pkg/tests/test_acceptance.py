"""End-to-end acceptance suite: the package's top-level guarantees.

Each test checks one advertised property of the simulator/algorithm stack
and appends a single verdict line to ``conftest.ACCEPTANCE_REPORT``; the
collected lines are echoed in one block after the run. Where a runtime
budget is part of the guarantee it is measured and enforced here as well.

Criterion 5 is deliberately soft: the modeled fading statistics make the
exact size of the common-phase power gain sensitive to the NLoS convention,
so an out-of-band value raises a warning instead of failing the suite.
"""

from __future__ import annotations

import math
import time
import warnings

import numpy as np

from conftest import ACCEPTANCE_REPORT

from leoirs.arrays import steering_vector, upa_response
from leoirs.beamforming import (
    SideModel,
    baseline_solution,
    brute_force_oracle,
    mrt_mrc,
    quantize_phases,
    quantized_solution,
    side_vector,
    solve_from_csi,
)
from leoirs.channels import build_channel_set, effective_channel
from leoirs.estimation import (
    TrainingConfig,
    downlink_training,
    initial_access_beams,
    train_both_sides,
    uplink_training,
)
from leoirs.experiments import SweepSpec, channel_gain, run_sweep
from leoirs.geometry import AoAPair, ScenarioConfig, orbital_period, satellite_position
from leoirs.tracking import ProtocolConfig, run_protocol
from leoirs.util import substream


def _verdict(
    num: int,
    name: str,
    failures: list[str],
    detail: str,
    elapsed: float | None = None,
    budget: float | None = None,
    soft: bool = False,
) -> None:
    """Record one pass/fail line for a criterion, then enforce it."""
    failures = list(failures)
    if budget is not None and elapsed is not None and elapsed > budget:
        failures.append(f"runtime {elapsed:.1f}s exceeds the {budget:.0f}s budget")
    status = "PASS" if not failures else ("WARN" if soft else "FAIL")
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.1f}s" + (f" / {budget:.0f}s budget]" if budget is not None else "]")
    ACCEPTANCE_REPORT.append(f"{status}  criterion {num} ({name}): {detail}{timing}")
    if soft:
        if failures:
            warnings.warn(f"criterion {num} ({name}) outside its soft band: " + "; ".join(failures))
        return
    assert not failures, f"criterion {num} ({name}): " + "; ".join(failures)


# ---------------------------------------------------------------------------
# 1. Closed-form solution dominates the exhaustive discrete search
# ---------------------------------------------------------------------------

_TINY = dict(
    n1x=2, n1y=1, n2x=2, n2y=1, m1x=2, m1y=1, m2x=2, m2y=1, rician_factor_db=math.inf
)


def test_criterion_1_discrete_search_bounds():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260819)
    q_floor = math.cos(math.pi / 16) ** 4
    failures: list[str] = []
    worst_gap64 = 0.0
    worst_q_ratio = math.inf
    instances = 20
    for i in range(instances):
        t = float(rng.uniform(0.0, 240.0))
        offset = tuple(float(x) for x in rng.uniform(1.0, 8.0, size=3))
        cfg = ScenarioConfig(sat_offset_m=offset, **_TINY)
        cs = build_channel_set(cfg, t)
        sol_star = baseline_solution(cs, "two_sided")
        gamma_star = channel_gain(cs, sol_star)
        _, gamma_bf16 = brute_force_oracle(cs, 16)
        _, gamma_bf64 = brute_force_oracle(cs, 64)
        gamma_q = channel_gain(cs, quantized_solution(cs, sol_star, 16))
        if gamma_star < gamma_bf16 * (1.0 - 1e-12):
            failures.append(
                f"instance {i}: continuous optimum {gamma_star:.9g} is below the "
                f"16-level exhaustive optimum {gamma_bf16:.9g}"
            )
        if gamma_q < q_floor * gamma_bf16:
            failures.append(
                f"instance {i}: 16-level quantized gain {gamma_q:.9g} is below "
                f"cos^4(pi/16) x exhaustive optimum = {q_floor * gamma_bf16:.9g}"
            )
        gap64 = (gamma_star - gamma_bf64) / gamma_bf64
        if not -1e-12 <= gap64 <= 5e-3:
            failures.append(
                f"instance {i}: 64-level exhaustive optimum is {gap64:.3%} away from "
                "the continuous optimum (allowed 0.5%)"
            )
        worst_gap64 = max(worst_gap64, abs(gap64))
        worst_q_ratio = min(worst_q_ratio, gamma_q / gamma_bf16)
    elapsed = time.perf_counter() - t0
    detail = (
        f"{instances} random tiny instances: continuous >= 16-level exhaustive optimum; "
        f"worst quantized/exhaustive ratio {worst_q_ratio:.4f} (floor {q_floor:.4f}); "
        f"worst 64-level gap {worst_gap64:.3%} (allowed 0.5%)"
    )
    _verdict(1, "discrete search bounds", failures, detail, elapsed, 10.0)


# ---------------------------------------------------------------------------
# 2. Beamformed gain factorizes into the two per-side gains
# ---------------------------------------------------------------------------


def test_criterion_2_per_side_factorization(cs_los_t10):
    t0 = time.perf_counter()
    cs = cs_los_t10
    rng = np.random.default_rng(4242)
    worst = 0.0
    for _ in range(100):
        theta1 = np.exp(2j * math.pi * rng.random(cs.m1))
        theta2 = np.exp(2j * math.pi * rng.random(cs.m2))
        f1 = side_vector(cs, theta1, "gn")
        f2 = side_vector(cs, theta2, "sat")
        w1, w2 = mrt_mrc(f1), mrt_mrc(f2)
        h_eff = effective_channel(cs, theta1, theta2)
        gamma = float(abs(w1 @ h_eff @ w2) ** 2)
        product = float(np.linalg.norm(f1) ** 2) * float(np.linalg.norm(f2) ** 2)
        worst = max(worst, abs(gamma - product) / product)
    failures = []
    if worst > 1e-9:
        failures.append(f"worst relative factorization error {worst:.3e} exceeds 1e-9")
    elapsed = time.perf_counter() - t0
    detail = (
        "100 random reflection pairs on the deterministic full-size set at t = 10 s: "
        f"worst relative error of gamma = gamma1*gamma2 under matched active beams {worst:.2e}"
    )
    _verdict(2, "per-side gain factorization", failures, detail, elapsed, 5.0)


# ---------------------------------------------------------------------------
# 3. Rate gained by doubling the total element budget
# ---------------------------------------------------------------------------


def test_criterion_3_element_doubling_rate_delta():
    t0 = time.perf_counter()
    spec = SweepSpec(
        kind="elements_total",
        values=(1400.0, 2800.0),
        schemes=("two_sided", "sat_irs_only"),
        base=ScenarioConfig(),
        trials=100,
    )
    rows = run_sweep(spec, seed=11)
    rate = {(int(r.value), r.scheme): r.rate_bps_hz for r in rows}
    d_two = rate[(2800, "two_sided")] - rate[(1400, "two_sided")]
    d_sat = rate[(2800, "sat_irs_only")] - rate[(1400, "sat_irs_only")]
    failures = []
    if not 3.5 <= d_two <= 4.5:
        failures.append(f"two_sided rate delta {d_two:.3f} bps/Hz outside [3.5, 4.5]")
    if not 1.5 <= d_sat <= 2.5:
        failures.append(f"sat_irs_only rate delta {d_sat:.3f} bps/Hz outside [1.5, 2.5]")
    elapsed = time.perf_counter() - t0
    detail = (
        "doubling 1400 -> 2800 elements over 100 trials: "
        f"two_sided +{d_two:.2f} bps/Hz (band [3.5, 4.5]); "
        f"sat_irs_only +{d_sat:.2f} bps/Hz (band [1.5, 2.5])"
    )
    _verdict(3, "element doubling rate delta", failures, detail, elapsed, 300.0)


# ---------------------------------------------------------------------------
# 4. Mean-rate ordering of the comparison schemes
# ---------------------------------------------------------------------------


def test_criterion_4_scheme_ordering():
    t0 = time.perf_counter()
    schemes = (
        "two_sided",
        "sat_irs_only",
        "gn_irs_only",
        "sat_reflectarray_gn_irs",
        "sat_reflectarray_only",
        "no_irs",
    )
    spec = SweepSpec(
        kind="elements_total",
        values=(1000.0,),
        schemes=schemes,
        base=ScenarioConfig(),
        trials=200,
    )
    rows = run_sweep(spec, seed=5)
    rate = {r.scheme: r.rate_bps_hz for r in rows}
    failures = []
    for s in schemes[1:]:
        if not rate["two_sided"] > rate[s]:
            failures.append(
                f"two_sided ({rate['two_sided']:.4f}) not strictly above {s} ({rate[s]:.4f})"
            )
    if not rate["sat_irs_only"] > rate["gn_irs_only"]:
        failures.append(
            f"sat_irs_only ({rate['sat_irs_only']:.4f}) not strictly above "
            f"gn_irs_only ({rate['gn_irs_only']:.4f})"
        )
    for irs, reflect in (
        ("two_sided", "sat_reflectarray_gn_irs"),
        ("sat_irs_only", "sat_reflectarray_only"),
    ):
        if not rate[irs] >= rate[reflect]:
            failures.append(
                f"{irs} ({rate[irs]:.4f}) below its fixed-reflectarray counterpart "
                f"{reflect} ({rate[reflect]:.4f})"
            )
    for s in schemes[:-1]:
        if not rate[s] >= rate["no_irs"]:
            failures.append(
                f"{s} ({rate[s]:.4f}) below the surface-free baseline ({rate['no_irs']:.4f})"
            )
    elapsed = time.perf_counter() - t0
    order = " > ".join(f"{s}={rate[s]:.3f}" for s in schemes)
    detail = f"mean rates over 200 trials (1000 elements): {order}"
    _verdict(4, "scheme ordering", failures, detail, elapsed, 120.0)


# ---------------------------------------------------------------------------
# 5. Power saved by the optimal common reflection phase (soft)
# ---------------------------------------------------------------------------


def test_criterion_5_common_phase_power_gap():
    t0 = time.perf_counter()
    cfg = ScenarioConfig(rician_factor_db=0.0)
    trials = 500
    g_star = np.empty(trials)
    g_zero = np.empty(trials)
    for i in range(trials):
        cs = build_channel_set(cfg, 10.0, rng=substream(77, "sweep", 0, i))
        g_star[i] = channel_gain(cs, baseline_solution(cs, "two_sided"))
        g_zero[i] = channel_gain(cs, baseline_solution(cs, "cpb_without_common_phase"))
    # gamma does not depend on transmit power, so the two mean-rate curves over
    # power follow from the same gain samples; the gap is read off horizontally.
    p_grid = np.linspace(0.0, 40.0, 4001)
    snr_scale = 10.0 ** ((p_grid + 90.0) / 10.0)  # 1 / noise_var at each power
    r_star = np.log2(1.0 + np.outer(snr_scale, g_star)).mean(axis=1)
    r_zero = np.log2(1.0 + np.outer(snr_scale, g_zero)).mean(axis=1)
    target = float(np.interp(30.0, p_grid, r_zero))
    p_match = float(np.interp(target, r_star, p_grid))
    gap_db = 30.0 - p_match
    failures = []
    if not 0.3 <= gap_db <= 1.7:
        failures.append(f"horizontal power gap {gap_db:.3f} dB outside the soft band [0.3, 1.7]")
    elapsed = time.perf_counter() - t0
    detail = (
        f"kappa = 0 dB, 500 paired trials: optimal-vs-zero common phase saves {gap_db:.2f} dB "
        f"at the matched rate {target:.2f} bps/Hz (soft band [0.3, 1.7] dB)"
    )
    _verdict(5, "common-phase power gap", failures, detail, elapsed, None, soft=True)


# ---------------------------------------------------------------------------
# 6. Noiseless training reproduces the perfect-CSI design
# ---------------------------------------------------------------------------


def test_criterion_6_noiseless_training_recovery(cs_los_t10):
    t0 = time.perf_counter()
    cs = cs_los_t10
    csi_gn, csi_sat = train_both_sides(cs, TrainingConfig(noise_var=0.0))
    sol = solve_from_csi(
        csi_gn,
        csi_sat,
        SideModel.from_channel_set(cs, "gn"),
        SideModel.from_channel_set(cs, "sat"),
    )
    gamma_est = channel_gain(cs, sol)
    gamma_ref = channel_gain(cs, baseline_solution(cs, "two_sided"))
    rel = abs(gamma_est - gamma_ref) / gamma_ref
    failures = []
    if rel > 1e-6:
        failures.append(f"relative gain error {rel:.3e} exceeds 1e-6")
    elapsed = time.perf_counter() - t0
    detail = (
        "noiseless two-sided training on the deterministic full-size set: "
        f"relative gain error vs perfect CSI {rel:.2e} (allowed 1e-6)"
    )
    _verdict(6, "noiseless training recovery", failures, detail, elapsed, 30.0)


# ---------------------------------------------------------------------------
# 7. Tracked beams beat beams held fixed after training
# ---------------------------------------------------------------------------


def test_criterion_7_tracking_superiority():
    t0 = time.perf_counter()
    cfg = ScenarioConfig()  # 10 dB Rician factor
    seed = 0
    failures: list[str] = []

    single = ProtocolConfig(
        frame_duration_s=40.0, total_time_s=40.0, sample_interval_s=0.5, training_time_s=1.0
    )
    prop = run_protocol(cfg, single, seed=seed, mode="proposed")
    bench = run_protocol(cfg, single, seed=seed, mode="benchmark")
    cutoff = single.training_time_s + 2.0
    checked = violations = 0
    for p, b in zip(prop, bench):
        assert p.t_s == b.t_s
        if p.t_s > cutoff:
            checked += 1
            if p.rate_bps_hz < b.rate_bps_hz:
                violations += 1
    if violations:
        failures.append(
            f"single 40 s frame: tracked rate below the hold-fixed rate at "
            f"{violations}/{checked} samples after t = {cutoff:.1f} s"
        )

    periodic = ProtocolConfig(
        frame_duration_s=10.0, total_time_s=40.0, sample_interval_s=0.5, training_time_s=1.0
    )
    # Before the first training completes both modes run the same blind
    # initial-access beams, so the minimum is taken over trained operation.
    start = periodic.training_time_s
    min_p = min(
        pt.rate_bps_hz
        for pt in run_protocol(cfg, periodic, seed=seed, mode="proposed")
        if pt.t_s >= start
    )
    min_b = min(
        pt.rate_bps_hz
        for pt in run_protocol(cfg, periodic, seed=seed, mode="benchmark")
        if pt.t_s >= start
    )
    if not min_p > min_b:
        failures.append(
            f"10 s re-training: minimum tracked rate {min_p:.4f} does not exceed "
            f"the hold-fixed minimum {min_b:.4f} over trained operation"
        )
    elapsed = time.perf_counter() - t0
    detail = (
        f"single 40 s frame: {violations}/{checked} violations after t = {cutoff:.1f} s; "
        f"10 s re-training: min rate {min_p:.2f} > {min_b:.2f} bps/Hz (t >= {start:.0f} s)"
    )
    _verdict(7, "tracking superiority", failures, detail, elapsed, 180.0)


# ---------------------------------------------------------------------------
# 8. Cross-module invariant battery
# ---------------------------------------------------------------------------


def test_criterion_8_invariant_battery(cs_los_t10, cs_tiny_t10):
    t0 = time.perf_counter()
    cs = cs_los_t10
    rng = np.random.default_rng(99)
    failures: list[str] = []

    # Steering and planar-response norms.
    for _ in range(50):
        n = int(rng.integers(1, 40))
        sv = steering_vector(float(rng.uniform(-math.pi / 2, math.pi / 2)), n)
        if abs(np.linalg.norm(sv) ** 2 - n) > 1e-9 * n:
            failures.append(f"steering vector norm^2 != {n}")
        if np.max(np.abs(np.abs(sv) - 1.0)) > 1e-12:
            failures.append("steering vector entries are not unit modulus")
    for geom in (cs.geom_gn, cs.geom_sat, cs.geom_irs1, cs.geom_irs2):
        size = geom.nx * geom.ny
        for _ in range(10):
            aoa = AoAPair(
                theta_rad=float(rng.uniform(-math.pi, math.pi)),
                phi_rad=float(rng.uniform(-math.pi / 2, math.pi / 2)),
            )
            a = upa_response(geom, aoa, cs.wavelength_m)
            if abs(np.linalg.norm(a) ** 2 - size) > 1e-9 * size:
                failures.append(f"planar response norm^2 != element count {size}")

    # Rank-one spectra of every deterministic link matrix.
    for name in ("h_sg", "h_si1", "h_i2g", "h_i2i1", "h_i1g", "h_si2"):
        s = np.linalg.svd(getattr(cs, name), compute_uv=False)
        if s.size > 1 and s[1] / s[0] >= 1e-9:
            failures.append(f"{name} is not numerically rank one (sigma2/sigma1 = {s[1]/s[0]:.2e})")

    # Quantization phase-error bound.
    for k in (2, 3, 4, 16, 64):
        theta = np.exp(2j * math.pi * rng.random(512))
        err = np.abs(np.angle(quantize_phases(theta, k) * np.conj(theta)))
        if err.max() > math.pi / k + 1e-12:
            failures.append(f"quantization phase error {err.max():.6f} exceeds pi/{k}")

    # Least-squares projection identity for every generated pilot schedule.
    sat_beams = initial_access_beams(cs_tiny_t10)
    tc_cases = (TrainingConfig(), TrainingConfig(i_d=5, i_u=5), TrainingConfig(i_d=9, i_u=9))
    for tc in tc_cases:
        for rec in (
            downlink_training(cs_tiny_t10, sat_beams, tc, None),
            uplink_training(cs_tiny_t10, (mrt_mrc(cs_tiny_t10.a_g), np.conj(cs_tiny_t10.a_i1)), tc, None),
        ):
            g = rec.observation_matrix
            eye_err = np.max(np.abs(np.linalg.pinv(g) @ g - np.eye(g.shape[1])))
            if eye_err > 1e-9:
                failures.append(f"pilot observation matrix projection identity off by {eye_err:.2e}")

    # Orbit periodicity.
    cfg = ScenarioConfig()
    period = orbital_period(cfg)
    radius = cfg.earth_radius_m + cfg.orbit_altitude_m
    for t in (0.0, 13.7, 1234.5):
        p0 = satellite_position(cfg, t)
        p1 = satellite_position(cfg, t + period)
        if np.linalg.norm(p1 - p0) > 1e-6 * radius:
            failures.append(f"satellite position not periodic at t = {t}")
        if abs(np.linalg.norm(p0) - radius) > 1e-6 * radius:
            failures.append(f"satellite distance from Earth's center drifts at t = {t}")

    elapsed = time.perf_counter() - t0
    detail = (
        "array norms, rank-one spectra, quantization bound pi/K, pilot projection "
        "identity, and orbit periodicity all hold at their stated tolerances"
    )
    _verdict(8, "invariant battery", failures, detail, elapsed, 30.0)
