"""Sweep driver and metric tests."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from leoirs import (
    ProtocolConfig,
    ScenarioConfig,
    SweepSpec,
    achievable_rate,
    apply_scheme_dims,
    baseline_solution,
    build_channel_set,
    channel_gain,
    config_for,
    effective_channel,
    run_sweep,
    run_tracking_experiment,
    scheme_dims,
    split_elements,
)


def _tiny_cfg(**over):
    base = dict(
        rician_factor_db=math.inf,
        n1x=2, n1y=2, n2x=2, n2y=2,
        m1x=2, m1y=2, m2x=2, m2y=2,
    )
    base.update(over)
    return ScenarioConfig(**base)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_channel_gain_matches_dense_evaluation():
    cfg = _tiny_cfg(rician_factor_db=5.0, rng_seed=2)
    cs = build_channel_set(cfg, 10.0)
    sol = baseline_solution(cs, "two_sided")
    dense = effective_channel(cs, sol.theta1, sol.theta2)
    expected = float(abs(sol.w1 @ dense @ sol.w2) ** 2)
    assert_allclose(channel_gain(cs, sol), expected, rtol=1e-12)


def test_achievable_rate():
    assert achievable_rate(3.0, 1.0) == pytest.approx(2.0)
    assert achievable_rate(0.0, 1e-12) == 0.0
    with pytest.raises(ValueError):
        achievable_rate(1.0, 0.0)
    with pytest.raises(ValueError):
        achievable_rate(1.0, -1.0)


# ---------------------------------------------------------------------------
# element apportioning
# ---------------------------------------------------------------------------


def test_split_elements_frozen_cases():
    assert split_elements(25) == (5, 5)
    assert split_elements(500) == (20, 25)
    assert split_elements(1000) == (25, 40)
    assert split_elements(1400) == (35, 40)
    assert split_elements(2800) == (50, 56)
    assert split_elements(0) == (0, 0)
    assert split_elements(7) == (1, 7)
    assert split_elements(1) == (1, 1)
    with pytest.raises(ValueError):
        split_elements(-1)


def test_split_elements_is_exact_cover():
    for total in range(0, 200):
        nx, ny = split_elements(total)
        assert nx * ny == total
        if total:
            assert nx <= ny


def test_scheme_dims():
    assert scheme_dims("two_sided", 1000) == (500, 500)
    assert scheme_dims("cpb_without_common_phase", 999) == (499, 500)
    assert scheme_dims("sat_irs_only", 1000) == (0, 1000)
    assert scheme_dims("sat_reflectarray_only", 1000) == (0, 1000)
    assert scheme_dims("gn_irs_only", 1000) == (1000, 0)
    assert scheme_dims("no_irs", 1000) == (0, 0)
    assert scheme_dims("random_phase", 1000) == (500, 500)
    with pytest.raises(ValueError):
        scheme_dims("not_a_scheme", 10)


def test_apply_scheme_dims_preserves_matching_grids():
    cfg = ScenarioConfig(m1x=25, m1y=20, m2x=25, m2y=20)  # 500 + 500
    out = apply_scheme_dims(cfg, "two_sided", 1000)
    # shares match the explicit grids exactly: keep them
    assert (out.m1x, out.m1y, out.m2x, out.m2y) == (25, 20, 25, 20)
    solo = apply_scheme_dims(cfg, "sat_irs_only", 1000)
    assert (solo.m1x, solo.m1y) == (0, 0)
    assert solo.m2x * solo.m2y == 1000 and (solo.m2x, solo.m2y) == (25, 40)


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------


def test_sweep_spec_validation():
    base = _tiny_cfg()
    with pytest.raises(ValueError):
        SweepSpec(kind="frequency", values=(1.0,), schemes=("two_sided",), base=base)
    with pytest.raises(ValueError):
        SweepSpec(kind="tx_power_dbm", values=(), schemes=("two_sided",), base=base)
    with pytest.raises(ValueError):
        SweepSpec(kind="tx_power_dbm", values=(30.0,), schemes=(), base=base)
    with pytest.raises(ValueError):
        SweepSpec(kind="tx_power_dbm", values=(30.0,), schemes=("bogus",), base=base)
    with pytest.raises(ValueError):
        SweepSpec(kind="tx_power_dbm", values=(30.0,), schemes=("two_sided",), base=base, trials=0)
    with pytest.raises(ValueError):
        SweepSpec(kind="tx_power_dbm", values=(30.0,), schemes=("two_sided",), base=base, phase_levels=1)
    with pytest.raises(ValueError):
        SweepSpec(kind="elements_total", values=(10.5,), schemes=("two_sided",), base=base)
    with pytest.raises(ValueError):
        SweepSpec(kind="elements_total", values=(-8,), schemes=("two_sided",), base=base)


def test_config_for():
    base = _tiny_cfg()
    spec = SweepSpec(kind="tx_power_dbm", values=(37.0,), schemes=("two_sided",), base=base, t_s=12.0)
    cfg, t = config_for(spec, 37.0)
    assert cfg.tx_power_dbm == 37.0 and t == 12.0
    spec_t = SweepSpec(kind="time_s", values=(3.0,), schemes=("two_sided",), base=base)
    cfg, t = config_for(spec_t, 3.0)
    assert cfg is base and t == 3.0


# ---------------------------------------------------------------------------
# the sweep driver
# ---------------------------------------------------------------------------


def test_run_sweep_row_layout_and_determinism():
    base = _tiny_cfg(rician_factor_db=10.0)
    spec = SweepSpec(
        kind="tx_power_dbm",
        values=(20.0, 30.0),
        schemes=("two_sided", "no_irs"),
        base=base,
        trials=3,
    )
    rows = run_sweep(spec, seed=11)
    assert len(rows) == 4
    assert [(r.value, r.scheme) for r in rows] == [
        (20.0, "two_sided"),
        (20.0, "no_irs"),
        (30.0, "two_sided"),
        (30.0, "no_irs"),
    ]
    assert all(r.variable == "tx_power_dbm" and r.trials == 3 and r.seed == 11 for r in rows)
    again = run_sweep(spec, seed=11)
    assert [(r.gamma, r.rate_bps_hz) for r in rows] == [(r.gamma, r.rate_bps_hz) for r in again]


def test_run_sweep_gamma_power_independent():
    # the beamformed gain contains no transmit power: only the rate moves
    base = _tiny_cfg(rician_factor_db=10.0)
    spec = SweepSpec(
        kind="tx_power_dbm", values=(20.0, 40.0), schemes=("two_sided",), base=base, trials=2
    )
    lo, hi = run_sweep(spec, seed=1)
    assert lo.gamma == pytest.approx(hi.gamma, rel=1e-12)
    assert hi.rate_bps_hz > lo.rate_bps_hz


def test_run_sweep_paired_trials_order_schemes():
    # identical realizations per trial: the aided scheme orders above no_irs
    base = _tiny_cfg(rician_factor_db=0.0)
    spec = SweepSpec(
        kind="tx_power_dbm", values=(30.0,), schemes=("two_sided", "no_irs"), base=base, trials=5
    )
    aided, bare = run_sweep(spec, seed=4)
    assert aided.gamma > bare.gamma


def test_run_sweep_elements_total_resizes():
    base = _tiny_cfg()
    spec = SweepSpec(
        kind="elements_total",
        values=(4, 16),
        schemes=("two_sided", "sat_irs_only"),
        base=base,
        trials=1,
    )
    rows = run_sweep(spec, seed=0)
    by = {(int(r.value), r.scheme): r for r in rows}
    # more elements -> more gain, for both apportionings
    assert by[(16, "two_sided")].gamma > by[(4, "two_sided")].gamma
    assert by[(16, "sat_irs_only")].gamma > by[(4, "sat_irs_only")].gamma


def test_run_sweep_quantization_costs_little():
    base = _tiny_cfg()
    kw = dict(kind="tx_power_dbm", values=(30.0,), schemes=("two_sided",), base=base, trials=1)
    (cont,) = run_sweep(SweepSpec(**kw), seed=0)
    (coarse,) = run_sweep(SweepSpec(**kw, phase_levels=2), seed=0)
    (fine,) = run_sweep(SweepSpec(**kw, phase_levels=64), seed=0)
    assert coarse.gamma <= cont.gamma * (1.0 + 1e-12)
    assert fine.gamma <= cont.gamma * (1.0 + 1e-12)
    assert fine.gamma > coarse.gamma
    assert fine.gamma > cont.gamma * 0.99  # 64 levels are nearly continuous


def test_run_sweep_random_phase_uses_scheme_stream():
    base = _tiny_cfg()
    spec = SweepSpec(
        kind="tx_power_dbm", values=(30.0,), schemes=("random_phase",), base=base, trials=4
    )
    a = run_sweep(spec, seed=9)
    b = run_sweep(spec, seed=9)
    assert a[0].gamma == b[0].gamma
    c = run_sweep(spec, seed=10)
    assert a[0].gamma != c[0].gamma


def test_run_tracking_experiment_rows():
    cfg = _tiny_cfg()
    pc = ProtocolConfig(frame_duration_s=10.0, total_time_s=10.0, sample_interval_s=2.0)
    rows = run_tracking_experiment(cfg, pc, seed=0, schemes=("two_sided",), modes=("proposed", "benchmark"))
    assert len(rows) == 12  # 6 samples x 2 modes
    assert {r.scheme for r in rows} == {"two_sided:proposed", "two_sided:benchmark"}
    assert all(r.variable == "time_s" and r.trials == 1 for r in rows)
    times = [r.value for r in rows if r.scheme == "two_sided:proposed"]
    assert times == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]


def test_run_tracking_experiment_reapportions_single_surface():
    # the one-surface scheme gets the whole budget even though the base
    # config describes two surfaces
    cfg = _tiny_cfg()  # 4 + 4 elements
    pc = ProtocolConfig(frame_duration_s=10.0, total_time_s=10.0, sample_interval_s=5.0)
    rows = run_tracking_experiment(cfg, pc, seed=0, schemes=("sat_irs_only",), modes=("perfect",))
    assert all(r.gamma > 0 for r in rows)
