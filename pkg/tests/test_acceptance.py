"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines interleaved with the pytest report.
"""
import functools

import numpy as np
import pytest

from collapsar import (
    ArrayConfig,
    DelayParams,
    GemmShape,
    build_pe_grid,
    csa_3to2,
    default_clock_table,
    estimate,
    exec_time_conventional_ps,
    latency_conventional,
    latency_shallow,
    network_cost,
    optimal_k_analytic,
    schedule_network,
    select_mode,
    simulate_gemm,
    simulate_tile,
)
from collapsar.power import DEFAULT_COEFFS, predict_gemm_counters

from conftest import matmul_oracle, wrap_signed

CLOCK = default_clock_table()


def criterion(number, title):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[FAIL] criterion {number}: {title}")
                raise
            print(f"\n[PASS] criterion {number}: {title}")

        return wrapper

    return decorate


@criterion(1, "tile cycle counts match the closed forms across the sweep")
def test_criterion_1_cycle_fidelity():
    rng = np.random.default_rng(101)
    sizes = (4, 8, 12, 16, 32)
    for r in sizes:
        for c in sizes:
            depths = [k for k in (1, 2, 3, 4) if r % k == 0 and c % k == 0]
            for k in depths:
                cfg = ArrayConfig(rows=r, cols=c, supported_depths=tuple(sorted({1, k})))
                for t in (1, 5, 17):
                    a = rng.integers(-50, 50, size=(t, r))
                    b = rng.integers(-50, 50, size=(r, c))
                    res = simulate_tile(a, b, k, cfg)
                    assert res.cycles == latency_shallow(k, r, c, t), (r, c, k, t)
                    if k == 1:
                        assert res.cycles == latency_conventional(r, c, t)


@criterion(2, "200 randomized GEMMs are bit-identical to the reference product")
def test_criterion_2_functional_equivalence():
    rng = np.random.default_rng(202)
    geometries = ((4, 4), (8, 8), (16, 16), (8, 16), (16, 4))
    for trial in range(200):
        rows, cols = geometries[trial % len(geometries)]
        cfg = ArrayConfig(rows=rows, cols=cols, supported_depths=(1, 2, 4))
        t, n, m = (int(x) for x in rng.integers(1, 65, size=3))
        a = rng.integers(-(2**31), 2**31, size=(t, n), dtype=np.int64)
        b = rng.integers(-(2**31), 2**31, size=(n, m), dtype=np.int64)
        reference = matmul_oracle(a, b)
        outputs = []
        for k in cfg.supported_depths:
            res = simulate_gemm(a, b, k, cfg)
            assert np.array_equal(res.output, reference), (trial, k)
            outputs.append(res.output)
        for out in outputs[1:]:
            assert np.array_equal(outputs[0], out), trial


@criterion(3, "132x132 reference layers pick depths 2 and 4 with the expected savings")
def test_criterion_3_reference_layer_modes():
    cfg = ArrayConfig(rows=132, cols=132)
    cases = (
        (GemmShape(m=256, n=2304, t=196), 2, 8.67),
        (GemmShape(m=512, n=2304, t=49), 4, 21.0),
    )
    for shape, want_k, want_savings_pct in cases:
        choice = select_mode(shape, cfg, CLOCK)
        assert choice.k == want_k, (shape, choice.k)
        conv = exec_time_conventional_ps(shape, cfg, CLOCK)
        assert choice.time_ps < conv
        savings = 100.0 * (1 - choice.time_ps / conv)
        assert savings == pytest.approx(want_savings_pct, abs=0.5), (shape, savings)


@criterion(4, "closed-form continuous optimum matches a dense numeric scan")
def test_criterion_4_continuous_optimum():
    rng = np.random.default_rng(404)

    def scan(shape, cfg, delays, lo=0.5, hi=16.0):
        def f(k):
            return (cfg.rows + shape.t - 2 + (cfg.rows + cfg.cols) / k) * (
                delays.base_ps + delays.slope_ps * k
            )

        ks = np.linspace(lo, hi, 2001)
        i = int(np.argmin([f(k) for k in ks]))
        a, b = ks[max(i - 1, 0)], ks[min(i + 1, len(ks) - 1)]
        for _ in range(300):
            m1, m2 = a + (b - a) / 3, b - (b - a) / 3
            a, b = (a, m2) if f(m1) <= f(m2) else (m1, b)
        return (a + b) / 2

    checked = 0
    while checked < 50:
        rows = 2 * int(rng.integers(1, 129))
        cols = 2 * int(rng.integers(1, 129))
        t = int(rng.integers(1, 4097))
        delays = DelayParams(*(int(x) for x in rng.integers(1, 1000, size=5)))
        cfg = ArrayConfig(rows=rows, cols=cols, supported_depths=(1, 2))
        shape = GemmShape(m=1, n=1, t=t)
        k_hat = optimal_k_analytic(shape, cfg, delays)
        if not 0.6 <= k_hat <= 15.0:
            continue
        assert scan(shape, cfg, delays) == pytest.approx(k_hat, rel=1e-6)
        checked += 1


def _network_schedules(size):
    from collapsar.workloads import builtin_network, lower_network

    cfg = ArrayConfig(rows=size, cols=size)
    out = {}
    for name in ("resnet34", "mobilenet", "convnext"):
        lowered = lower_network(builtin_network(name))
        out[name] = schedule_network(
            [l.shape for l in lowered], cfg, CLOCK, repeats=[l.repeat for l in lowered]
        )
    return cfg, out


@criterion(5, "network totals beat the baseline inside the 6-14% band, growing with array size")
def test_criterion_5_network_latency_trend():
    savings = {}
    for size in (128, 256):
        _, schedules = _network_schedules(size)
        for name, sched in schedules.items():
            assert sched.total_time_ps < sched.conv_total_time_ps, (name, size)
            pct = 100.0 * sched.savings_frac
            assert 6.0 <= pct <= 14.0, (name, size, pct)
            savings[(name, size)] = pct
        if size == 128:
            ks = [ls.choice.k for ls in schedules["convnext"].layers]
            assert all(a <= b for a, b in zip(ks, ks[1:])), "depth sequence decreased"
            assert ks[0] == 1 and 2 in ks and ks[-1] == 4
    for name in ("resnet34", "mobilenet", "convnext"):
        assert savings[(name, 256)] >= savings[(name, 128)], name


@criterion(6, "power and EDP trends hold; gated stages burn no clock energy")
def test_criterion_6_power_and_edp():
    for size in (128, 256):
        cfg, schedules = _network_schedules(size)
        for name, sched in schedules.items():
            nc = network_cost(sched, cfg, CLOCK, DEFAULT_COEFFS)
            assert nc.chosen.avg_power_mw < nc.normal_pipeline.avg_power_mw, (name, size)
            assert nc.edp_ratio_vs_conventional > 1.0, (name, size)
    # gated registers contribute exactly zero clock energy
    cfg = ArrayConfig(rows=128, cols=128)
    counters = predict_gemm_counters(4, GemmShape(512, 2304, 49), cfg)
    zero_clk = DEFAULT_COEFFS.__class__(
        DEFAULT_COEFFS.mac_energy_pj,
        DEFAULT_COEFFS.reg_write_energy_pj,
        0.0,
        DEFAULT_COEFFS.static_power_mw,
        DEFAULT_COEFFS.flex_energy_scale,
    )
    with_clk = estimate(counters, 4, CLOCK, DEFAULT_COEFFS)
    without = estimate(counters, 4, CLOCK, zero_clk)
    clk_energy = with_clk.energy_pj - without.energy_pj
    expected = (
        DEFAULT_COEFFS.flex_energy_scale
        * DEFAULT_COEFFS.clk_energy_pj
        * counters.active_reg_cycles
    )
    assert clk_energy == pytest.approx(expected)
    assert counters.gated_reg_cycles > 0
    # documented calibration example inside the reference bands
    cfg256, schedules = _network_schedules(256)
    nc = network_cost(schedules["convnext"], cfg256, CLOCK, DEFAULT_COEFFS)
    assert 0.13 <= nc.power_saving_vs_conventional <= 0.23
    assert 1.4 <= nc.edp_ratio_vs_conventional <= 1.8


@criterion(7, "transparent-PE census is exactly R*C*(k-1)/k per direction")
def test_criterion_7_gating_census():
    for r in (4, 8, 12, 16, 32, 132):
        for c in (4, 8, 12, 16, 32, 132):
            for k in (1, 2, 3, 4):
                if r % k or c % k:
                    continue
                cfg = ArrayConfig(rows=r, cols=c, supported_depths=tuple(sorted({1, k})))
                grid = build_pe_grid(k, cfg)
                expected = r * c * (k - 1) // k
                assert grid.v_transparent_count == expected, (r, c, k)
                assert grid.h_transparent_count == expected, (r, c, k)


@criterion(8, "carry-save stage and chained reduction are exact mod 2^64")
def test_criterion_8_carry_save_soundness():
    rng = np.random.default_rng(808)
    lo, hi = -(2**63), 2**63
    a = rng.integers(lo, hi, size=100_000)
    b = rng.integers(lo, hi, size=100_000)
    c = rng.integers(lo, hi, size=100_000)
    for i in range(100_000):
        s, carry = csa_3to2(int(a[i]), int(b[i]), int(c[i]))
        assert wrap_signed(s + carry) == wrap_signed(int(a[i]) + int(b[i]) + int(c[i]))
    for k in (2, 4, 8):
        for _ in range(1000):
            incoming = int(rng.integers(-(2**62), 2**62))
            products = [int(x) for x in rng.integers(-(2**31), 2**31, size=k)]
            s, carry = incoming, 0
            for p in products:
                s, carry = csa_3to2(p, s, carry)
            assert wrap_signed(s + carry) == wrap_signed(incoming + sum(products))
