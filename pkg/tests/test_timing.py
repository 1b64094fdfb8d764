import pytest

from collapsar import (
    ArrayConfig,
    DelayParams,
    DivisibilityError,
    GemmShape,
    LinearClock,
    TableClock,
    UnsupportedDepthError,
    clock_period_ps,
    default_clock_table,
    exec_time_conventional_ps,
    exec_time_ps,
    latency_conventional,
    latency_shallow,
    tile_count,
    total_cycles,
)

CFG132 = ArrayConfig(rows=132, cols=132)
LAYER20 = GemmShape(m=256, n=2304, t=196)
LAYER28 = GemmShape(m=512, n=2304, t=49)


class TestTileLatency:
    @pytest.mark.parametrize(
        "r, c, t, expected",
        [(132, 132, 196, 590), (1, 1, 1, 2), (2, 2, 1, 5)],
    )
    def test_conventional(self, r, c, t, expected):
        assert latency_conventional(r, c, t) == expected

    @pytest.mark.parametrize(
        "k, r, c, t, expected",
        [(2, 132, 132, 196, 458), (1, 132, 132, 196, 590), (4, 132, 132, 49, 245)],
    )
    def test_shallow(self, k, r, c, t, expected):
        assert latency_shallow(k, r, c, t) == expected

    def test_depth_one_equals_conventional(self):
        for r in (1, 2, 4, 8, 12, 132):
            for c in (1, 3, 4, 16):
                for t in (1, 5, 17, 196):
                    assert latency_shallow(1, r, c, t) == latency_conventional(r, c, t)

    def test_strictly_decreasing_in_depth(self):
        for r, c, t in ((8, 8, 1), (16, 32, 5), (132, 132, 196)):
            prev = None
            for k in (1, 2, 4):
                cur = latency_shallow(k, r, c, t)
                if prev is not None:
                    assert cur < prev
                prev = cur

    def test_rejects_non_dividing_depth(self):
        with pytest.raises(DivisibilityError):
            latency_shallow(3, 8, 8, 5)
        with pytest.raises(DivisibilityError):
            latency_shallow(4, 132, 6, 5)

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            latency_conventional(0, 1, 1)
        with pytest.raises(ValueError):
            latency_shallow(1, 4, 4, 0)


class TestTiling:
    def test_layer_tiles(self):
        assert tile_count(LAYER20, CFG132) == 36
        assert tile_count(LAYER28, CFG132) == 72

    def test_exact_fit_single_tile(self):
        cfg = ArrayConfig(rows=16, cols=8, supported_depths=(1, 2, 4))
        assert tile_count(GemmShape(m=8, n=16, t=5), cfg) == 1

    def test_total_cycles(self):
        assert total_cycles(2, LAYER20, CFG132) == 458 * 36 == 16488
        assert total_cycles(4, LAYER28, CFG132) == 245 * 72 == 17640

    def test_total_cycles_exact_fit_depth_one(self):
        cfg = ArrayConfig(rows=12, cols=8, supported_depths=(1, 2, 4))
        shape = GemmShape(m=8, n=12, t=7)
        assert total_cycles(1, shape, cfg) == 2 * 12 + 8 + 7 - 2

    def test_unsupported_depth_rejected(self):
        with pytest.raises(UnsupportedDepthError):
            total_cycles(3, LAYER20, CFG132)


class TestClockModels:
    def test_default_table_periods(self, clock):
        # 2.0 / 1.8 / 1.7 / 1.4 GHz, rounded to integer picoseconds
        assert clock_period_ps(clock, "conventional") == 500
        assert clock_period_ps(clock, 1) == 556 == round(1000 / 1.8)
        assert clock_period_ps(clock, 2) == 588 == round(1000 / 1.7)
        assert clock_period_ps(clock, 4) == 714 == round(1000 / 1.4)

    def test_missing_table_entry(self, clock):
        with pytest.raises(UnsupportedDepthError):
            clock.period_ps(3)

    def test_period_dispatch_rejects_other_keys(self, clock):
        with pytest.raises(TypeError):
            clock_period_ps(clock, "fastest")

    def test_linear_matches_fit_of_measured_points(self):
        # base 523 ps, slope 33 ps reproduces the depth-1 period
        delays = DelayParams(d_ff_ps=100, d_mul_ps=300, d_add_ps=123, d_csa_ps=23, d_mux_ps=5)
        model = LinearClock(delays)
        assert delays.base_ps == 523 and delays.slope_ps == 33
        assert model.period_ps(1) == 556
        assert model.conventional_ps == 523

    def test_linear_is_affine_and_increasing(self):
        model = LinearClock(DelayParams(50, 300, 170, 20, 6))
        diffs = [model.period_ps(k + 1) - model.period_ps(k) for k in range(1, 8)]
        assert all(d == diffs[0] for d in diffs)
        assert diffs[0] == 20 + 2 * 6 > 0

    def test_near_degenerate_slope(self):
        # delays must be strictly positive, so a constant period is a limit:
        # with unit csa/mux delays the slope contributes 3 ps per depth
        model = LinearClock(DelayParams(1, 1000, 1, 1, 1))
        assert model.period_ps(1) == 1005
        assert model.period_ps(2) == 1008

    def test_delay_params_must_be_positive(self):
        with pytest.raises(ValueError):
            DelayParams(0, 1, 1, 1, 1)

    def test_table_invariants(self):
        with pytest.raises(ValueError):
            TableClock(periods_ps={1: 500, 2: 400}, conventional_ps=450)
        with pytest.raises(ValueError):
            TableClock(periods_ps={1: 500}, conventional_ps=600)
        with pytest.raises(ValueError):
            TableClock(periods_ps={}, conventional_ps=500)


class TestExecTime:
    def test_layer20_depth2_beats_conventional(self, clock):
        flex = exec_time_ps(2, LAYER20, CFG132, clock)
        conv = exec_time_conventional_ps(LAYER20, CFG132, clock)
        assert flex == 16488 * 588 == 9_694_944
        assert conv == 590 * 36 * 500 == 10_620_000
        assert flex < conv

    def test_layer28_depth4_is_minimum(self, clock):
        times = {k: exec_time_ps(k, LAYER28, CFG132, clock) for k in (1, 2, 4)}
        assert times[4] == 17640 * 714 == 12_594_960
        assert times[4] == min(times.values())

    def test_unit_period_equals_cycles(self):
        model = TableClock(periods_ps={1: 1000}, conventional_ps=1000)
        cfg = ArrayConfig(rows=8, cols=8, supported_depths=(1,))
        shape = GemmShape(m=5, n=20, t=9)
        assert exec_time_ps(1, shape, cfg, model) // 1000 == total_cycles(1, shape, cfg)

    def test_no_hidden_rounding(self, clock):
        # exact integer product of cycles and picosecond period
        for k in (1, 2, 4):
            assert exec_time_ps(k, LAYER20, CFG132, clock) == (
                total_cycles(k, LAYER20, CFG132) * clock.period_ps(k)
            )


class TestConfigValidation:
    def test_depths_must_divide(self):
        with pytest.raises(DivisibilityError):
            ArrayConfig(rows=8, cols=8, supported_depths=(1, 3))

    def test_depths_must_start_at_one_and_increase(self):
        with pytest.raises(ValueError):
            ArrayConfig(rows=8, cols=8, supported_depths=(2, 4))
        with pytest.raises(ValueError):
            ArrayConfig(rows=8, cols=8, supported_depths=(1, 4, 2))

    def test_accumulator_width(self):
        with pytest.raises(ValueError):
            ArrayConfig(rows=4, cols=4, input_bits=32, accum_bits=48)

    def test_gemm_shape_positive(self):
        with pytest.raises(ValueError):
            GemmShape(m=0, n=1, t=1)

    def test_depth_three_allowed_when_divisible(self):
        cfg = ArrayConfig(rows=132, cols=132, supported_depths=(1, 2, 3, 4))
        assert latency_shallow(3, cfg.rows, cfg.cols, 196) == 132 + 44 + 44 + 194

    def test_table_fit_ratio(self):
        # least squares over (1, 556), (2, 588), (4, 714): base 493, slope 54.14
        ratio = default_clock_table().fitted_delay_ratio()
        assert ratio == pytest.approx(493.0 / (758 / 14), rel=1e-12)

    def test_single_point_table_has_no_fit(self):
        assert TableClock(periods_ps={1: 500}, conventional_ps=500).fitted_delay_ratio() is None
