"""Weight-stationary systolic array with collapsible (transparent) pipelining:
cycle-accurate simulation, closed-form cost models, per-layer pipeline-depth
optimization, and activity-based power estimation."""

from .optimize import (
    LayerSchedule,
    ModeChoice,
    NetworkSchedule,
    optimal_k_analytic,
    schedule_network,
    select_mode,
)
from .power import (
    CostReport,
    EnergyCoefficients,
    edp_ratio,
    estimate,
    estimate_conventional,
    load_coefficients,
    network_cost,
    predict_gemm_counters,
)
from .simulator import (
    Accumulator,
    GemmSimResult,
    PeConfig,
    PeGrid,
    TileCounters,
    TileSimResult,
    activity_counters,
    build_pe_grid,
    csa_3to2,
    input_skew,
    predict_tile_counters,
    simulate_gemm,
    simulate_tile,
)
from .timing import (
    ArrayConfig,
    ClockModel,
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
    total_cycles_conventional,
)
from .workloads import (
    ConvLayer,
    LoweredLayer,
    NetworkFormatError,
    builtin_network,
    load_network,
    lower_conv_to_gemm,
    lower_layer,
    lower_network,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
