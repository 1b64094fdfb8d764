"""Closed-form latency and clock-period models for the systolic array.

All durations are integer picoseconds internally so that execution times
are exact and reproducible; report layers render nanoseconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class DivisibilityError(ValueError):
    """Raised when a pipeline depth does not divide the array dimensions."""


class UnsupportedDepthError(ValueError):
    """Raised when a pipeline depth is not available on a configuration."""


@dataclass(frozen=True)
class GemmShape:
    """Dimensions of one matrix multiplication X[t,m] = A[t,n] x B[n,m]."""

    m: int  # output columns / number of B columns
    n: int  # reduction depth / number of B rows
    t: int  # output rows / number of A rows

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1 or self.t < 1:
            raise ValueError(f"GEMM dimensions must be >= 1, got {(self.m, self.n, self.t)}")


@dataclass(frozen=True)
class ArrayConfig:
    """Systolic array geometry and the pipeline depths the hardware supports."""

    rows: int
    cols: int
    supported_depths: tuple[int, ...] = (1, 2, 4)
    input_bits: int = 32
    accum_bits: int = 64

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array dimensions must be >= 1")
        depths = tuple(self.supported_depths)
        if not depths or depths[0] != 1:
            raise ValueError("supported_depths must start with depth 1")
        if any(prev >= nxt for prev, nxt in zip(depths, depths[1:])):
            raise ValueError("supported_depths must be strictly increasing")
        for k in depths:
            if self.rows % k or self.cols % k:
                raise DivisibilityError(
                    f"depth {k} must divide rows={self.rows} and cols={self.cols}"
                )
        if not 1 <= self.input_bits <= 32:
            raise ValueError("input_bits must be in [1, 32]")
        if not 2 * self.input_bits <= self.accum_bits <= 64:
            raise ValueError("accum_bits must be in [2*input_bits, 64]")
        object.__setattr__(self, "supported_depths", depths)

    def check_depth(self, k: int) -> None:
        if k not in self.supported_depths:
            raise UnsupportedDepthError(
                f"depth {k} not in supported depths {self.supported_depths}"
            )


@dataclass(frozen=True)
class DelayParams:
    """Gate/register delay budget of one processing element, in picoseconds."""

    d_ff_ps: int
    d_mul_ps: int
    d_add_ps: int
    d_csa_ps: int
    d_mux_ps: int

    def __post_init__(self) -> None:
        for name, v in vars(self).items():
            if v <= 0:
                raise ValueError(f"{name} must be strictly positive, got {v}")

    @property
    def base_ps(self) -> int:
        """Depth-independent path: clocking overhead + multiplier + final adder."""
        return self.d_ff_ps + self.d_mul_ps + self.d_add_ps

    @property
    def slope_ps(self) -> int:
        """Extra delay per collapsed stage: one carry-save stage + two bypass muxes."""
        return self.d_csa_ps + 2 * self.d_mux_ps

    @property
    def delay_ratio(self) -> float:
        return self.base_ps / self.slope_ps


@dataclass(frozen=True)
class LinearClock:
    """Clock period as an affine function of the collapsed depth k."""

    delays: DelayParams

    def period_ps(self, k: int) -> int:
        if k < 1:
            raise ValueError("depth must be >= 1")
        return self.delays.base_ps + k * self.delays.slope_ps

    @property
    def conventional_ps(self) -> int:
        # A fixed-pipeline array carries no carry-save stage or bypass muxes.
        return self.delays.base_ps

    def fitted_delay_ratio(self) -> float:
        return self.delays.delay_ratio


@dataclass(frozen=True)
class TableClock:
    """Measured clock periods per supported depth, plus the fixed-pipeline period."""

    periods_ps: dict[int, int]
    conventional_ps: int

    def __post_init__(self) -> None:
        if not self.periods_ps:
            raise ValueError("period table must not be empty")
        items = sorted(self.periods_ps.items())
        prev = 0
        for k, p in items:
            if k < 1 or p <= 0:
                raise ValueError(f"invalid table entry k={k} period={p}")
            if p < prev:
                raise ValueError("table periods must be non-decreasing in k")
            prev = p
        if self.conventional_ps <= 0:
            raise ValueError("conventional period must be positive")
        if 1 in self.periods_ps and self.conventional_ps > self.periods_ps[1]:
            raise ValueError("conventional period cannot exceed the depth-1 period")
        object.__setattr__(self, "periods_ps", dict(items))

    def period_ps(self, k: int) -> int:
        try:
            return self.periods_ps[k]
        except KeyError:
            raise UnsupportedDepthError(
                f"no clock period for depth {k}; table has {sorted(self.periods_ps)}"
            ) from None

    def fitted_delay_ratio(self) -> float | None:
        """Least-squares affine fit base/slope ratio over the table points.

        Returns None when the table cannot pin a slope (fewer than two
        depths, or a flat fit).
        """
        pts = sorted(self.periods_ps.items())
        if len(pts) < 2:
            return None
        ks = [k for k, _ in pts]
        ps = [p for _, p in pts]
        k_mean = sum(ks) / len(ks)
        p_mean = sum(ps) / len(ps)
        sxx = sum((k - k_mean) ** 2 for k in ks)
        sxy = sum((k - k_mean) * (p - p_mean) for k, p in pts)
        slope = sxy / sxx
        if slope <= 0:
            return None
        base = p_mean - slope * k_mean
        if base <= 0:
            return None
        return base / slope


ClockModel = LinearClock | TableClock


def default_clock_table() -> TableClock:
    """Reference 28nm-class operating points: 2.0 GHz fixed pipeline, and
    1.8 / 1.7 / 1.4 GHz for collapse depths 1 / 2 / 4 (rounded to 1 ps)."""
    return TableClock(periods_ps={1: 556, 2: 588, 4: 714}, conventional_ps=500)


def clock_period_ps(model: ClockModel, k: int | str) -> int:
    """Period for depth ``k``, or the fixed-pipeline period for ``"conventional"``."""
    if k == "conventional":
        return model.conventional_ps
    if not isinstance(k, int):
        raise TypeError(f"depth must be an int or 'conventional', got {k!r}")
    return model.period_ps(k)


def latency_conventional(rows: int, cols: int, t: int) -> int:
    """Cycles for one tile on the fixed-pipeline array: 2R + C + T - 2."""
    if rows < 1 or cols < 1 or t < 1:
        raise ValueError("tile dimensions must be >= 1")
    return 2 * rows + cols + t - 2

def latency_shallow(k: int, rows: int, cols: int, t: int) -> int:
    """Cycles for one tile at collapse depth k: R + R/k + C/k + T - 2.

    Collapsing merges k stages in both directions, so the reduction and the
    broadcast each take R/k resp. C/k hops; the R-cycle weight preload and
    the T-row stream are unchanged.  Equals the conventional count at k=1.
    """
    if rows < 1 or cols < 1 or t < 1:
        raise ValueError("tile dimensions must be >= 1")
    if k < 1:
        raise ValueError("depth must be >= 1")
    if rows % k or cols % k:
        raise DivisibilityError(f"depth {k} does not divide array {rows}x{cols}")
    return rows + rows // k + cols // k + t - 2


def tile_count(shape: GemmShape, cfg: ArrayConfig) -> int:
    """Number of array-sized tiles: ceil(N/R) * ceil(M/C)."""
    return math.ceil(shape.n / cfg.rows) * math.ceil(shape.m / cfg.cols)


def total_cycles(k: int, shape: GemmShape, cfg: ArrayConfig) -> int:
    """Tile latency times tile count for the whole GEMM."""
    cfg.check_depth(k)
    return latency_shallow(k, cfg.rows, cfg.cols, shape.t) * tile_count(shape, cfg)


def total_cycles_conventional(shape: GemmShape, cfg: ArrayConfig) -> int:
    return latency_conventional(cfg.rows, cfg.cols, shape.t) * tile_count(shape, cfg)


def exec_time_ps(k: int, shape: GemmShape, cfg: ArrayConfig, model: ClockModel) -> int:
    """Absolute execution time: total cycles times the depth-k period."""
    return total_cycles(k, shape, cfg) * model.period_ps(k)


def exec_time_conventional_ps(shape: GemmShape, cfg: ArrayConfig, model: ClockModel) -> int:
    return total_cycles_conventional(shape, cfg) * model.conventional_ps


def fit_linear_delays(model: ClockModel) -> float | None:
    """Base/slope delay ratio used by the closed-form depth estimator."""
    return model.fitted_delay_ratio()
