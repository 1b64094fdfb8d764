"""Per-layer pipeline-depth selection.

The discrete choice enumerates the supported depths exactly; the closed-form
continuous estimate k_hat = sqrt(((R+C)/(R+T-2)) * (base/slope)) is exposed
as a diagnostic only, because with a measured clock table rounding it can
disagree with the true argmin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .timing import (
    ArrayConfig,
    ClockModel,
    DelayParams,
    GemmShape,
    exec_time_conventional_ps,
    exec_time_ps,
    fit_linear_delays,
    total_cycles,
    total_cycles_conventional,
)


@dataclass(frozen=True)
class ModeChoice:
    """Selected depth for one GEMM, with its cost and the continuous estimate."""

    k: int
    cycles: int
    period_ps: int
    time_ps: int
    analytic_k_hat: float | None

    @property
    def time_ns(self) -> float:
        return self.time_ps / 1000.0


@dataclass(frozen=True)
class LayerSchedule:
    shape: GemmShape
    repeat: int
    choice: ModeChoice
    conv_cycles: int
    conv_time_ps: int

    @property
    def savings_frac(self) -> float:
        return 1.0 - self.choice.time_ps / self.conv_time_ps


@dataclass(frozen=True)
class NetworkSchedule:
    layers: tuple[LayerSchedule, ...]
    total_time_ps: int
    conv_total_time_ps: int

    @property
    def savings_frac(self) -> float:
        return 1.0 - self.total_time_ps / self.conv_total_time_ps

    @property
    def time_ratio(self) -> float:
        """Conventional time over collapsible-array time (>1 means faster)."""
        return self.conv_total_time_ps / self.total_time_ps


def optimal_k_analytic(shape: GemmShape, cfg: ArrayConfig, delays: DelayParams) -> float:
    """Continuous minimizer of tile time (R + T - 2 + (R+C)/k) * (base + slope*k)."""
    denom = cfg.rows + shape.t - 2
    if denom <= 0:
        raise ValueError("R + T - 2 must be positive (degenerate 1x1 stream)")
    return math.sqrt(((cfg.rows + cfg.cols) / denom) * delays.delay_ratio)


def _k_hat(shape: GemmShape, cfg: ArrayConfig, model: ClockModel) -> float | None:
    ratio = fit_linear_delays(model)
    if ratio is None:
        return None
    denom = cfg.rows + shape.t - 2
    if denom <= 0:
        return None
    return math.sqrt(((cfg.rows + cfg.cols) / denom) * ratio)


def select_mode(shape: GemmShape, cfg: ArrayConfig, model: ClockModel) -> ModeChoice:
    """Depth with minimal absolute execution time; ties go to the smaller k
    (less logic depth, more timing slack)."""
    best: tuple[int, int, int] | None = None  # (time, k, cycles)
    for k in cfg.supported_depths:
        t = exec_time_ps(k, shape, cfg, model)
        if best is None or t < best[0]:
            best = (t, k, total_cycles(k, shape, cfg))
    assert best is not None
    time_ps, k, cycles = best
    return ModeChoice(
        k=k,
        cycles=cycles,
        period_ps=model.period_ps(k),
        time_ps=time_ps,
        analytic_k_hat=_k_hat(shape, cfg, model),
    )


def schedule_network(
    layers: Sequence[GemmShape],
    cfg: ArrayConfig,
    model: ClockModel,
    repeats: Sequence[int] | None = None,
) -> NetworkSchedule:
    """Independent per-layer selection plus totals against the fixed-pipeline
    baseline running at its (higher) conventional frequency.

    ``repeats`` multiplies a layer's cost for workloads that issue the same
    GEMM shape several times (e.g. grouped convolutions lowered per group).
    """
    if not layers:
        raise ValueError("at least one layer is required")
    if repeats is None:
        repeats = [1] * len(layers)
    if len(repeats) != len(layers):
        raise ValueError("repeats must match layers")
    scheduled = []
    total = conv_total = 0
    for shape, rep in zip(layers, repeats):
        if rep < 1:
            raise ValueError("repeat counts must be >= 1")
        choice = select_mode(shape, cfg, model)
        conv_cycles = total_cycles_conventional(shape, cfg)
        conv_time = exec_time_conventional_ps(shape, cfg, model)
        scheduled.append(
            LayerSchedule(
                shape=shape,
                repeat=rep,
                choice=choice,
                conv_cycles=conv_cycles,
                conv_time_ps=conv_time,
            )
        )
        total += choice.time_ps * rep
        conv_total += conv_time * rep
    return NetworkSchedule(
        layers=tuple(scheduled),
        total_time_ps=total,
        conv_total_time_ps=conv_total,
    )
