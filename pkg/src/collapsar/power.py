"""Activity-based energy, power, and energy-delay-product estimation.

Coefficients are engineering estimates (clearly labeled as such in reports):
per-MAC datapath energy, per-stage register write energy, per-cycle clock
energy for every stage that is not clock-gated, and a flat static power.
The configurable array additionally carries ``flex_energy_scale`` (> 1) on
its dynamic energy for the carry-save stage and bypass-mux capacitance that
a fixed-pipeline array does not have.

Energy totals include the static contribution (static power times runtime),
so avg_power = energy / time = dynamic / time + static.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .optimize import NetworkSchedule
from .simulator import TileCounters, predict_tile_counters
from .timing import ArrayConfig, ClockModel, GemmShape, tile_count


@dataclass(frozen=True)
class EnergyCoefficients:
    mac_energy_pj: float = 1.0
    reg_write_energy_pj: float = 0.1
    clk_energy_pj: float = 0.04
    static_power_mw: float = 0.0
    # 1.05 * 556/500: normal-pipeline mode draws ~5% more power than the
    # fixed-pipeline array at equal work despite its lower clock.
    flex_energy_scale: float = 1.1676

    def __post_init__(self) -> None:
        for name in ("mac_energy_pj", "reg_write_energy_pj", "clk_energy_pj", "static_power_mw"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.flex_energy_scale < 1.0:
            raise ValueError("flex_energy_scale must be >= 1 (extra capacitance)")


DEFAULT_COEFFS = EnergyCoefficients()

_COEFF_FIELDS = (
    "mac_energy_pj",
    "reg_write_energy_pj",
    "clk_energy_pj",
    "static_power_mw",
    "flex_energy_scale",
)


def load_coefficients(path: str | Path) -> EnergyCoefficients:
    """Read coefficients from a key=value file; unknown keys are rejected."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _COEFF_FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown coefficient {key!r}")
        try:
            values[key] = float(val.strip())
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad number {val.strip()!r}") from None
    return EnergyCoefficients(**values)


@dataclass(frozen=True)
class CostReport:
    """Cost of one run at one clock period."""

    cycles: int
    period_ps: int
    time_ps: int
    energy_pj: float

    @property
    def period_ns(self) -> float:
        return self.period_ps / 1000.0

    @property
    def time_ns(self) -> float:
        return self.time_ps / 1000.0

    @property
    def avg_power_mw(self) -> float:
        return self.energy_pj / self.time_ns  # pJ/ns == mW

    @property
    def edp_pj_ns(self) -> float:
        return self.energy_pj * self.time_ns


def _dynamic_energy_pj(counters: TileCounters, coeffs: EnergyCoefficients) -> float:
    return (
        coeffs.mac_energy_pj * counters.mac_ops
        + coeffs.reg_write_energy_pj * counters.reg_writes
        + coeffs.clk_energy_pj * counters.active_reg_cycles
    )


def _report(counters: TileCounters, period_ps: int, scale: float, coeffs: EnergyCoefficients) -> CostReport:
    time_ps = counters.cycles * period_ps
    energy = scale * _dynamic_energy_pj(counters, coeffs) + coeffs.static_power_mw * (time_ps / 1000.0)
    return CostReport(cycles=counters.cycles, period_ps=period_ps, time_ps=time_ps, energy_pj=energy)


def estimate(
    counters: TileCounters,
    k: int,
    model: ClockModel,
    coeffs: EnergyCoefficients = DEFAULT_COEFFS,
) -> CostReport:
    """Cost of a run on the configurable array at depth k.

    Gated register stages contribute no clock energy by construction: only
    ``active_reg_cycles`` is charged.
    """
    return _report(counters, model.period_ps(k), coeffs.flex_energy_scale, coeffs)


def estimate_conventional(
    counters: TileCounters,
    model: ClockModel,
    coeffs: EnergyCoefficients = DEFAULT_COEFFS,
) -> CostReport:
    """Cost of the same work on the fixed-pipeline array (no carry-save or
    bypass hardware, higher clock, nothing gated)."""
    return _report(counters, model.conventional_ps, 1.0, coeffs)


def edp_ratio(baseline: CostReport, candidate: CostReport) -> float:
    """baseline EDP over candidate EDP; > 1 means the candidate is better."""
    if baseline.edp_pj_ns <= 0:
        raise ValueError("baseline EDP must be positive")
    return baseline.edp_pj_ns / candidate.edp_pj_ns


def predict_gemm_counters(k: int, shape: GemmShape, cfg: ArrayConfig) -> TileCounters:
    """Structural counters for a full tiled GEMM (analytic path, no simulation)."""
    per_tile = predict_tile_counters(k, cfg, shape.t)
    tiles = tile_count(shape, cfg)
    return TileCounters(
        cycles=per_tile.cycles * tiles,
        streaming_cycles=per_tile.streaming_cycles * tiles,
        mac_ops=per_tile.mac_ops * tiles,
        reg_writes=per_tile.reg_writes * tiles,
        gated_reg_cycles=per_tile.gated_reg_cycles * tiles,
        active_reg_cycles=per_tile.active_reg_cycles * tiles,
    )


def _scale_counters(c: TileCounters, rep: int) -> TileCounters:
    if rep == 1:
        return c
    return TileCounters(*(v * rep for v in (
        c.cycles, c.streaming_cycles, c.mac_ops, c.reg_writes,
        c.gated_reg_cycles, c.active_reg_cycles,
    )))


@dataclass(frozen=True)
class CostSummary:
    time_ps: int
    energy_pj: float

    @property
    def time_ns(self) -> float:
        return self.time_ps / 1000.0

    @property
    def avg_power_mw(self) -> float:
        return self.energy_pj / self.time_ns

    @property
    def edp_pj_ns(self) -> float:
        return self.energy_pj * self.time_ns


@dataclass(frozen=True)
class NetworkCost:
    """Aggregate cost of a scheduled network on both arrays.

    ``chosen`` uses the optimizer's per-layer depths, ``normal_pipeline``
    forces depth 1 on the configurable array, and ``conventional`` is the
    fixed-pipeline baseline; ``by_mode`` splits the chosen run per depth.
    """

    layer_reports: tuple[CostReport, ...]
    chosen: CostSummary
    normal_pipeline: CostSummary
    conventional: CostSummary
    by_mode: dict[int, CostSummary]

    @property
    def edp_ratio_vs_conventional(self) -> float:
        if self.conventional.edp_pj_ns <= 0:
            raise ValueError("baseline EDP must be positive")
        return self.conventional.edp_pj_ns / self.chosen.edp_pj_ns

    @property
    def power_saving_vs_conventional(self) -> float:
        return 1.0 - self.chosen.avg_power_mw / self.conventional.avg_power_mw


def network_cost(
    schedule: NetworkSchedule,
    cfg: ArrayConfig,
    model: ClockModel,
    coeffs: EnergyCoefficients = DEFAULT_COEFFS,
) -> NetworkCost:
    reports: list[CostReport] = []
    mode_time: dict[int, int] = {}
    mode_energy: dict[int, float] = {}
    tot_t = tot_e = 0
    k1_t = k1_e = 0
    conv_t = conv_e = 0
    for layer in schedule.layers:
        counters = _scale_counters(
            predict_gemm_counters(layer.choice.k, layer.shape, cfg), layer.repeat
        )
        rep = estimate(counters, layer.choice.k, model, coeffs)
        reports.append(rep)
        tot_t += rep.time_ps
        tot_e += rep.energy_pj
        mode_time[layer.choice.k] = mode_time.get(layer.choice.k, 0) + rep.time_ps
        mode_energy[layer.choice.k] = mode_energy.get(layer.choice.k, 0.0) + rep.energy_pj

        c1 = _scale_counters(predict_gemm_counters(1, layer.shape, cfg), layer.repeat)
        r1 = estimate(c1, 1, model, coeffs)
        k1_t += r1.time_ps
        k1_e += r1.energy_pj
        rc = estimate_conventional(c1, model, coeffs)
        conv_t += rc.time_ps
        conv_e += rc.energy_pj

    return NetworkCost(
        layer_reports=tuple(reports),
        chosen=CostSummary(tot_t, tot_e),
        normal_pipeline=CostSummary(k1_t, k1_e),
        conventional=CostSummary(conv_t, conv_e),
        by_mode={k: CostSummary(mode_time[k], mode_energy[k]) for k in sorted(mode_time)},
    )
