"""Command-line front end: functional simulation, per-layer depth
optimization, design-space sweeps, and cost reports.

Exit status is 0 on success, 1 when a domain error was reported, and 2 for
usage errors.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import output
from .optimize import schedule_network
from .power import DEFAULT_COEFFS, load_coefficients, network_cost
from .simulator import simulate_gemm
from .timing import (
    ArrayConfig,
    ClockModel,
    DelayParams,
    DivisibilityError,
    GemmShape,
    LinearClock,
    TableClock,
    UnsupportedDepthError,
    default_clock_table,
    exec_time_conventional_ps,
    total_cycles,
)
from .workloads import (
    BUILTIN_NETWORKS,
    LoweredLayer,
    builtin_network,
    load_network,
    lower_network,
)

ASSUMPTION_NOTES = (
    "coefficients are engineering estimates, not silicon measurements",
    "grouped convolutions run per group; repeated shapes are merged with a repeat count",
    "mode reconfiguration costs no cycles beyond the normal weight preload",
)


class CliError(Exception):
    """Domain error; reported on stderr with exit status 1."""


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise CliError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not values:
        raise CliError(f"{flag} must not be empty")
    return values


def _add_array_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=int, default=128, help="array rows (default 128)")
    p.add_argument("--cols", type=int, default=128, help="array columns (default 128)")
    p.add_argument(
        "--depths", default="1,2,4",
        help="comma list of supported pipeline depths (default 1,2,4)",
    )
    p.add_argument(
        "--clock-table", default=None, metavar="NAME|FILE",
        help="'default' for the built-in reference table, or a key=value file "
        "with integer picosecond periods (conventional=..., k1=..., ...)",
    )
    p.add_argument(
        "--clock-linear", default=None, metavar="DFF,DMUL,DADD,DCSA,DMUX",
        help="affine clock model from five picosecond delays",
    )
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", default="text", choices=output.FORMATS)
    p.add_argument("--seed", type=int, default=0, help="RNG seed for simulate")


def _add_workload_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--gemm", metavar="M,N,T", help="explicit GEMM dimensions")
    g.add_argument("--network", metavar="FILE", help="network descriptor CSV")
    g.add_argument(
        "--builtin", metavar="NAME",
        help=f"bundled network table; one of {', '.join(BUILTIN_NETWORKS)} "
        "(report accepts a comma list)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collapsar",
        description="Weight-stationary systolic array with collapsible pipelining: "
        "simulator, depth optimizer, and cost model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="cycle-accurate functional run with oracle check")
    _add_array_args(p_sim)
    _add_workload_args(p_sim)
    p_sim.add_argument("--k", type=int, default=1, help="pipeline depth to simulate")
    p_sim.add_argument(
        "--budget", type=float, default=1e9,
        help="max PE updates (rows*cols*total_cycles) per layer (default 1e9)",
    )

    p_opt = sub.add_parser("optimize", help="per-layer depth selection (analytic)")
    _add_array_args(p_opt)
    _add_workload_args(p_opt)

    p_sweep = sub.add_parser("sweep", help="execution time across pipeline depths")
    _add_array_args(p_sweep)
    _add_workload_args(p_sweep)
    p_sweep.add_argument("--k", default="1,2,4", help="comma list of depths to sweep")
    p_sweep.add_argument(
        "--sizes", default=None,
        help="optional comma list of square array sizes to cross with depths",
    )
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")

    p_rep = sub.add_parser("report", help="time, energy, power, and EDP summary")
    _add_array_args(p_rep)
    _add_workload_args(p_rep)
    p_rep.add_argument("--coeffs", default=None, help="energy coefficient key=value file")
    return parser


def _resolve_clock(args: argparse.Namespace) -> ClockModel:
    if args.clock_table and args.clock_linear:
        raise CliError("choose either --clock-table or --clock-linear, not both")
    if args.clock_linear:
        vals = _parse_int_list(args.clock_linear, "--clock-linear")
        if len(vals) != 5:
            raise CliError("--clock-linear expects five delays: dff,dmul,dadd,dcsa,dmux")
        return LinearClock(DelayParams(*vals))
    name = args.clock_table or "default"
    if name in ("default", "paper"):
        return default_clock_table()
    return _load_clock_table(name)


def _load_clock_table(path: str) -> TableClock:
    periods: dict[int, int] = {}
    conventional: int | None = None
    p = Path(path)
    if not p.exists():
        raise CliError(f"clock table file not found: {path}")
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key = key.strip()
        try:
            ps = int(val.strip())
        except ValueError:
            raise CliError(f"{path}:{lineno}: period must be an integer (ps)") from None
        if key == "conventional":
            conventional = ps
        elif key.startswith("k") and key[1:].isdigit():
            periods[int(key[1:])] = ps
        else:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
    if conventional is None or not periods:
        raise CliError(f"{path}: need a 'conventional' entry and at least one 'k<depth>' entry")
    try:
        return TableClock(periods_ps=periods, conventional_ps=conventional)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None


def _resolve_array(args: argparse.Namespace) -> ArrayConfig:
    depths = tuple(_parse_int_list(args.depths, "--depths"))
    try:
        return ArrayConfig(rows=args.rows, cols=args.cols, supported_depths=depths)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _resolve_workload(args: argparse.Namespace) -> list[LoweredLayer]:
    if args.gemm:
        vals = _parse_int_list(args.gemm, "--gemm")
        if len(vals) != 3:
            raise CliError("--gemm expects M,N,T")
        try:
            shape = GemmShape(m=vals[0], n=vals[1], t=vals[2])
        except ValueError as exc:
            raise CliError(str(exc)) from None
        return [LoweredLayer(name="gemm", shape=shape)]
    try:
        if args.network:
            layers = load_network(args.network)
        else:
            layers = builtin_network(args.builtin)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc)) from None
    return lower_network(layers)


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args: argparse.Namespace) -> list[dict[str, Any]]:
    cfg = _resolve_array(args)
    clock = _resolve_clock(args)
    layers = _resolve_workload(args)
    try:
        cfg.check_depth(args.k)
        clock.period_ps(args.k)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    rng = np.random.default_rng(args.seed)
    records = []
    for layer in layers:
        shape = layer.shape
        cycles = total_cycles(args.k, shape, cfg)
        updates = cycles * cfg.rows * cfg.cols
        if updates > args.budget:
            raise CliError(
                f"layer {layer.name!r} needs {updates:.3g} PE updates, over the "
                f"budget of {args.budget:.3g}; use 'optimize' for analytic results"
            )
        lo, hi = -(1 << (cfg.input_bits - 1)), 1 << (cfg.input_bits - 1)
        a = rng.integers(lo, hi, size=(shape.t, shape.n), dtype=np.int64)
        b = rng.integers(lo, hi, size=(shape.n, shape.m), dtype=np.int64)
        res = simulate_gemm(a, b, args.k, cfg)
        reference = a @ b  # int64 matmul wraps mod 2**64, as does the array
        verdict = "PASS" if np.array_equal(res.output, reference) else "FAIL"
        records.append(
            {
                "layer": layer.name,
                "m": shape.m, "n": shape.n, "t": shape.t,
                "k": args.k,
                "verdict": verdict,
                "cycles": res.cycles,
                "expected_cycles": cycles,
                "tiles": res.tiles,
                "mac_ops": res.counters.mac_ops,
                "reg_writes": res.counters.reg_writes,
                "gated_reg_cycles": res.counters.gated_reg_cycles,
                "time_ns": res.cycles * clock.period_ps(args.k) / 1000.0,
                "seed": args.seed,
            }
        )
        if verdict != "PASS":  # pragma: no cover - would indicate a simulator bug
            raise CliError(f"functional check failed on layer {layer.name!r}")
    return records


def cmd_optimize(args: argparse.Namespace) -> list[dict[str, Any]]:
    cfg = _resolve_array(args)
    clock = _resolve_clock(args)
    layers = _resolve_workload(args)
    sched = schedule_network(
        [l.shape for l in layers], cfg, clock, repeats=[l.repeat for l in layers]
    )
    records = []
    for layer, ls in zip(layers, sched.layers):
        k_hat = ls.choice.analytic_k_hat
        records.append(
            {
                "layer": layer.name,
                "m": ls.shape.m, "n": ls.shape.n, "t": ls.shape.t,
                "repeat": ls.repeat,
                "k": ls.choice.k,
                "k_hat": round(k_hat, 4) if k_hat is not None else None,
                "cycles": ls.choice.cycles * ls.repeat,
                "time_ns": ls.choice.time_ps * ls.repeat / 1000.0,
                "conv_time_ns": ls.conv_time_ps * ls.repeat / 1000.0,
                "savings_pct": round(100.0 * ls.savings_frac, 4),
            }
        )
    records.append(
        {
            "layer": "TOTAL",
            "m": None, "n": None, "t": None, "repeat": None, "k": None, "k_hat": None,
            "cycles": None,
            "time_ns": sched.total_time_ps / 1000.0,
            "conv_time_ns": sched.conv_total_time_ps / 1000.0,
            "savings_pct": round(100.0 * sched.savings_frac, 4),
        }
    )
    return records


def _sweep_point(
    k: int, size: int | None, args: argparse.Namespace, layers: list[LoweredLayer],
    clock: ClockModel,
) -> dict[str, Any]:
    rows = size if size is not None else args.rows
    cols = size if size is not None else args.cols
    rec: dict[str, Any] = {"k": k, "rows": rows, "cols": cols}
    try:
        depths = sorted({1, k})
        cfg = ArrayConfig(rows=rows, cols=cols, supported_depths=tuple(depths))
        period = clock.period_ps(k)
        cycles = time_ps = conv_ps = 0
        for layer in layers:
            cyc = total_cycles(k, layer.shape, cfg) * layer.repeat
            cycles += cyc
            time_ps += cyc * period
            conv_ps += exec_time_conventional_ps(layer.shape, cfg, clock) * layer.repeat
        rec.update(
            supported=True,
            cycles=cycles,
            period_ns=period / 1000.0,
            time_ns=time_ps / 1000.0,
            conv_time_ns=conv_ps / 1000.0,
        )
    except (DivisibilityError, UnsupportedDepthError, ValueError) as exc:
        rec.update(
            supported=False, cycles=None, period_ns=None, time_ns=None,
            conv_time_ns=None, error=str(exc),
        )
    return rec


def cmd_sweep(args: argparse.Namespace) -> list[dict[str, Any]]:
    clock = _resolve_clock(args)
    layers = _resolve_workload(args)
    ks = _parse_int_list(args.k, "--k")
    sizes: list[int | None] = (
        [int(s) for s in _parse_int_list(args.sizes, "--sizes")] if args.sizes else [None]
    )
    points = [(k, size) for size in sizes for k in ks]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [pool.submit(_sweep_point, k, size, args, layers, clock) for k, size in points]
        return [f.result() for f in futures]  # submission order keeps output deterministic


def cmd_report(args: argparse.Namespace) -> list[dict[str, Any]]:
    cfg = _resolve_array(args)
    clock = _resolve_clock(args)
    coeffs = DEFAULT_COEFFS
    if args.coeffs:
        try:
            coeffs = load_coefficients(args.coeffs)
        except (OSError, ValueError) as exc:
            raise CliError(str(exc)) from None
    if args.builtin:
        names = [n.strip() for n in args.builtin.split(",") if n.strip()]
        workloads = []
        for n in names:
            try:
                workloads.append((n, lower_network(builtin_network(n))))
            except ValueError as exc:
                raise CliError(str(exc)) from None
    else:
        workloads = [(args.network or "gemm", _resolve_workload(args))]
    records = []
    for name, layers in workloads:
        sched = schedule_network(
            [l.shape for l in layers], cfg, clock, repeats=[l.repeat for l in layers]
        )
        nc = network_cost(sched, cfg, clock, coeffs)
        mode_power = {
            f"power_k{k}_mw": round(s.avg_power_mw, 4) for k, s in nc.by_mode.items()
        }
        records.append(
            {
                "network": name,
                "layers": len(layers),
                "grouped_layers": sum(1 for l in layers if l.repeat > 1),
                "time_ns": nc.chosen.time_ns,
                "conv_time_ns": nc.conventional.time_ns,
                "savings_pct": round(100.0 * sched.savings_frac, 4),
                "energy_pj": round(nc.chosen.energy_pj, 4),
                "avg_power_mw": round(nc.chosen.avg_power_mw, 4),
                "normal_pipeline_power_mw": round(nc.normal_pipeline.avg_power_mw, 4),
                "conv_power_mw": round(nc.conventional.avg_power_mw, 4),
                "power_saving_vs_conv_pct": round(100.0 * nc.power_saving_vs_conventional, 4),
                "edp_ratio_vs_conv": round(nc.edp_ratio_vs_conventional, 4),
                **mode_power,
            }
        )
    return records


_COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        records = _COMMANDS[args.command](args)
        svg_kwargs: dict[str, Any] = {}
        if args.format == "svg":
            if args.command != "sweep":
                raise CliError("svg output is only available for 'sweep'")
            supported = [r for r in records if r.get("supported")]
            base = supported[0]["conv_time_ns"] if supported else None
            svg_kwargs = {
                "value_key": "time_ns",
                "label_key": "k",
                "baseline": base,
                "title": "execution time vs pipeline depth",
            }
        notes = ASSUMPTION_NOTES if args.command in ("optimize", "report") else ()
        _emit(args, output.render(args.format, records, notes=notes, svg_kwargs=svg_kwargs))
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
