"""Record emission for the command-line front end.

Every command produces a list of flat record dicts; csv and json-lines
renderings are generated from the same list so they always carry identical
values.  SVG output is a self-contained bar chart used by sweeps.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Any, Mapping, Sequence

Record = Mapping[str, Any]

FORMATS = ("text", "csv", "jsonl", "svg")


def render_csv(records: Sequence[Record]) -> str:
    if not records:
        return ""
    fields: list[str] = []
    for rec in records:
        for key in rec:
            if key not in fields:
                fields.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: _plain(v) for k, v in rec.items()})
    return buf.getvalue()


def render_jsonl(records: Sequence[Record]) -> str:
    return "".join(json.dumps(dict(rec), sort_keys=False) + "\n" for rec in records)


def _plain(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def render_text(records: Sequence[Record], notes: Sequence[str] = ()) -> str:
    if not records:
        return "".join(f"# {n}\n" for n in notes)
    fields: list[str] = []
    for rec in records:
        for key in rec:
            if key not in fields:
                fields.append(key)
    rows = [[_fmt_cell(rec.get(f, "")) for f in fields] for rec in records]
    widths = [max(len(f), *(len(r[i]) for r in rows)) for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip()]
    for r in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip())
    out = "\n".join(lines) + "\n"
    if notes:
        out += "".join(f"# {n}\n" for n in notes)
    return out


def _fmt_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if value is None:
        return "-"
    return str(value)


def sweep_svg(
    records: Sequence[Record],
    value_key: str = "time_ns",
    label_key: str = "k",
    baseline: float | None = None,
    title: str = "",
) -> str:
    """Bar chart of one value per record, with an optional horizontal
    baseline rule (the fixed-pipeline array)."""
    width, height = 640, 400
    margin_l, margin_b, margin_t = 70, 40, 30
    plot_w, plot_h = width - margin_l - 20, height - margin_b - margin_t
    values = [float(r[value_key]) for r in records if r.get(value_key) is not None]
    vmax = max(values + ([baseline] if baseline else []) + [1.0]) * 1.1

    def y(v: float) -> float:
        return margin_t + plot_h * (1 - v / vmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t+plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t+plot_h}" x2="{margin_l+plot_w}" '
        f'y2="{margin_t+plot_h}" stroke="black"/>',
    ]
    n = max(len(records), 1)
    slot = plot_w / n
    bar_w = slot * 0.6
    for i, rec in enumerate(records):
        x0 = margin_l + i * slot + (slot - bar_w) / 2
        label = str(rec.get(label_key, i))
        if rec.get(value_key) is None:
            parts.append(
                f'<text x="{x0+bar_w/2:.1f}" y="{y(0)-6:.1f}" text-anchor="middle" '
                f'font-size="11" fill="gray">n/a</text>'
            )
        else:
            v = float(rec[value_key])
            parts.append(
                f'<rect x="{x0:.1f}" y="{y(v):.1f}" width="{bar_w:.1f}" '
                f'height="{y(0)-y(v):.1f}" fill="#4878a8"/>'
            )
            parts.append(
                f'<text x="{x0+bar_w/2:.1f}" y="{y(v)-4:.1f}" text-anchor="middle" '
                f'font-size="10">{v:.0f}</text>'
            )
        parts.append(
            f'<text x="{x0+bar_w/2:.1f}" y="{margin_t+plot_h+16:.1f}" '
            f'text-anchor="middle" font-size="12">k={label}</text>'
        )
    if baseline is not None:
        parts.append(
            f'<line x1="{margin_l}" y1="{y(baseline):.1f}" x2="{margin_l+plot_w}" '
            f'y2="{y(baseline):.1f}" stroke="#c03030" stroke-dasharray="6,3"/>'
        )
        parts.append(
            f'<text x="{margin_l+plot_w:.0f}" y="{y(baseline)-5:.1f}" text-anchor="end" '
            f'font-size="11" fill="#c03030">fixed pipeline</text>'
        )
    parts.append(
        f'<text x="16" y="{margin_t+plot_h/2:.0f}" font-size="12" '
        f'transform="rotate(-90 16 {margin_t+plot_h/2:.0f})" '
        f'text-anchor="middle">{value_key}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render(
    fmt: str,
    records: Sequence[Record],
    notes: Sequence[str] = (),
    svg_kwargs: Mapping[str, Any] | None = None,
) -> str:
    if fmt == "csv":
        return render_csv(records)
    if fmt == "jsonl":
        return render_jsonl(records)
    if fmt == "text":
        return render_text(records, notes)
    if fmt == "svg":
        return sweep_svg(records, **(svg_kwargs or {}))
    raise ValueError(f"unknown format {fmt!r}")
