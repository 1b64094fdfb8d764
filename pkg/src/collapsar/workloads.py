"""Convolution-to-GEMM lowering and network descriptor ingestion.

Network files are CSV with the header

    name,ifmap_h,ifmap_w,filt_h,filt_w,channels,num_filters,stride,padding

one convolution per row, ``#`` comment lines skipped.  An optional trailing
``groups`` column marks grouped/depthwise convolutions; rows without it are
dense.  A grouped row lowers to one GEMM per group (M and the reduction
depth shrink by the group count) repeated ``groups`` times; identical
repeated shapes are reported once with a repetition count.  Fully connected
layers are expressed as 1x1 convolutions on 1x1 inputs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .timing import GemmShape

HEADER = (
    "name", "ifmap_h", "ifmap_w", "filt_h", "filt_w",
    "channels", "num_filters", "stride", "padding",
)
OPTIONAL_COLUMNS = ("groups",)

BUILTIN_NETWORKS = ("resnet34", "mobilenet", "convnext")


class NetworkFormatError(ValueError):
    """Malformed network descriptor file; message carries line and column."""


@dataclass(frozen=True)
class ConvLayer:
    name: str
    ifmap_h: int
    ifmap_w: int
    filt_h: int
    filt_w: int
    channels: int
    num_filters: int
    stride: int
    padding: int
    groups: int = 1

    def __post_init__(self) -> None:
        positive = (
            "ifmap_h", "ifmap_w", "filt_h", "filt_w",
            "channels", "num_filters", "stride", "groups",
        )
        for fname in positive:
            if getattr(self, fname) < 1:
                raise ValueError(f"{fname} must be >= 1 in layer {self.name!r}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0 in layer {self.name!r}")
        if self.channels % self.groups or self.num_filters % self.groups:
            raise ValueError(
                f"groups must divide channels and num_filters in layer {self.name!r}"
            )
        if self.out_h < 1 or self.out_w < 1:
            raise ValueError(f"layer {self.name!r} has a non-positive output size")

    @property
    def out_h(self) -> int:
        return (self.ifmap_h + 2 * self.padding - self.filt_h) // self.stride + 1

    @property
    def out_w(self) -> int:
        return (self.ifmap_w + 2 * self.padding - self.filt_w) // self.stride + 1


@dataclass(frozen=True)
class LoweredLayer:
    """One GEMM shape plus how many times the layer issues it."""

    name: str
    shape: GemmShape
    repeat: int = 1


def lower_conv_to_gemm(layer: ConvLayer) -> GemmShape:
    """GEMM dimensions of one convolution (per group, for grouped layers):
    M = filters, N = filt_h * filt_w * channels, T = out_h * out_w."""
    g = layer.groups
    return GemmShape(
        m=layer.num_filters // g,
        n=layer.filt_h * layer.filt_w * (layer.channels // g),
        t=layer.out_h * layer.out_w,
    )


def lower_layer(layer: ConvLayer) -> LoweredLayer:
    return LoweredLayer(name=layer.name, shape=lower_conv_to_gemm(layer), repeat=layer.groups)


def lower_network(layers: Iterable[ConvLayer]) -> list[LoweredLayer]:
    return [lower_layer(layer) for layer in layers]


def _parse_int(value: str, line: int, column: str, path: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise NetworkFormatError(
            f"{path}:{line}: column {column!r}: expected integer, got {value.strip()!r}"
        ) from None


def load_network(path: str | Path) -> list[ConvLayer]:
    """Parse a network CSV; raises NetworkFormatError naming line and column."""
    path = Path(path)
    layers: list[ConvLayer] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header: Sequence[str] | None = None
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            cells = [cell.strip() for cell in row]
            if header is None:
                expected = list(HEADER)
                if cells[: len(expected)] != expected or any(
                    c not in OPTIONAL_COLUMNS for c in cells[len(expected):]
                ):
                    raise NetworkFormatError(
                        f"{path}:{lineno}: bad header; expected "
                        f"{','.join(HEADER)}[,groups]"
                    )
                header = cells
                continue
            if len(cells) != len(header):
                raise NetworkFormatError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}"
                )
            values = dict(zip(header, cells))
            kwargs = {
                col: _parse_int(values[col], lineno, col, str(path))
                for col in header
                if col != "name"
            }
            try:
                layers.append(ConvLayer(name=values["name"], **kwargs))
            except ValueError as exc:
                raise NetworkFormatError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise NetworkFormatError(f"{path}: empty file")
    if not layers:
        raise NetworkFormatError(f"{path}: no layers after the header")
    return layers


def builtin_network(name: str) -> list[ConvLayer]:
    """Bundled single-batch inference layer table for one of the known CNNs."""
    if name not in BUILTIN_NETWORKS:
        raise ValueError(f"unknown network {name!r}; choose from {BUILTIN_NETWORKS}")
    ref = resources.files("collapsar").joinpath("data", f"{name}.csv")
    with resources.as_file(ref) as p:
        return load_network(p)
