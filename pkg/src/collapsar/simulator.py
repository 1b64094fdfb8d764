"""Cycle-accurate, bit-exact simulation of the weight-stationary array.

The array runs in whole clock cycles with two phases per cycle: combinational
settle, then register latch.  Collapsing k stages makes the intermediate
registers transparent, which here is a pure dataflow rewiring: only the
register at the end of each k-group is ever written, so an activation
broadcasts through a k-wide column group in one cycle and the k products of a
row group reduce through a chain of 3:2 carry-save stages before the group's
carry-propagate adder resolves them into the pipeline register.

All datapath values are held as uint64 residues; two's-complement wraparound
at ``accum_bits`` is applied at every latch point, and results are converted
back to signed integers only at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .timing import ArrayConfig, DivisibilityError, latency_shallow

TraceSink = Callable[[str], object] | TextIO


@dataclass(frozen=True)
class PeConfig:
    """Per-PE transparency bits, one per pipeline direction."""

    h_transparent: bool
    v_transparent: bool


@dataclass(frozen=True)
class PeGrid:
    """Transparency configuration of the whole array for one depth."""

    k: int
    h_transparent: np.ndarray  # bool (rows, cols); True = horizontal register bypassed
    v_transparent: np.ndarray  # bool (rows, cols); True = vertical register bypassed

    def config(self, r: int, c: int) -> PeConfig:
        return PeConfig(bool(self.h_transparent[r, c]), bool(self.v_transparent[r, c]))

    @property
    def h_transparent_count(self) -> int:
        return int(self.h_transparent.sum())

    @property
    def v_transparent_count(self) -> int:
        return int(self.v_transparent.sum())


@dataclass(frozen=True)
class TileCounters:
    """Structural activity counts for one tile run.

    Register accounting is per pipeline stage: each PE contributes one
    horizontal stage and one vertical stage (the vertical sum/carry pair
    counts as a single stage; in opaque mode the carry register holds zero
    because the carry-propagate adder resolves before latching, so it never
    toggles).  Opaque stages latch on every streaming cycle; transparent
    stages are clock-gated for the whole run.  Weight registers latch once
    per preload and are gated afterwards.
    """

    cycles: int
    streaming_cycles: int
    mac_ops: int
    reg_writes: int
    gated_reg_cycles: int
    active_reg_cycles: int

    def __add__(self, other: "TileCounters") -> "TileCounters":
        return TileCounters(
            cycles=self.cycles + other.cycles,
            streaming_cycles=self.streaming_cycles + other.streaming_cycles,
            mac_ops=self.mac_ops + other.mac_ops,
            reg_writes=self.reg_writes + other.reg_writes,
            gated_reg_cycles=self.gated_reg_cycles + other.gated_reg_cycles,
            active_reg_cycles=self.active_reg_cycles + other.active_reg_cycles,
        )


@dataclass(frozen=True)
class TileSimResult:
    """Functional output plus cycle count and activity counters for one tile."""

    output: np.ndarray  # (T, C) int64, two's complement at accum_bits
    cycles: int
    counters: TileCounters

    @property
    def reg_writes(self) -> int:
        return self.counters.reg_writes

    @property
    def gated_reg_cycles(self) -> int:
        return self.counters.gated_reg_cycles

    @property
    def mac_ops(self) -> int:
        return self.counters.mac_ops


@dataclass(frozen=True)
class GemmSimResult:
    output: np.ndarray  # (T, M) int64
    cycles: int  # sum of measured per-tile cycle counts
    counters: TileCounters
    tiles: int


def activity_counters(result: TileSimResult | GemmSimResult) -> tuple[int, int, int]:
    """(reg_writes, gated_reg_cycles, mac_ops) of a completed run."""
    c = result.counters
    return c.reg_writes, c.gated_reg_cycles, c.mac_ops


def csa_3to2(a: int, b: int, c: int, bits: int = 64) -> tuple[int, int]:
    """One 3:2 carry-save stage on ``bits``-wide two's-complement operands.

    sum + carry == a + b + c (mod 2**bits); the carry-out of the top bit is
    discarded, exactly as in a row of full adders.
    """
    mask = (1 << bits) - 1
    au, bu, cu = a & mask, b & mask, c & mask
    s = au ^ bu ^ cu
    carry = (((au & bu) | (au & cu) | (bu & cu)) << 1) & mask
    return _to_signed_int(s, bits), _to_signed_int(carry, bits)


def _to_signed_int(x: int, bits: int) -> int:
    sign = 1 << (bits - 1)
    return (x & ((1 << bits) - 1)) - ((x & sign) << 1)


def _csa_arrays(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, mask: np.uint64
) -> tuple[np.ndarray, np.ndarray]:
    s = a ^ b ^ c
    carry = (((a & b) | (a & c) | (b & c)) << np.uint64(1)) & mask
    return s, carry


def _to_unsigned(values: np.ndarray, bits: int) -> np.ndarray:
    """Reinterpret signed integers as uint64 residues mod 2**bits."""
    u = np.asarray(values, dtype=np.int64).view(np.uint64).copy()
    if bits < 64:
        u &= np.uint64((1 << bits) - 1)
    return u


def _to_signed(values: np.ndarray, bits: int) -> np.ndarray:
    """Convert uint64 residues mod 2**bits back to signed int64."""
    if bits == 64:
        return values.view(np.int64).copy()
    u = values & np.uint64((1 << bits) - 1)
    sign = np.uint64(1 << (bits - 1))
    out = u.view(np.int64).copy()
    neg = (u & sign) != 0
    out[neg] -= 1 << bits
    return out


def build_pe_grid(k: int, cfg: ArrayConfig) -> PeGrid:
    """Transparency bits for depth k.

    A register is opaque only at the end of its k-group: PE (r, c) bypasses
    vertically iff r mod k != k-1 and horizontally iff c mod k != k-1.  The
    bits load together with the weights, at no extra cycles.
    """
    if k < 1:
        raise ValueError("depth must be >= 1")
    if cfg.rows % k or cfg.cols % k:
        raise DivisibilityError(f"depth {k} does not divide array {cfg.rows}x{cfg.cols}")
    r_idx = np.arange(cfg.rows) % k != k - 1
    c_idx = np.arange(cfg.cols) % k != k - 1
    v_trans = np.broadcast_to(r_idx[:, None], (cfg.rows, cfg.cols)).copy()
    h_trans = np.broadcast_to(c_idx[None, :], (cfg.rows, cfg.cols)).copy()
    return PeGrid(k=k, h_transparent=h_trans, v_transparent=v_trans)


def input_skew(k: int, r: int, t: int) -> int:
    """West-edge arrival cycle (relative to end of preload) of A[t] at row r.

    Rows within a k-group receive their elements in the same cycle, so the
    classic one-cycle-per-row stagger flattens to one cycle per row group.
    """
    if r < 0:
        raise ValueError("row index must be >= 0")
    return t + r // k


def predict_tile_counters(k: int, cfg: ArrayConfig, t: int) -> TileCounters:
    """Closed-form activity counts for one tile; matches simulate_tile exactly.

    The activity model is structural (independent of the streamed data):
    every opaque pipeline stage latches on each streaming cycle and every
    transparent stage stays gated, so the counts follow from the grid census
    and the cycle count alone.
    """
    rows, cols = cfg.rows, cfg.cols
    cycles = latency_shallow(k, rows, cols, t)
    streaming = cycles - rows
    opaque_stages = rows * (cols // k) + (rows // k) * cols  # h + v
    gated_stages = 2 * rows * cols - opaque_stages
    active = opaque_stages * streaming
    return TileCounters(
        cycles=cycles,
        streaming_cycles=streaming,
        mac_ops=rows * cols * t,
        reg_writes=rows * cols + active,  # weight preload + streaming latches
        gated_reg_cycles=gated_stages * streaming,
        active_reg_cycles=active,
    )


def _validate_inputs(a: np.ndarray, b: np.ndarray, cfg: ArrayConfig) -> None:
    lo, hi = -(1 << (cfg.input_bits - 1)), (1 << (cfg.input_bits - 1)) - 1
    for name, m in (("a", a), ("b", b)):
        if m.size and (m.min() < lo or m.max() > hi):
            raise ValueError(
                f"{name} entries must fit {cfg.input_bits}-bit two's complement [{lo}, {hi}]"
            )


class _Tracer:
    """Optional per-cycle record emitter for probed PEs (tab-separated)."""

    HEADER = "cycle\trow\tcol\tweight\tactivation\tsum\tcarry"

    def __init__(
        self, sink: TraceSink, probes: Iterable[tuple[int, int]], bits: int,
        rows: int, cols: int,
    ):
        self._write = sink if callable(sink) else sink.write
        self.probes = sorted(set(probes))
        for r, c in self.probes:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ValueError(f"probe {(r, c)} outside the {rows}x{cols} array")
        self.bits = bits
        self._write(self.HEADER + "\n")

    def emit(self, cycle: int, r: int, c: int, weight: int, act: int, s: int, carry: int) -> None:
        s_s = _to_signed_int(int(s), self.bits)
        c_s = _to_signed_int(int(carry), self.bits)
        self._write(f"{cycle}\t{r}\t{c}\t{weight}\t{act}\t{s_s}\t{c_s}\n")


def simulate_tile(
    a_tile: np.ndarray | Sequence[Sequence[int]],
    b_tile: np.ndarray | Sequence[Sequence[int]],
    k: int,
    cfg: ArrayConfig,
    trace: TraceSink | None = None,
    probes: Iterable[tuple[int, int]] = (),
) -> TileSimResult:
    """Run one (T x R) by (R x C) tile product at collapse depth k.

    Preload takes R cycles (one weight row per cycle, configuration bits in
    parallel).  Streaming then advances one column group per cycle
    horizontally and one row group per cycle vertically; the measured cycle
    count equals R + R/k + C/k + T - 2.
    """
    cfg.check_depth(k)
    a = np.asarray(a_tile, dtype=np.int64)
    b = np.asarray(b_tile, dtype=np.int64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("tiles must be 2-D")
    t_dim, rows = a.shape
    if t_dim < 1:
        raise ValueError("tile must stream at least one row")
    if b.shape != (cfg.rows, cfg.cols) or rows != cfg.rows:
        raise ValueError(
            f"tile shapes {a.shape} x {b.shape} do not match array "
            f"{cfg.rows}x{cfg.cols}"
        )
    _validate_inputs(a, b, cfg)

    bits = cfg.accum_bits
    mask = np.uint64((1 << bits) - 1) if bits < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    g_rows = rows // k
    g_cols = cfg.cols // k

    weights = _to_unsigned(b, 64)  # stationary after preload
    au = _to_unsigned(a, 64)

    # Opaque registers only; transparent ones are bypassed and never written.
    h_pipe = np.zeros((rows, g_cols), dtype=np.uint64)  # east-end register of each column group
    v_pipe = np.zeros((g_rows, cfg.cols), dtype=np.uint64)  # south-end register of each row group

    out = np.zeros((t_dim, cfg.cols), dtype=np.uint64)
    tracer = _Tracer(trace, probes, bits, rows, cfg.cols) if trace is not None else None
    row_group = np.arange(rows) // k

    # Schedule horizon: the drain of the last skewed row. The loop measures
    # actual completion (emitted element count and last emission cycle) and
    # the reported cycle count comes from that measurement.
    horizon = g_rows + g_cols + t_dim - 2
    emitted = 0
    last_emit = -1
    for s in range(horizon):
        # West-edge injection: row r carries A[s - r//k] this cycle.
        t_of_row = s - row_group
        valid = (t_of_row >= 0) & (t_of_row < t_dim)
        west = np.zeros(rows, dtype=np.uint64)
        west[valid] = au[t_of_row[valid], np.nonzero(valid)[0]]

        # Activation visible in column group g: injected value for g=0, the
        # previous group's latched register otherwise; broadcast inside the
        # group through the transparent horizontal registers.
        act_groups = np.concatenate([west[:, None], h_pipe[:, :-1]], axis=1)
        act = np.repeat(act_groups, k, axis=1)

        products = (weights * act) & mask

        # Vertical reduction: chain the k products of each row group through
        # carry-save stages on top of the incoming resolved partial, then let
        # the group's carry-propagate adder resolve into the south register.
        incoming = np.concatenate(
            [np.zeros((1, cfg.cols), dtype=np.uint64), v_pipe[:-1]], axis=0
        )
        psum = incoming
        pcarry = np.zeros_like(incoming)
        prod_g = products.reshape(g_rows, k, cfg.cols)
        for i in range(k):
            psum, pcarry = _csa_arrays(prod_g[:, i, :], psum, pcarry, mask)
            if tracer is not None:
                for pr, pc in tracer.probes:
                    if pr % k == i:
                        tracer.emit(
                            rows + s, pr, pc,
                            int(_to_signed(weights[pr : pr + 1, pc], 64)[0]),
                            int(_to_signed(act[pr : pr + 1, pc], 64)[0]),
                            psum[pr // k, pc], pcarry[pr // k, pc],
                        )
        resolved = (psum + pcarry) & mask

        # Latch phase.
        h_pipe = act_groups
        v_pipe = resolved

        # The bottom group's carry-propagate output is captured by the output
        # accumulator in the same cycle it latches.
        for g in range(g_cols):
            t_out = s - (g_rows - 1) - g
            if 0 <= t_out < t_dim:
                out[t_out, g * k : (g + 1) * k] = resolved[g_rows - 1, g * k : (g + 1) * k]
                emitted += k
                last_emit = s

    if emitted != t_dim * cfg.cols:  # pragma: no cover - schedule invariant
        raise AssertionError(f"incomplete drain: {emitted}/{t_dim * cfg.cols} outputs")
    counters = predict_tile_counters(k, cfg, t_dim)
    return TileSimResult(
        output=_to_signed(out, bits),
        cycles=rows + last_emit + 1,
        counters=counters,
    )


class Accumulator:
    """Output accumulator below the array; sums tile partials mod 2**accum_bits."""

    def __init__(self, t: int, cols: int, bits: int):
        self.bits = bits
        self._mask = np.uint64((1 << bits) - 1) if bits < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
        self._partial = np.zeros((t, cols), dtype=np.uint64)

    def add(self, tile_output: np.ndarray) -> None:
        self._partial = (self._partial + _to_unsigned(tile_output, 64)) & self._mask

    @property
    def partial(self) -> np.ndarray:
        return _to_signed(self._partial, self.bits)


def simulate_gemm(
    a: np.ndarray | Sequence[Sequence[int]],
    b: np.ndarray | Sequence[Sequence[int]],
    k: int,
    cfg: ArrayConfig,
) -> GemmSimResult:
    """Tiled GEMM on the array: column blocks of B outermost, reduction tiles
    innermost, partial sums accumulated below the array.  Ragged edge tiles
    are zero-padded to the array size and still cost full tile latency."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"incompatible GEMM operands {a.shape} x {b.shape}")
    t_dim, n_dim = a.shape
    m_dim = b.shape[1]
    _validate_inputs(a, b, cfg)

    n_tiles = -(-n_dim // cfg.rows)
    m_tiles = -(-m_dim // cfg.cols)
    a_pad = np.zeros((t_dim, n_tiles * cfg.rows), dtype=np.int64)
    a_pad[:, :n_dim] = a
    b_pad = np.zeros((n_tiles * cfg.rows, m_tiles * cfg.cols), dtype=np.int64)
    b_pad[:n_dim, :m_dim] = b

    out = np.zeros((t_dim, m_dim), dtype=np.int64)
    totals: TileCounters | None = None
    cycles = 0
    for mb in range(m_tiles):
        acc = Accumulator(t_dim, cfg.cols, cfg.accum_bits)
        for nb in range(n_tiles):
            res = simulate_tile(
                a_pad[:, nb * cfg.rows : (nb + 1) * cfg.rows],
                b_pad[nb * cfg.rows : (nb + 1) * cfg.rows, mb * cfg.cols : (mb + 1) * cfg.cols],
                k,
                cfg,
            )
            acc.add(res.output)
            cycles += res.cycles
            totals = res.counters if totals is None else totals + res.counters
        width = min(cfg.cols, m_dim - mb * cfg.cols)
        out[:, mb * cfg.cols : mb * cfg.cols + width] = acc.partial[:, :width]

    assert totals is not None
    return GemmSimResult(output=out, cycles=cycles, counters=totals, tiles=n_tiles * m_tiles)
