"""Stage-structured N-bit unsigned multiplier netlists built from a cell library.

The reduction tree follows a fixed layout rule:

* stage 0 generates the AND partial-product array;
* each reduction stage aims at the next-lower Dadda height (2, 3, 4, 6, 9, ...).
  Columns are visited LSB first; while a column holds >= 4 bits and its
  projected height exceeds the target by at least ``COMPRESSOR_MIN_EXCESS``
  a 4-2 compressor is placed (cin chained from the neighbouring column's
  cout, tied low when none is available).  Leftover excess is removed with
  full adders, then half adders;
* a ripple carry-propagate adder sums the final two rows.

4-2 compressors that land in the low columns ``0..N-1`` are the configurable
slots, numbered stage-major then column-ascending.  All other logic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cells import CellLibrary, TruthTable, default_library, table_from_function

# Layout calibration: a compressor is admitted once a column exceeds its
# stage target by this many bits.  With value 1 an 8-bit tree has 9 slots.
COMPRESSOR_MIN_EXCESS = 1

CONST0 = 0

AND2 = table_from_function("and2", 2, 1, lambda a, b: (a & b,), (1,))


@lru_cache(maxsize=None)
def _packed_lut(cell: TruthTable) -> np.ndarray:
    # output bit k of row i stored as bit k of entry i; 256 entries so any uint8 index is valid
    lut = np.zeros(256, dtype=np.uint8)
    lut[:cell.rows.shape[0]] = cell.rows.astype(np.uint8) @ (1 << np.arange(cell.n_outputs, dtype=np.uint8))
    return lut


def _apply(sig: np.ndarray, cell: TruthTable, inputs, outputs) -> None:
    """Table lookup of one cell over a batch of signal rows, in place."""
    idx = sig[inputs[0]].copy()
    for s in inputs[1:]:
        idx <<= 1
        idx |= sig[s]
    packed = np.take(_packed_lut(cell), idx)
    for k, s in enumerate(outputs):
        np.right_shift(packed, k, out=sig[s])
        sig[s] &= 1


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    cell: TruthTable
    stage: int
    column: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    slot: int | None = None


@dataclass(frozen=True, eq=False)
class Netlist:
    """Acyclic gate graph over integer signal ids.

    Signal 0 is constant zero, signals ``1..len(inputs)`` are the primary
    inputs, and every node output owns a fresh id.  ``nodes`` is stored in
    topological order.
    """

    inputs: tuple[str, ...]
    nodes: tuple[Node, ...]
    outputs: tuple[int, ...]
    n_bits: int | None = None
    n_stages: int = 0
    slots: tuple[int, ...] = ()
    assignment: tuple[int, ...] = ()
    _driver: dict = field(default=None, repr=False)

    def __post_init__(self):
        driver = {CONST0: None}
        for i in range(len(self.inputs)):
            driver[i + 1] = ("in", i)
        for node in self.nodes:
            if len(node.inputs) != node.cell.n_inputs or len(node.outputs) != node.cell.n_outputs:
                raise ValueError(f"node {node.id}: pin count does not match cell {node.cell.name}")
            for s in node.inputs:
                if s not in driver:
                    raise ValueError(f"node {node.id}: input signal {s} has no driver "
                                     "(graph not acyclic or not topologically ordered)")
            for pin, s in enumerate(node.outputs):
                if s in driver:
                    raise ValueError(f"signal {s} has more than one driver")
                driver[s] = (node.id, pin)
        for s in self.outputs:
            if s not in driver:
                raise ValueError(f"output signal {s} has no driver")
        object.__setattr__(self, "_driver", driver)

    @property
    def n_signals(self) -> int:
        return max([len(self.inputs)] + [max(n.outputs) for n in self.nodes]) + 1

    @property
    def t(self) -> int:
        return len(self.slots)

    def driver(self, signal: int):
        """``None`` for the constant, ``("in", k)`` for inputs, else ``(node_id, pin)``."""
        return self._driver[signal]

    def node(self, node_id: int) -> Node:
        node = self.nodes[node_id]
        assert node.id == node_id
        return node

    def predecessors(self, node: Node) -> list[int]:
        out = []
        for s in node.inputs:
            d = self._driver[s]
            if d is not None and d[0] != "in":
                out.append(d[0])
        return out

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Node-to-node wires as ``(src_node, src_pin, dst_node, dst_pin)``."""
        out = []
        for node in self.nodes:
            for pin, s in enumerate(node.inputs):
                d = self._driver[s]
                if d is not None and d[0] != "in":
                    out.append((d[0], d[1], node.id, pin))
        return out

    def downstream(self, node_id: int) -> set[int]:
        """Node ids reachable from ``node_id`` (inclusive)."""
        reach = {node_id}
        signals = set(self.nodes[node_id].outputs)
        for node in self.nodes[node_id + 1:]:
            if signals.intersection(node.inputs):
                reach.add(node.id)
                signals.update(node.outputs)
        return reach

    def stage_members(self) -> list[list[int]]:
        stages = [[] for _ in range(self.n_stages + 1)]
        for node in self.nodes:
            stages[node.stage].append(node.id)
        return stages

    def simulate(self, input_bits) -> np.ndarray:
        """Evaluate on a batch: ``input_bits`` is ``(n_inputs, B)``, returns ``(n_outputs, B)``."""
        input_bits = np.asarray(input_bits, dtype=np.uint8)
        if input_bits.ndim == 1:
            input_bits = input_bits[:, None]
        if input_bits.shape[0] != len(self.inputs):
            raise ValueError(f"expected {len(self.inputs)} input rows")
        sig = np.zeros((self.n_signals, input_bits.shape[1]), dtype=np.uint8)
        sig[1:1 + len(self.inputs)] = input_bits & 1
        for node in self.nodes:
            _apply(sig, node.cell, node.inputs, node.outputs)
        return sig[list(self.outputs)]

    def to_text(self) -> str:
        """Line-oriented dump: nodes, wires, and result bits."""
        lines = [f"# netlist N={self.n_bits} stages={self.n_stages} slots={self.t} "
                 f"nodes={len(self.nodes)}"]
        for name in self.inputs:
            lines.append(f"input {name}")
        for node in self.nodes:
            slot = "-" if node.slot is None else str(node.slot)
            lines.append(f"node {node.id} {node.kind} {node.stage} {node.column} {slot}")
        for node in self.nodes:
            for pin, s in enumerate(node.inputs):
                lines.append(f"edge {self._signal_name(s)} {node.id}.{pin}")
        for bit, s in enumerate(self.outputs):
            lines.append(f"output {bit} {self._signal_name(s)}")
        return "\n".join(lines) + "\n"

    def _signal_name(self, s: int) -> str:
        d = self._driver[s]
        if d is None:
            return "0"
        if d[0] == "in":
            return self.inputs[d[1]]
        return f"{d[0]}.{d[1]}"


@dataclass(frozen=True)
class MultiplierConfig:
    N: int
    a: tuple[int, ...]
    library: CellLibrary = field(default_factory=default_library, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        t = len(slot_layout(self.N))
        if len(self.a) != t:
            raise ValueError(f"N={self.N} layout has {t} slots, assignment has {len(self.a)}")
        bad = [v for v in self.a if not 0 <= v < self.library.K]
        if bad:
            raise ValueError(f"assignment value {bad[0]} outside library range 0..{self.library.K - 1}")

    @classmethod
    def exact(cls, N: int, library: CellLibrary | None = None) -> "MultiplierConfig":
        library = library or default_library()
        return cls(N, (library.exact_reference,) * len(slot_layout(N)), library)


def _dadda_target(height: int) -> int:
    d = 2
    while d * 3 // 2 < height:
        d = d * 3 // 2
    return d


@dataclass(frozen=True)
class _Spec:
    kind: str                 # "PP", "HA", "FA", "C42"
    stage: int
    column: int
    inputs: tuple              # layout-level signal ids
    n_out: int


@lru_cache(maxsize=None)
def _layout(N: int):
    """Cell-independent structure: node specs, result signals, stage count."""
    if N < 2:
        raise ValueError("N must be >= 2")
    n_in = 2 * N
    next_sig = [n_in + 1]
    specs: list[_Spec] = []

    def place(kind, stage, column, inputs, n_out):
        specs.append(_Spec(kind, stage, column, tuple(inputs), n_out))
        outs = tuple(range(next_sig[0], next_sig[0] + n_out))
        next_sig[0] += n_out
        return outs

    width = 2 * N
    cols: list[list[int]] = [[] for _ in range(width)]
    for j in range(width):
        for p in range(N):
            q = j - p
            if 0 <= q < N:
                (s,) = place("PP", 0, j, (1 + p, 1 + N + q), 1)
                cols[j].append(s)

    stage = 0
    while max(len(c) for c in cols) > 2:
        stage += 1
        target = _dadda_target(max(len(c) for c in cols))
        nxt: list[list[int]] = [[] for _ in range(width + 1)]
        chain: list[list[int]] = [[] for _ in range(width + 1)]
        for j in range(width):
            bits = list(cols[j])
            cin = chain[j]
            out = nxt[j]
            while len(bits) >= 4 and len(bits) + len(cin) + len(out) - target >= COMPRESSOR_MIN_EXCESS:
                x = bits[:4]
                del bits[:4]
                c = cin.pop(0) if cin else CONST0
                s, carry, cout = place("C42", stage, j, (*x, c), 3)
                out.append(s)
                nxt[j + 1].append(carry)
                chain[j + 1].append(cout)
            bits += cin
            while len(bits) >= 3 and len(bits) + len(out) - target >= 2:
                s, carry = place("FA", stage, j, bits[:3], 2)
                del bits[:3]
                out.append(s)
                nxt[j + 1].append(carry)
            while len(bits) >= 2 and len(bits) + len(out) - target >= 1:
                s, carry = place("HA", stage, j, bits[:2], 2)
                del bits[:2]
                out.append(s)
                nxt[j + 1].append(carry)
            nxt[j] = bits + out
        # Anything pushed past column 2N-1 carries weight >= 2^(2N); dropped.
        cols = nxt[:width]

    adder_stage = stage + 1
    result = []
    carry = None
    for j in range(width):
        bits = cols[j] + ([carry] if carry is not None else [])
        if not bits:
            result.append(CONST0)
            carry = None
        elif len(bits) == 1:
            result.append(bits[0])
            carry = None
        else:
            kind = "HA" if len(bits) == 2 else "FA"
            s, carry = place(kind, adder_stage, j, bits, 2)
            result.append(s)
    return tuple(specs), tuple(result), adder_stage


def slot_layout(N: int) -> list[tuple[int, int, int]]:
    """``(slot index, column, stage)`` for every configurable compressor."""
    specs, _, _ = _layout(N)
    found = sorted((sp.stage, sp.column, k) for k, sp in enumerate(specs)
                   if sp.kind == "C42" and sp.column < N)
    return [(i + 1, col, stage) for i, (stage, col, _) in enumerate(found)]


def search_space_size(N: int, K: int) -> int:
    return K ** len(slot_layout(N))


def build_tree(cfg: MultiplierConfig) -> Netlist:
    specs, result, adder_stage = _layout(cfg.N)
    lib = cfg.library
    slot_of = {}
    order = sorted((sp.stage, sp.column, k) for k, sp in enumerate(specs)
                   if sp.kind == "C42" and sp.column < cfg.N)
    for i, (_, _, k) in enumerate(order):
        slot_of[k] = i + 1

    nodes = []
    next_sig = 2 * cfg.N + 1
    for k, sp in enumerate(specs):
        slot = slot_of.get(k)
        if sp.kind == "PP":
            cell, kind = AND2, "PP"
        elif sp.kind == "HA":
            cell, kind = lib.ha, "HA"
        elif sp.kind == "FA":
            cell, kind = lib.fa, "FA"
        else:
            cell = lib.compressors[cfg.a[slot - 1]] if slot else lib.exact
            kind = cell.name
        outs = tuple(range(next_sig, next_sig + sp.n_out))
        next_sig += sp.n_out
        nodes.append(Node(k, kind, cell, sp.stage, sp.column, sp.inputs, outs, slot))
    names = tuple(f"x{p}" for p in range(cfg.N)) + tuple(f"y{q}" for q in range(cfg.N))
    slots = tuple(k for _, _, k in order)
    return Netlist(names, tuple(nodes), result, cfg.N, adder_stage, slots, cfg.a)


def operand_bits(x, y, N: int) -> np.ndarray:
    """Stack operand bits into the ``(2N, B)`` input layout of a multiplier netlist."""
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if np.any((x < 0) | (x >= 1 << N)) or np.any((y < 0) | (y >= 1 << N)):
        raise ValueError(f"operands must lie in [0, 2^{N})")
    shifts = np.arange(N, dtype=np.int64)[:, None]
    return np.concatenate([(x[None, :] >> shifts) & 1, (y[None, :] >> shifts) & 1]).astype(np.uint8)


def evaluate(net: Netlist, x, y):
    """Approximate product R_a(x, y); scalar in, scalar out, arrays broadcast."""
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
    bits = net.simulate(operand_bits(x.ravel(), y.ravel(), net.n_bits))
    weights = np.left_shift(np.int64(1), np.arange(len(net.outputs), dtype=np.int64))
    value = weights @ bits.astype(np.int64)
    return int(value[0]) if scalar else value.reshape(x.shape)


def generate_pp(x: int, y: int, N: int) -> list[list[int]]:
    """Partial-product matrix: ``cols[j]`` lists ``x_p & y_q`` for ``p + q == j``."""
    if not (0 <= x < 1 << N and 0 <= y < 1 << N):
        raise ValueError(f"operands must lie in [0, 2^{N})")
    cols = [[] for _ in range(2 * N)]
    for p in range(N):
        for q in range(N):
            cols[p + q].append((x >> p) & (y >> q) & 1)
    return cols


def pp_value(cols) -> int:
    return sum(b << j for j, col in enumerate(cols) for b in col)


class DesignEvaluator:
    """Fast repeated evaluation of many assignments on one operand batch.

    Signals that do not depend on any slot are simulated once; per design
    only the slot cones are recomputed.
    """

    def __init__(self, N: int, library: CellLibrary, x, y):
        self.N = N
        self.library = library
        self.base = build_tree(MultiplierConfig.exact(N, library))
        bits = operand_bits(x, y, N)
        net = self.base
        sig = np.zeros((net.n_signals, bits.shape[1]), dtype=np.uint8)
        sig[1:1 + len(net.inputs)] = bits
        cone = set()
        for k in net.slots:
            cone |= net.downstream(k)
        self._dynamic = [n for n in net.nodes if n.id in cone]
        for node in net.nodes:
            if node.id not in cone:
                _apply(sig, node.cell, node.inputs, node.outputs)
        self._sig = sig
        self._slot_pos = {k: i for i, k in enumerate(net.slots)}
        self._weights = np.left_shift(np.int64(1), np.arange(2 * N, dtype=np.int64))

    def products(self, a) -> np.ndarray:
        lib = self.library
        sig = self._sig.copy()
        for node in self._dynamic:
            cell = node.cell
            if node.slot is not None:
                cell = lib.compressors[a[self._slot_pos[node.id]]]
            _apply(sig, cell, node.inputs, node.outputs)
        return self._weights @ sig[list(self.base.outputs)].astype(np.int64)
