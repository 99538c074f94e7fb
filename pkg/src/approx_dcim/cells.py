"""Logic-cell library: truth tables for 4-2 compressors and half/full adders.

Cells are stored as dense truth tables.  Row ``i`` holds the output bits for
the input pattern whose MSB-first reading ``(x1, ..., xn)`` equals ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

COMPRESSOR_SHAPE = (5, 3)


class LibraryParseError(ValueError):
    """Raised when a library file violates the cell format."""


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Exhaustive input -> output mapping of a combinational cell.

    ``rows`` is a read-only ``(2**n_inputs, n_outputs)`` uint8 array.
    """

    name: str
    n_inputs: int
    n_outputs: int
    rows: np.ndarray
    output_weights: tuple[int, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.uint8, copy=True)
        if rows.ndim != 2 or rows.shape[0] != 2**self.n_inputs:
            raise ValueError(f"cell {self.name}: row count mismatch "
                             f"(expected {2**self.n_inputs}, got {rows.shape[0] if rows.ndim else 0})")
        if rows.shape[1] != self.n_outputs:
            raise ValueError(f"cell {self.name}: bit-width mismatch "
                             f"(expected {self.n_outputs}, got {rows.shape[1]})")
        if np.any(rows > 1):
            raise ValueError(f"cell {self.name}: non-binary output bit")
        weights = tuple(int(w) for w in self.output_weights)
        if len(weights) != self.n_outputs or any(w <= 0 for w in weights):
            raise ValueError(f"cell {self.name}: output_weights must be "
                             f"{self.n_outputs} positive integers")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "output_weights", weights)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_inputs, self.n_outputs)

    def lookup(self, bits) -> tuple[int, ...]:
        """Output bits for one input pattern given as a sequence (x1..xn)."""
        if len(bits) != self.n_inputs:
            raise ValueError(f"cell {self.name} takes {self.n_inputs} inputs")
        index = 0
        for b in bits:
            index = (index << 1) | (int(b) & 1)
        return tuple(int(v) for v in self.rows[index])

    def value(self) -> np.ndarray:
        """Arithmetic value (weighted output sum) of every row."""
        return self.rows.astype(np.int64) @ np.asarray(self.output_weights, dtype=np.int64)

    def same_function(self, other: "TruthTable") -> bool:
        return self.shape == other.shape and np.array_equal(self.rows, other.rows)

    def to_text(self) -> str:
        lines = [f"cell {self.name} {self.n_inputs} {self.n_outputs} weights "
                 + " ".join(str(w) for w in self.output_weights)]
        lines += ["".join(str(int(b)) for b in row) for row in self.rows]
        lines.append("end")
        return "\n".join(lines) + "\n"


def input_patterns(n: int) -> np.ndarray:
    """All 2**n input patterns, MSB-first, as a ``(2**n, n)`` array."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8).reshape(2**n, n)


def table_from_function(name, n, m, func, weights) -> TruthTable:
    rows = [func(*bits) for bits in input_patterns(n)]
    return TruthTable(name, n, m, np.array(rows, dtype=np.uint8).reshape(2**n, m), weights)


def _maj(a, b, c):
    return (a & b) | (a & c) | (b & c)


def _exact42(x1, x2, x3, x4, cin):
    s1 = x1 ^ x2 ^ x3
    return (s1 ^ x4 ^ cin, _maj(s1, x4, cin), _maj(x1, x2, x3))


def exact_compressor_42() -> TruthTable:
    """Exact 4-2 compressor: sum + 2*carry + 2*cout == x1+x2+x3+x4+cin."""
    return table_from_function("exact42", 5, 3, _exact42, (1, 2, 2))


def half_adder() -> TruthTable:
    return table_from_function("ha", 2, 2, lambda a, b: (a ^ b, a & b), (1, 2))


def full_adder() -> TruthTable:
    return table_from_function("fa", 3, 2, lambda a, b, c: (a ^ b ^ c, _maj(a, b, c)), (1, 2))


@dataclass(frozen=True)
class CellLibrary:
    """Ordered set of interchangeable 4-2 compressors plus the exact HA/FA.

    ``compressors[k]`` is the cell selected by assignment value ``k``.
    """

    compressors: tuple[TruthTable, ...]
    exact_reference: int
    ha: TruthTable = field(default_factory=half_adder)
    fa: TruthTable = field(default_factory=full_adder)

    def __post_init__(self):
        if not self.compressors:
            raise LibraryParseError("library holds no 4-2 compressor")
        for cell in self.compressors:
            if cell.shape != COMPRESSOR_SHAPE:
                raise LibraryParseError(f"cell {cell.name}: 4-2 entries must have n=5, m=3")
        if not 0 <= self.exact_reference < len(self.compressors):
            raise LibraryParseError("missing exact reference")
        if not self.compressors[self.exact_reference].same_function(exact_compressor_42()):
            raise LibraryParseError(
                f"cell {self.compressors[self.exact_reference].name}: not an exact 4-2 compressor")

    @property
    def K(self) -> int:
        return len(self.compressors)

    @property
    def exact(self) -> TruthTable:
        return self.compressors[self.exact_reference]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.compressors]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def subset(self, names) -> "CellLibrary":
        """Library restricted to ``names`` (order preserved as given)."""
        cells = tuple(self.compressors[self.index(n)] for n in names)
        ref = next(i for i, c in enumerate(cells) if c.same_function(exact_compressor_42()))
        return CellLibrary(cells, ref, self.ha, self.fa)

    def cells(self) -> list[TruthTable]:
        return [*self.compressors, self.ha, self.fa]

    def to_text(self) -> str:
        return "\n".join(c.to_text() for c in self.cells())


def load_library(source: str) -> CellLibrary:
    """Parse library-file content into a validated :class:`CellLibrary`.

    Cells named ``ha``/``fa`` replace the built-in adders; every (5, 3) cell
    becomes an assignable compressor in file order.  The exact reference is
    the compressor whose table equals :func:`exact_compressor_42`.
    """
    tables: list[TruthTable] = []
    header = None
    rows: list[str] = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            tok = line.split()
            if tok[0] != "cell" or len(tok) < 5 or tok[4] != "weights":
                raise LibraryParseError(f"line {lineno}: expected 'cell <name> <n> <m> weights ...'")
            try:
                n, m = int(tok[2]), int(tok[3])
                weights = tuple(int(w) for w in tok[5:])
            except ValueError:
                raise LibraryParseError(f"line {lineno}: cell {tok[1]}: bad header") from None
            header = (tok[1], n, m, weights)
            rows = []
        elif line == "end":
            name, n, m, weights = header
            if len(rows) != 2**n:
                raise LibraryParseError(f"cell {name}: row count mismatch "
                                        f"(expected {2**n}, got {len(rows)})")
            bad = [r for r in rows if len(r) != m or set(r) - {"0", "1"}]
            if bad:
                raise LibraryParseError(f"cell {name}: bit-width mismatch in row '{bad[0]}'")
            if len(weights) != m:
                raise LibraryParseError(f"cell {name}: expected {m} output weights")
            try:
                tables.append(TruthTable(name, n, m, [[int(ch) for ch in r] for r in rows], weights))
            except ValueError as exc:
                raise LibraryParseError(str(exc)) from None
            header = None
        else:
            rows.append(line)
    if header is not None:
        raise LibraryParseError(f"cell {header[0]}: missing 'end'")

    named = {t.name: t for t in tables}
    compressors = tuple(t for t in tables if t.shape == COMPRESSOR_SHAPE)
    exact = exact_compressor_42()
    ref = next((i for i, c in enumerate(compressors) if c.same_function(exact)), None)
    if ref is None:
        raise LibraryParseError("missing exact reference: no cell matches the exact 4-2 compressor")
    return CellLibrary(compressors, ref, named.get("ha", half_adder()), named.get("fa", full_adder()))


def load_library_file(path) -> CellLibrary:
    return load_library(Path(path).read_text())


def data_path(name: str) -> Path:
    return Path(str(resources.files("approx_dcim") / "data" / name))


def default_library() -> CellLibrary:
    """Shipped K=8 library: the exact cell followed by seven approximate variants."""
    return load_library_file(data_path("default.lib"))


def input_weights(p, n: int | None = None) -> np.ndarray:
    """Probability of each of the 2**n input patterns under independent bits.

    ``p[j]`` is the bit-1 probability of input ``x_{j+1}``; a scalar is
    broadcast to ``n`` inputs.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if n is None:
        n = p.size
    if p.size == 1 and n > 1:
        p = np.full(n, p[0])
    if p.size != n:
        raise ValueError(f"expected {n} marginals, got {p.size}")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("marginals must lie in [0, 1]")
    bits = input_patterns(n).astype(bool)
    return np.prod(np.where(bits, p, 1.0 - p), axis=1)


def output_probabilities(tt: TruthTable, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (2**tt.n_inputs,):
        raise ValueError(f"cell {tt.name}: weight vector must have length {2**tt.n_inputs}")
    return np.clip(tt.rows.T.astype(float) @ omega, 0.0, 1.0)


def error_vector(tt: TruthTable, ref: TruthTable, omega) -> np.ndarray:
    """Per-output probability that ``tt`` disagrees with ``ref`` under ``omega``."""
    if tt.shape != ref.shape:
        raise ValueError(f"shape mismatch: {tt.name} {tt.shape} vs {ref.name} {ref.shape}")
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (2**tt.n_inputs,):
        raise ValueError(f"weight vector must have length {2**tt.n_inputs}")
    diff = (tt.rows != ref.rows).astype(float)
    return np.clip(diff.T @ omega, 0.0, 1.0)
