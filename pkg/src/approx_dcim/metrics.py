"""Error-distance statistics of approximate multipliers (MRED, NMED, max ED)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .multiplier import Netlist, evaluate

EXHAUSTIVE_MAX_BITS = 8
DEFAULT_SAMPLE_COUNT = 2**20
DEFAULT_SEED = 20240917

Design = Union[Netlist, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class EmptyUPlusError(ValueError):
    pass


@dataclass(frozen=True)
class InputSet:
    """Operand pairs over which the error statistics are taken.

    ``mode`` is ``"exhaustive"``, ``"sampled"`` or ``"explicit"``.
    """

    N: int
    mode: str = "exhaustive"
    count: int = 0
    seed: int = DEFAULT_SEED
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.mode == "exhaustive" and self.N > EXHAUSTIVE_MAX_BITS:
            raise ValueError(f"exhaustive evaluation limited to N <= {EXHAUSTIVE_MAX_BITS}")
        if self.mode == "sampled" and self.count < 1:
            raise ValueError("sampled input set needs count >= 1")
        if self.mode not in ("exhaustive", "sampled", "explicit"):
            raise ValueError(f"unknown input-set mode {self.mode!r}")
        hi = 1 << self.N
        if any(not (0 <= x < hi and 0 <= y < hi) for x, y in self.pairs):
            raise ValueError("explicit pair out of operand range")

    @classmethod
    def exhaustive(cls, N: int) -> "InputSet":
        return cls(N, "exhaustive")

    @classmethod
    def sampled(cls, N: int, count: int = DEFAULT_SAMPLE_COUNT, seed: int = DEFAULT_SEED) -> "InputSet":
        return cls(N, "sampled", count=count, seed=seed)

    @classmethod
    def explicit(cls, N: int, pairs) -> "InputSet":
        return cls(N, "explicit", pairs=tuple((int(x), int(y)) for x, y in pairs))

    @classmethod
    def default(cls, N: int) -> "InputSet":
        return cls.exhaustive(N) if N <= EXHAUSTIVE_MAX_BITS else cls.sampled(N)

    def describe(self) -> str:
        if self.mode == "sampled":
            return f"sampled(count={self.count},seed={self.seed})"
        if self.mode == "explicit":
            return f"explicit({len(self.pairs)})"
        return "exhaustive"

    def operands(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(x, y, mred_mask)``.

        The first ``|U|`` entries form U.  For sampled sets, pairs of U with a
        zero product are redrawn (from the same stream) and appended, so the
        MRED accumulator sees ``count`` pairs of U_+ while NMED keeps U intact.
        """
        if self.mode == "exhaustive":
            grid = np.arange(1 << self.N, dtype=np.int64)
            x = np.repeat(grid, grid.size)
            y = np.tile(grid, grid.size)
            return x, y, (x * y) > 0
        if self.mode == "explicit":
            arr = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
            x, y = arr[:, 0], arr[:, 1]
            return x, y, (x * y) > 0
        rng = np.random.default_rng(self.seed)
        hi = 1 << self.N
        x = rng.integers(0, hi, self.count, dtype=np.int64)
        y = rng.integers(0, hi, self.count, dtype=np.int64)
        zero = np.flatnonzero(x * y == 0)
        ex = np.empty(zero.size, dtype=np.int64)
        ey = np.empty(zero.size, dtype=np.int64)
        pending = np.arange(zero.size)
        while pending.size:
            ex[pending] = rng.integers(0, hi, pending.size, dtype=np.int64)
            ey[pending] = rng.integers(0, hi, pending.size, dtype=np.int64)
            pending = pending[ex[pending] * ey[pending] == 0]
        mask = np.concatenate([(x * y) > 0, np.ones(zero.size, dtype=bool)])
        return np.concatenate([x, ex]), np.concatenate([y, ey]), mask

    @property
    def size_u(self) -> int:
        if self.mode == "exhaustive":
            return 1 << (2 * self.N)
        if self.mode == "explicit":
            return len(self.pairs)
        return self.count


@dataclass(frozen=True)
class ErrorReport:
    mred: float
    nmed: float
    max_ed: int
    count_u: int
    count_u_plus: int
    inputs: str = "exhaustive"
    mred_se: float = 0.0
    nmed_se: float = 0.0

    def as_row(self) -> dict:
        return {"mred": self.mred, "nmed": self.nmed, "max_ed": self.max_ed,
                "count_u": self.count_u, "count_u_plus": self.count_u_plus,
                "inputs": self.inputs}


def error_distance(r_approx, r_exact):
    return abs(r_approx - r_exact) if np.ndim(r_approx) == 0 else np.abs(
        np.asarray(r_approx, dtype=np.int64) - np.asarray(r_exact, dtype=np.int64))


def r_max(N: int) -> int:
    return ((1 << N) - 1) ** 2


def _products(design: Design, x, y) -> np.ndarray:
    if isinstance(design, Netlist):
        return evaluate(design, x, y)
    return np.asarray(design(x, y), dtype=np.int64)


def report_from_products(approx, x, y, mask, N: int, n_u: int, inputs: str = "",
                         exact: bool = False) -> ErrorReport:
    """Build an :class:`ErrorReport` from precomputed approximate products.

    Entries ``[:n_u]`` form U; ``mask`` selects the pairs feeding MRED.
    """
    approx = np.asarray(approx, dtype=np.int64)
    ref = x * y
    ed = np.abs(approx - ref)
    ed_u = ed[:n_u]
    rmax = r_max(N)
    ed_p, ref_p = ed[mask], ref[mask]
    if ref_p.size == 0:
        raise EmptyUPlusError("empty U_+: no operand pair has a nonzero exact product")
    max_ed = int(ed_u.max()) if n_u else 0
    if exact:
        nmed = Fraction(int(ed_u.sum()), n_u * rmax)
        mred = _rational_mean_ratio(ed_p, ref_p)
        return ErrorReport(mred, nmed, max_ed, n_u, int(ref_p.size), inputs)
    rel = ed_p / ref_p
    mred = math.fsum(rel.tolist()) / rel.size
    nmed = float(Fraction(int(ed_u.sum()), n_u * rmax))
    mred_se = float(rel.std(ddof=1) / math.sqrt(rel.size)) if rel.size > 1 else 0.0
    nmed_se = float((ed_u / rmax).std(ddof=1) / math.sqrt(n_u)) if n_u > 1 else 0.0
    return ErrorReport(mred, nmed, max_ed, n_u, int(ref_p.size), inputs, mred_se, nmed_se)


def _rational_mean_ratio(ed, ref) -> Fraction:
    # group by denominator so each distinct R_exact contributes one Fraction
    order = np.argsort(ref, kind="stable")
    ref_s, ed_s = ref[order], ed[order]
    uniq, start = np.unique(ref_s, return_index=True)
    sums = np.add.reduceat(ed_s, start)
    total = sum((Fraction(int(s), int(r)) for s, r in zip(sums, uniq) if s), Fraction(0))
    return total / len(ref)


def error_report(design: Design, inputs: InputSet, exact: bool = False) -> ErrorReport:
    """MRED, NMED and max ED of ``design`` in one sweep.

    ``design`` is a multiplier :class:`Netlist` or any vectorized callable
    ``f(x, y) -> products``.  ``exact=True`` returns ``Fraction`` values.
    """
    x, y, mask = inputs.operands()
    approx = _products(design, x, y)
    return report_from_products(approx, x, y, mask, inputs.N, inputs.size_u,
                                inputs.describe(), exact)


def mred(design: Design, inputs: InputSet, exact: bool = False):
    return error_report(design, inputs, exact).mred


def nmed(design: Design, inputs: InputSet, exact: bool = False):
    x, y, _ = inputs.operands()
    n_u = inputs.size_u
    x, y = x[:n_u], y[:n_u]
    ed = np.abs(_products(design, x, y) - x * y)
    value = Fraction(int(ed.sum()), n_u * r_max(inputs.N))
    return value if exact else float(value)
