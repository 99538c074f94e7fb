"""Compressor-assignment search: minimize (MRED, PDP) subject to an NMED budget.

Candidates are scored by the bit-exact oracle or by a trained surrogate.
Whatever scored them, every emitted front is re-evaluated by the oracle and
only budget-satisfying designs survive.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .cells import CellLibrary
from .dataset import Oracle, encode
from .gnn import TARGETS, GraphBatcher, SurrogateModel
from .optim import ObjectiveVector, ParetoArchive, discrete_problem, moead, nsga2
from .ppa import pdp_fj

OBJECTIVES = ("mred", "pdp")
TOY_CELLS = ("exact42", "apx_vk", "apx_trunc")
TOY_BITS = 6


@dataclass(frozen=True)
class Budget:
    nmed: float = 1.0
    mred: float | None = None

    def __post_init__(self):
        if self.nmed < 0 or (self.mred is not None and self.mred < 0):
            raise ValueError("budgets must be non-negative")

    def violation(self, nmed: float, mred: float) -> float:
        v = max(0.0, nmed - self.nmed)
        if self.mred is not None:
            v += max(0.0, mred - self.mred)
        return v


@dataclass(frozen=True)
class DesignScore:
    design: tuple
    mred: float
    nmed: float
    delay: float
    area: float
    power: float

    @property
    def pdp(self) -> float:
        return pdp_fj(self.power, self.delay)

    def objectives(self, budget: Budget) -> ObjectiveVector:
        return ObjectiveVector((self.mred, self.pdp), budget.violation(self.nmed, self.mred))


def oracle_scores(oracle: Oracle, designs) -> list[DesignScore]:
    out = []
    for a in designs:
        y = oracle.label(a)
        out.append(DesignScore(tuple(int(v) for v in a), *map(float, y)))
    return out


def surrogate_scores(batcher: GraphBatcher, model: SurrogateModel, designs) -> list[DesignScore]:
    designs = [tuple(int(v) for v in a) for a in designs]
    Y = batcher.predict(model, designs)
    return [DesignScore(a, *map(float, y)) for a, y in zip(designs, Y)]


@dataclass
class VerifiedPoint:
    oracle: DesignScore
    surrogate: DesignScore | None
    generation: int


@dataclass
class ArchResult:
    budget: Budget
    method: str
    evaluator: str
    front: list                      # VerifiedPoint, oracle-feasible and non-dominated
    search_archive: ParetoArchive
    evaluations: int
    dropped: list = field(default_factory=list)   # surrogate picks that failed oracle re-check

    @property
    def feasible(self) -> bool:
        return bool(self.front)

    def report(self) -> str:
        if self.feasible:
            return f"{len(self.front)} feasible front points under NMED <= {self.budget.nmed:g}"
        return (f"no design satisfies NMED <= {self.budget.nmed:g}"
                + (f" and MRED <= {self.budget.mred:g}" if self.budget.mred is not None else "")
                + f" among {self.evaluations} evaluated")

    def best_pdp(self) -> VerifiedPoint | None:
        if not self.front:
            return None
        return min(self.front, key=lambda p: (p.oracle.pdp, p.oracle.mred, p.oracle.design))


def exact_design(library: CellLibrary, t: int) -> tuple:
    return (library.index(library.exact.name),) * t


def _verified_front(oracle: Oracle, budget: Budget, archive: ParetoArchive,
                    surrogate: dict | None) -> tuple[list, list]:
    entries = archive.sorted()
    designs = [tuple(e.x) for e in entries]
    checked = oracle_scores(oracle, designs)
    verified = ParetoArchive()
    keep, dropped = {}, []
    for e, sc in zip(entries, checked):
        obj = sc.objectives(budget)
        sur = surrogate.get(tuple(e.x)) if surrogate is not None else None
        point = VerifiedPoint(sc, sur, e.generation)
        if not obj.feasible:
            dropped.append(point)
            continue
        keep[tuple(e.x)] = point
        verified.add(tuple(e.x), obj, e.generation)
    front = [keep[tuple(e.x)] for e in verified.sorted()]
    return front, dropped


def search_architecture(N: int, library: CellLibrary, budget: Budget, method: str = "nsga2",
                        pop: int = 50, gens: int = 100, seed: int = 0,
                        model: SurrogateModel | None = None, oracle: Oracle | None = None,
                        weights: int | None = None) -> ArchResult:
    """Run one search; ``model`` switches scoring to the surrogate.

    The all-exact assignment seeds the initial population so the zero-error
    end of the front is always reachable.
    """
    oracle = oracle or Oracle(N, library)
    t, K = oracle.t, library.K
    seed_design = exact_design(library, t)
    surrogate_log: dict | None = None
    if model is not None:
        batcher = GraphBatcher(N, library)
        surrogate_log = {}

        def batch(designs):
            scores = surrogate_scores(batcher, model, designs)
            for s in scores:
                surrogate_log[s.design] = s
            return [s.objectives(budget) for s in scores]
        evaluator = "surrogate"
    else:
        def batch(designs):
            return [s.objectives(budget) for s in oracle_scores(oracle, designs)]
        evaluator = "oracle"

    problem = discrete_problem(lambda a: batch([a])[0], t, K, initial=[seed_design],
                               evaluate_batch=batch)
    method = method.lower()
    if method == "nsga2":
        archive = nsga2(problem, pop=pop, gens=gens, seed=seed)
    elif method == "moead":
        archive = moead(problem, weights=weights or pop, gens=gens, seed=seed)
    elif method == "exhaustive":
        archive = ParetoArchive()
        designs = list(itertools.product(range(K), repeat=t))
        for a, o in zip(designs, problem.many(designs)):
            archive.add(a, o, 0)
    else:
        raise ValueError(f"unknown architecture search method {method!r}")
    front, dropped = _verified_front(oracle, budget, archive, surrogate_log)
    return ArchResult(budget, method, evaluator, front, archive, problem.evaluations, dropped)


def brute_force_front(oracle: Oracle, budget: Budget) -> list[tuple[tuple, tuple]]:
    """All (design, (MRED, PDP)) on the exact constrained front, by enumeration."""
    K = oracle.library.K
    archive = ParetoArchive()
    for a in itertools.product(range(K), repeat=oracle.t):
        sc = oracle_scores(oracle, [a])[0]
        archive.add(a, sc.objectives(budget))
    if archive.flagged:
        return []
    return [(tuple(e.x), e.objectives.values) for e in archive.sorted()]


def budget_cases(result_front: list, count: int = 5) -> list[VerifiedPoint]:
    """``count`` front points spread from largest to smallest MRED.

    Index positions are evenly spaced over the MRED-sorted front.
    """
    pts = sorted(result_front, key=lambda p: (-p.oracle.mred, p.oracle.design))
    if len(pts) <= count:
        return pts
    idx = np.unique(np.round(np.linspace(0, len(pts) - 1, count)).astype(int))
    return [pts[i] for i in idx]


def write_front_csv(path, result: ArchResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["design", "mred", "nmed", "pdp_fj", "delay_ps", "power_uw", "area_um2", "generation"]
        if result.evaluator == "surrogate":
            head += [f"surrogate_{k}" for k in ("mred", "nmed", "pdp_fj")]
        w.writerow(head)
        for p in result.front:
            o = p.oracle
            row = [encode(o.design), repr(o.mred), repr(o.nmed), repr(o.pdp), repr(o.delay),
                   repr(o.power), repr(o.area), p.generation]
            if result.evaluator == "surrogate":
                s = p.surrogate
                row += [repr(s.mred), repr(s.nmed), repr(s.pdp)] if s else ["", "", ""]
            w.writerow(row)


def toy_setup(library: CellLibrary) -> tuple[CellLibrary, Oracle]:
    """The enumerable K=3, t=4 space: 6-bit multiplier, three cells."""
    lib = library.subset(TOY_CELLS)
    return lib, Oracle(TOY_BITS, lib)


__all__ = ["Budget", "DesignScore", "ArchResult", "VerifiedPoint", "OBJECTIVES", "TARGETS",
           "brute_force_front", "budget_cases", "exact_design", "oracle_scores",
           "search_architecture", "surrogate_scores", "toy_setup", "write_front_csv"]
