"""Pareto bookkeeping: dominance, sorting, crowding, hypervolume, archives."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Hashable

import numpy as np


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective values (minimized) plus total constraint violation (0 = feasible)."""

    values: tuple[float, ...]
    violation: float = 0.0

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite objective in {values}")
        if not self.violation >= 0:
            raise ValueError("violation must be >= 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "violation", float(self.violation))

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0

    def __len__(self):
        return len(self.values)


def _vals(u):
    return u.values if isinstance(u, ObjectiveVector) else tuple(u)


def dominates(u, v) -> bool:
    """``u`` is no worse than ``v`` everywhere and strictly better somewhere."""
    a, b = _vals(u), _vals(v)
    if len(a) != len(b):
        raise ValueError(f"arity mismatch: {len(a)} vs {len(b)}")
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def feasibility_rule(u: ObjectiveVector, v: ObjectiveVector) -> ObjectiveVector | None:
    """Preferred of two points, or ``None`` when neither is preferred.

    Feasible beats infeasible; two infeasible points compare by violation;
    two feasible points compare by Pareto dominance.
    """
    if u.feasible != v.feasible:
        return u if u.feasible else v
    if not u.feasible:
        if u.violation == v.violation:
            return None
        return u if u.violation < v.violation else v
    if dominates(u, v):
        return u
    if dominates(v, u):
        return v
    return None


def constrained_dominates(u: ObjectiveVector, v: ObjectiveVector) -> bool:
    return feasibility_rule(u, v) is u and u is not v


def nondominated_sort(points) -> list[list[int]]:
    """Fronts of indices (front 0 first).

    Accepts raw objective tuples or :class:`ObjectiveVector`; the latter are
    ranked with the feasibility rule.
    """
    pts = list(points)
    n = len(pts)
    if n == 0:
        return []
    if all(isinstance(p, ObjectiveVector) for p in pts):
        better = constrained_dominates
    else:
        better = dominates
    dominated_by = [[] for _ in range(n)]
    count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if better(pts[i], pts[j]):
                dominated_by[i].append(j)
                count[j] += 1
            elif better(pts[j], pts[i]):
                dominated_by[j].append(i)
                count[i] += 1
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Crowding distance per point; boundary points get ``inf``."""
    F = np.array([_vals(p) for p in front], dtype=float)
    n = len(F)
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for m in range(F.shape[1]):
        order = np.argsort(F[:, m], kind="stable")
        lo, hi = F[order[0], m], F[order[-1], m]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi == lo:
            continue
        dist[order[1:-1]] += (F[order[2:], m] - F[order[:-2], m]) / (hi - lo)
    return dist


def hypervolume_2d(front, ref) -> float:
    """Area dominated by a 2-objective front and bounded by ``ref``."""
    pts = [tuple(_vals(p)) for p in front]
    if not pts:
        return 0.0
    rx, ry = float(ref[0]), float(ref[1])
    for x, y in pts:
        if not (x < rx and y < ry):
            raise ValueError(f"point {(x, y)} does not dominate reference {(rx, ry)}")
    return _hv_sweep(pts, rx, ry)


def _hv_sweep(pts, rx, ry) -> float:
    area = 0.0
    prev_y = ry
    for x, y in sorted(pts):
        if y < prev_y:
            area += (rx - x) * (prev_y - y)
            prev_y = y
    return area


@dataclass
class ArchiveEntry:
    x: Any
    objectives: ObjectiveVector
    generation: int


@dataclass
class ParetoArchive:
    """Mutually non-dominated set of evaluated designs.

    Infeasible points are kept only while nothing feasible has been seen;
    then the archive holds the least-violation points and ``flagged`` is set.
    ``capacity`` (optional) trims the most crowded members.
    """

    capacity: int | None = None
    entries: list = field(default_factory=list)
    _keys: set = field(default_factory=set, repr=False)

    @property
    def flagged(self) -> bool:
        return bool(self.entries) and not self.entries[0].objectives.feasible

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @staticmethod
    def _key(x) -> Hashable:
        if isinstance(x, np.ndarray):
            return tuple(x.tolist())
        return tuple(x) if isinstance(x, (list, tuple)) else x

    def add(self, x, obj: ObjectiveVector, generation: int = 0) -> bool:
        key = self._key(x)
        if key in self._keys:
            return False
        if not obj.feasible:
            if self.entries and (self.entries[0].objectives.feasible
                                 or self.entries[0].objectives.violation < obj.violation):
                return False
            if self.entries and self.entries[0].objectives.violation > obj.violation:
                self.entries.clear()
                self._keys.clear()
            if any(dominates(e.objectives, obj) for e in self.entries):
                return False
            self.entries = [e for e in self.entries if not dominates(obj, e.objectives)]
            self.entries.append(ArchiveEntry(x, obj, generation))
            self._keys = {self._key(e.x) for e in self.entries}
            return True
        if self.flagged:
            self.entries.clear()
            self._keys.clear()
        if any(dominates(e.objectives, obj) for e in self.entries):
            return False
        keep = [e for e in self.entries if not dominates(obj, e.objectives)]
        self.entries = keep + [ArchiveEntry(x, obj, generation)]
        self._keys = {self._key(e.x) for e in self.entries}
        if self.capacity is not None and len(self.entries) > self.capacity:
            self._trim()
        return True

    def _trim(self):
        while len(self.entries) > self.capacity:
            d = crowding_distance([e.objectives for e in self.entries])
            drop = int(np.argmin(d))
            self._keys.discard(self._key(self.entries[drop].x))
            del self.entries[drop]

    def check(self) -> None:
        """Raise if any member dominates another (soundness invariant)."""
        objs = [e.objectives for e in self.entries]
        for i, u in enumerate(objs):
            for j, v in enumerate(objs):
                if i != j and u.feasible == v.feasible and dominates(u, v):
                    raise AssertionError(f"archive member {i} dominates member {j}")

    def points(self) -> np.ndarray:
        return np.array([e.objectives.values for e in self.entries], dtype=float)

    def designs(self) -> list:
        return [e.x for e in self.entries]

    def sorted(self) -> list[ArchiveEntry]:
        return sorted(self.entries, key=lambda e: (e.objectives.values, self._key(e.x)))

    def to_csv(self, objective_names=None, encode=None) -> str:
        """CSV with design encoding, objectives, feasibility, generation found."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        m = len(self.entries[0].objectives) if self.entries else len(objective_names or [])
        names = list(objective_names or [f"f{i + 1}" for i in range(m)])
        w.writerow(["design", *names, "violation", "feasible", "generation"])
        encode = encode or (lambda x: " ".join(str(v) for v in np.ravel(x)))
        for e in self.sorted():
            w.writerow([encode(e.x), *(repr(v) for v in e.objectives.values),
                        repr(e.objectives.violation), int(e.objectives.feasible), e.generation])
        return buf.getvalue()


def pareto_filter(points) -> list[int]:
    """Indices of the non-dominated members of ``points`` (ties all kept)."""
    pts = [_vals(p) for p in points]
    return [i for i, p in enumerate(pts)
            if not any(dominates(q, p) for j, q in enumerate(pts) if j != i)]
