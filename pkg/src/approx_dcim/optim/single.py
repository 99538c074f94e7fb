"""Single-objective backends: particle swarm and simulated annealing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


@dataclass
class ScalarProblem:
    """Minimize ``func(x)`` over a box, optionally snapped to a grid.

    ``step[i] > 0`` makes dimension ``i`` discrete with points
    ``lower + k*step``.  ``constraint(x)`` returns a violation (0 = feasible);
    infeasible points always rank behind feasible ones.
    """

    func: Callable[[np.ndarray], float]
    lower: Any
    upper: Any
    step: Any = None
    constraint: Callable[[np.ndarray], float] | None = None
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.step is None:
            self.step = np.zeros_like(self.lower)
        self.step = np.broadcast_to(np.asarray(self.step, dtype=float), self.lower.shape).copy()
        if np.any(self.upper < self.lower):
            raise ValueError("upper bound below lower bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    def snap(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        grid = self.step > 0
        x[grid] = self.lower[grid] + np.round((x[grid] - self.lower[grid]) / self.step[grid]) * self.step[grid]
        return np.clip(x, self.lower, self.upper)

    def evaluate(self, x) -> tuple[float, float]:
        """``(violation, value)``; lexicographic order ranks points."""
        x = self.snap(x)
        key = tuple(x.tolist())
        if key not in self.cache:
            v = float(self.constraint(x)) if self.constraint else 0.0
            self.cache[key] = (v, float(self.func(x)))
        return self.cache[key]

    @property
    def evaluations(self) -> int:
        return len(self.cache)


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    violation: float
    history: list          # best-so-far (violation, value) after each iteration
    evaluations: int

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0

    @property
    def best_values(self) -> list[float]:
        return [v for _, v in self.history]


def pso(problem: ScalarProblem, particles: int = 30, iters: int = 200, seed: int = 0,
        inertia: float = 0.7298, c_personal: float = 1.49618, c_global: float = 1.49618,
        max_evaluations: int | None = None, restart_after: int | None = None) -> SearchResult:
    """Global-best particle swarm; grid dimensions are rounded after each move.

    With ``restart_after`` every particle is re-scattered (personal bests kept)
    once that many iterations pass without a global-best improvement.
    """
    rng = np.random.default_rng(seed)
    lo, hi = problem.lower, problem.upper
    span = hi - lo
    pos = lo + rng.random((particles, problem.dim)) * span
    vel = (rng.random((particles, problem.dim)) - 0.5) * span * 0.2
    pos = np.array([problem.snap(p) for p in pos])
    scores = [problem.evaluate(p) for p in pos]
    pbest = pos.copy()
    pbest_score = list(scores)
    g = min(range(particles), key=lambda i: pbest_score[i])
    gbest, gbest_score = pbest[g].copy(), pbest_score[g]
    history = [gbest_score]
    stall = 0
    for _ in range(iters):
        if max_evaluations is not None and problem.evaluations >= max_evaluations:
            break
        if restart_after is not None and stall >= restart_after:
            pos = lo + rng.random((particles, problem.dim)) * span
            vel = (rng.random((particles, problem.dim)) - 0.5) * span * 0.2
            stall = 0
        r1 = rng.random((particles, problem.dim))
        r2 = rng.random((particles, problem.dim))
        vel = inertia * vel + c_personal * r1 * (pbest - pos) + c_global * r2 * (gbest - pos)
        raw = np.clip(pos + vel, lo, hi)
        pos = np.array([problem.snap(p) for p in raw])
        before = gbest_score
        for i in range(particles):
            if max_evaluations is not None and problem.evaluations >= max_evaluations \
                    and tuple(pos[i].tolist()) not in problem.cache:
                continue
            sc = problem.evaluate(pos[i])
            if sc < pbest_score[i]:
                pbest[i], pbest_score[i] = pos[i].copy(), sc
                if sc < gbest_score:
                    gbest, gbest_score = pos[i].copy(), sc
        stall = 0 if gbest_score < before else stall + 1
        history.append(gbest_score)
    return SearchResult(gbest, gbest_score[1], gbest_score[0], history, problem.evaluations)


def acceptance_probability(delta: float, temperature: float) -> float:
    """Metropolis rule: 1 for downhill moves, exp(-delta/T) uphill."""
    if delta <= 0:
        return 1.0
    if temperature <= 0:
        return 0.0
    return math.exp(-delta / temperature)


def coordinate_neighbor(problem: ScalarProblem, rng, x) -> np.ndarray:
    """Perturb one coordinate: one grid step for discrete dims, Gaussian otherwise."""
    y = np.array(x, dtype=float)
    i = int(rng.integers(0, problem.dim))
    if problem.step[i] > 0:
        y[i] += problem.step[i] * (1 if rng.random() < 0.5 else -1)
    else:
        y[i] += rng.normal(0.0, 0.1 * (problem.upper[i] - problem.lower[i]))
    return problem.snap(y)


def sa(problem: ScalarProblem, T0: float = 1.0, alpha: float = 0.95, steps: int = 1000,
       seed: int = 0, x0=None, neighbor=None, max_evaluations: int | None = None) -> SearchResult:
    """Simulated annealing with geometric cooling ``T <- alpha * T``.

    Infeasible proposals are compared by violation before value.
    """
    rng = np.random.default_rng(seed)
    neighbor = neighbor or (lambda r, x: coordinate_neighbor(problem, r, x))
    if x0 is None:
        x0 = problem.lower + rng.random(problem.dim) * (problem.upper - problem.lower)
    x = problem.snap(x0)
    fx = problem.evaluate(x)
    best, best_f = x.copy(), fx
    T = T0
    history = [best_f]
    for _ in range(steps):
        if max_evaluations is not None and problem.evaluations >= max_evaluations:
            break
        y = neighbor(rng, x)
        fy = problem.evaluate(y)
        if fy[0] != fx[0]:
            accept = fy[0] < fx[0]
        else:
            accept = rng.random() < acceptance_probability(fy[1] - fx[1], T)
        if accept:
            x, fx = y, fy
            if fx < best_f:
                best, best_f = x.copy(), fx
        T *= alpha
        history.append(best_f)
    return SearchResult(best, best_f[1], best_f[0], history, problem.evaluations)


def grid_scan(problem: ScalarProblem) -> SearchResult:
    """Exhaustive evaluation of every grid point (all dimensions must be discrete)."""
    if np.any(problem.step <= 0):
        raise ValueError("grid scan needs a step on every dimension")
    axes = [np.arange(lo, hi + s / 2, s) for lo, hi, s in zip(problem.lower, problem.upper, problem.step)]
    best, best_f = None, None
    history = []
    for point in np.array(np.meshgrid(*axes, indexing="ij")).reshape(problem.dim, -1).T:
        f = problem.evaluate(point)
        if best_f is None or f < best_f:
            best, best_f = problem.snap(point), f
        history.append(best_f)
    return SearchResult(best, best_f[1], best_f[0], history, problem.evaluations)
