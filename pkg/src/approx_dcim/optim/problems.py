"""Search-space descriptors and variation operators for the evolutionary backends."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .pareto import ObjectiveVector


@dataclass
class Problem:
    """Multi-objective problem: evaluation plus the operators that move in its space.

    ``evaluate(x)`` returns an :class:`ObjectiveVector`.  Results are cached by
    ``key(x)`` so repeated designs cost one evaluation.  An optional
    ``evaluate_batch(xs)`` lets population-based backends score a generation
    in one call.
    """

    evaluate: Callable[[Any], ObjectiveVector]
    sample: Callable[[np.random.Generator], Any]
    crossover: Callable[[np.random.Generator, Any, Any], tuple]
    mutate: Callable[[np.random.Generator, Any], Any]
    key: Callable[[Any], Any] = lambda x: tuple(np.ravel(x).tolist())
    cache: dict = field(default_factory=dict, repr=False)
    evaluate_batch: Callable[[list], list] | None = None

    def __call__(self, x) -> ObjectiveVector:
        k = self.key(x)
        if k not in self.cache:
            self.cache[k] = self.evaluate(x)
        return self.cache[k]

    def many(self, xs) -> list[ObjectiveVector]:
        xs = list(xs)
        if self.evaluate_batch is not None:
            todo, seen = [], set()
            for x in xs:
                k = self.key(x)
                if k not in self.cache and k not in seen:
                    seen.add(k)
                    todo.append(x)
            if todo:
                for x, o in zip(todo, self.evaluate_batch(todo)):
                    self.cache[self.key(x)] = o
        return [self(x) for x in xs]

    @property
    def evaluations(self) -> int:
        return len(self.cache)


def discrete_problem(evaluate, n_vars: int, n_values: int, mutation_rate: float | None = None,
                     initial=None, evaluate_batch=None) -> Problem:
    """Integer vectors in ``{0..n_values-1}^n_vars``.

    Uniform crossover; per-gene uniform reset with rate ``1/n_vars`` by default.
    ``initial`` optionally seeds the first individuals of the population.
    """
    rate = 1.0 / n_vars if mutation_rate is None else mutation_rate
    seeds = [tuple(int(v) for v in s) for s in (initial or [])]

    def sample(rng):
        if seeds:
            return seeds.pop(0)
        return tuple(int(v) for v in rng.integers(0, n_values, n_vars))

    def crossover(rng, a, b):
        mask = rng.random(n_vars) < 0.5
        c1 = tuple(int(u if m else v) for u, v, m in zip(a, b, mask))
        c2 = tuple(int(v if m else u) for u, v, m in zip(a, b, mask))
        return c1, c2

    def mutate(rng, x):
        hit = rng.random(n_vars) < rate
        vals = rng.integers(0, n_values, n_vars)
        return tuple(int(v if h else u) for u, v, h in zip(x, vals, hit))

    return Problem(evaluate, sample, crossover, mutate, key=tuple, evaluate_batch=evaluate_batch)


def box_problem(evaluate, lower, upper, eta_c: float = 15.0, eta_m: float = 20.0,
                crossover_prob: float = 0.9, mutation_rate: float | None = None,
                initial=None) -> Problem:
    """Real vectors in a box; SBX crossover and polynomial mutation (Deb & Agrawal)."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    n = lo.size
    rate = 1.0 / n if mutation_rate is None else mutation_rate
    seeds = [np.asarray(s, dtype=float) for s in (initial or [])]

    def sample(rng):
        if seeds:
            return seeds.pop(0)
        return lo + rng.random(n) * (hi - lo)

    def crossover(rng, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        c1, c2 = a.copy(), b.copy()
        if rng.random() > crossover_prob:
            return c1, c2
        for i in range(n):
            if rng.random() > 0.5 or abs(a[i] - b[i]) < 1e-14 or hi[i] == lo[i]:
                continue
            y1, y2 = min(a[i], b[i]), max(a[i], b[i])
            u = rng.random()
            for sign, bound, target in ((-1, lo[i], 0), (1, hi[i], 1)):
                beta = 1.0 + 2.0 * (y1 - lo[i] if sign < 0 else hi[i] - y2) / (y2 - y1)
                alpha = 2.0 - beta ** -(eta_c + 1.0)
                if u <= 1.0 / alpha:
                    betaq = (u * alpha) ** (1.0 / (eta_c + 1.0))
                else:
                    betaq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta_c + 1.0))
                child = 0.5 * ((y1 + y2) + sign * betaq * (y2 - y1))
                child = min(max(child, lo[i]), hi[i])
                if target == 0:
                    c1[i] = child
                else:
                    c2[i] = child
            if rng.random() < 0.5:
                c1[i], c2[i] = c2[i], c1[i]
        return c1, c2

    def mutate(rng, x):
        y = np.asarray(x, dtype=float).copy()
        for i in range(n):
            if rng.random() >= rate or hi[i] == lo[i]:
                continue
            span = hi[i] - lo[i]
            d1, d2 = (y[i] - lo[i]) / span, (hi[i] - y[i]) / span
            u = rng.random()
            power = 1.0 / (eta_m + 1.0)
            if u < 0.5:
                val = 2 * u + (1 - 2 * u) * (1 - d1) ** (eta_m + 1)
                dq = val ** power - 1.0
            else:
                val = 2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (eta_m + 1)
                dq = 1.0 - val ** power
            y[i] = min(max(y[i] + dq * span, lo[i]), hi[i])
        return y

    return Problem(evaluate, sample, crossover, mutate)
