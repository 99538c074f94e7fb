"""MOEA/D with Tchebycheff or weighted-sum decomposition (Zhang & Li, 2007)."""

from __future__ import annotations

import itertools

import numpy as np

from .pareto import ObjectiveVector, ParetoArchive
from .problems import Problem


def simplex_weights(count: int, n_obj: int = 2) -> np.ndarray:
    """Evenly spread weight vectors on the unit simplex.

    For two objectives this is exactly ``count`` vectors; otherwise the
    simplex-lattice design with the largest resolution not exceeding ``count``.
    """
    if count < 1:
        raise ValueError("need at least one weight vector")
    if n_obj == 2:
        if count == 1:
            return np.array([[0.5, 0.5]])
        s = np.linspace(0.0, 1.0, count)
        return np.stack([s, 1.0 - s], axis=1)
    h = 1
    while len(list(_lattice(h + 1, n_obj))) <= count:
        h += 1
    return np.array(list(_lattice(h, n_obj)), dtype=float) / h


def _lattice(h, m):
    for c in itertools.combinations(range(h + m - 1), m - 1):
        parts = np.diff((-1, *c, h + m - 1)) - 1
        yield tuple(parts)


def tchebycheff(f, lam, z, scale=None) -> float:
    """max_i lam_i * |f_i - z_i| (optionally divided by ``scale``)."""
    d = np.abs(np.asarray(f, dtype=float) - np.asarray(z, dtype=float))
    if scale is not None:
        d = d / np.asarray(scale, dtype=float)
    return float(np.max(np.asarray(lam, dtype=float) * d))


def weighted_sum(f, lam, z, scale=None) -> float:
    d = np.asarray(f, dtype=float) - np.asarray(z, dtype=float)
    if scale is not None:
        d = d / np.asarray(scale, dtype=float)
    return float(np.dot(lam, d))


SCALARIZATIONS = {"tchebycheff": tchebycheff, "weighted_sum": weighted_sum}


def moead(problem: Problem, weights: int = 50, gens: int = 100, seed: int = 0,
          scalarization: str = "tchebycheff", neighborhood: int = 10,
          max_replace: int = 2, normalize: bool = True,
          archive: ParetoArchive | None = None, check: bool = False) -> ParetoArchive:
    """Decomposition-based search; one subproblem per weight vector.

    The ideal point is updated online.  With ``normalize`` the scalarization
    divides each objective by its observed range so objectives on unrelated
    scales share the weight simplex.
    """
    try:
        s = SCALARIZATIONS[scalarization.lower().replace("-", "_")]
    except KeyError:
        raise ValueError(f"unknown scalarization {scalarization!r}") from None
    rng = np.random.default_rng(seed)
    archive = archive if archive is not None else ParetoArchive()

    population = []
    objs: list[ObjectiveVector] = []
    # Probe one point for the objective count.
    first = problem.sample(rng)
    first_obj = problem(first)
    lam = simplex_weights(weights, len(first_obj))
    n_sub = len(lam)
    T = max(2, min(neighborhood, n_sub))
    dist = np.linalg.norm(lam[:, None, :] - lam[None, :, :], axis=2)
    neigh = np.argsort(dist, axis=1, kind="stable")[:, :T]

    population.append(first)
    objs.append(first_obj)
    for _ in range(n_sub - 1):
        x = problem.sample(rng)
        population.append(x)
        objs.append(problem(x))
    for x, o in zip(population, objs):
        archive.add(x, o, 0)

    F = np.array([o.values for o in objs])
    z = F.min(axis=0)
    zmax = F.max(axis=0)

    def g(o: ObjectiveVector, k: int) -> float:
        scale = np.maximum(zmax - z, 1e-12) if normalize else None
        return s(o.values, lam[k], z, scale)

    def better(new: ObjectiveVector, old: ObjectiveVector, k: int) -> bool:
        if new.feasible != old.feasible:
            return new.feasible
        if not new.feasible:
            return new.violation < old.violation
        return g(new, k) < g(old, k)

    for gen in range(1, gens + 1):
        for i in range(n_sub):
            pool = neigh[i] if rng.random() < 0.9 else np.arange(n_sub)
            p, q = rng.choice(pool, 2, replace=False)
            child = problem.crossover(rng, population[p], population[q])[rng.integers(0, 2)]
            child = problem.mutate(rng, child)
            o = problem(child)
            archive.add(child, o, gen)
            z = np.minimum(z, o.values)
            zmax = np.maximum(zmax, o.values)
            replaced = 0
            for j in rng.permutation(pool):
                if replaced >= max_replace:
                    break
                if better(o, objs[j], j):
                    population[j] = child
                    objs[j] = o
                    replaced += 1
        if check:
            archive.check()
    return archive
