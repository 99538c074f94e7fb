"""NSGA-II with constraint-domination (Deb et al., 2002)."""

from __future__ import annotations

import numpy as np

from .pareto import ParetoArchive, crowding_distance, nondominated_sort
from .problems import Problem


def _rank_and_crowd(objs):
    fronts = nondominated_sort(objs)
    rank = np.empty(len(objs), dtype=int)
    crowd = np.empty(len(objs))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance([objs[i] for i in front])
    return fronts, rank, crowd


def _tournament(rng, rank, crowd):
    i, j = rng.integers(0, len(rank), 2)
    if rank[i] != rank[j]:
        return i if rank[i] < rank[j] else j
    if crowd[i] != crowd[j]:
        return i if crowd[i] > crowd[j] else j
    return min(i, j)


def nsga2(problem: Problem, pop: int = 50, gens: int = 100, seed: int = 0,
          archive: ParetoArchive | None = None, check: bool = False,
          callback=None) -> ParetoArchive:
    """Evolve ``pop`` individuals for ``gens`` generations.

    Every evaluated point is offered to the returned archive.  With
    ``check=True`` archive soundness is asserted after every generation.
    """
    if pop < 2 or pop % 2:
        raise ValueError("population size must be even and >= 2")
    rng = np.random.default_rng(seed)
    archive = archive if archive is not None else ParetoArchive()

    population = [problem.sample(rng) for _ in range(pop)]
    objs = problem.many(population)
    for x, o in zip(population, objs):
        archive.add(x, o, 0)

    for gen in range(1, gens + 1):
        _, rank, crowd = _rank_and_crowd(objs)
        children = []
        while len(children) < pop:
            a = population[_tournament(rng, rank, crowd)]
            b = population[_tournament(rng, rank, crowd)]
            for child in problem.crossover(rng, a, b):
                children.append(problem.mutate(rng, child))
        children = children[:pop]
        child_objs = problem.many(children)
        for x, o in zip(children, child_objs):
            archive.add(x, o, gen)

        merged = population + children
        merged_objs = objs + child_objs
        fronts, _, _ = _rank_and_crowd(merged_objs)
        survivors = []
        for front in fronts:
            if len(survivors) + len(front) <= pop:
                survivors.extend(front)
                continue
            d = crowding_distance([merged_objs[i] for i in front])
            order = sorted(range(len(front)), key=lambda k: (-d[k], front[k]))
            survivors.extend(front[k] for k in order[:pop - len(survivors)])
            break
        population = [merged[i] for i in survivors]
        objs = [merged_objs[i] for i in survivors]
        if check:
            archive.check()
        if callback is not None:
            callback(gen, population, objs, archive)
    return archive
