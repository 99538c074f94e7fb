import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approx_dcim.optim import (ObjectiveVector, ParetoArchive, ScalarProblem, acceptance_probability,
                               box_problem, crowding_distance, discrete_problem, dominates,
                               feasibility_rule, grid_scan, hypervolume_2d, moead,
                               nondominated_sort, nsga2, pareto_filter, pso, sa, tchebycheff,
                               weighted_sum)


def toy_table(seed=3, K=3, t=4):
    rng = np.random.default_rng(seed)
    designs = list(itertools.product(range(K), repeat=t))
    f1 = {d: float(rng.integers(0, 40)) for d in designs}
    f2 = {d: float(60 - f1[d] + rng.integers(0, 25)) for d in designs}
    g = {d: float(rng.random()) for d in designs}
    return designs, f1, f2, g


def toy_problem(limit=0.8, seed=3):
    designs, f1, f2, g = toy_table(seed)

    def ev(a):
        a = tuple(a)
        return ObjectiveVector((f1[a], f2[a]), max(0.0, g[a] - limit))
    brute = [d for d in designs if g[d] <= limit]
    idx = pareto_filter([(f1[d], f2[d]) for d in brute])
    front = {(f1[brute[i]], f2[brute[i]]) for i in idx}
    return discrete_problem(ev, 4, 3), front


def test_dominates_examples():
    assert dominates((1, 2), (2, 3))
    assert not dominates((1, 3), (3, 1)) and not dominates((3, 1), (1, 3))
    assert not dominates((1, 2), (1, 2))
    with pytest.raises(ValueError, match="arity"):
        dominates((1, 2), (1, 2, 3))


def test_nondominated_sort_examples():
    assert [sorted(f) for f in nondominated_sort([(1, 1), (2, 2), (0, 3)])] == [[0, 2], [1]]
    assert nondominated_sort([(4, 4)]) == [[0]]


def test_crowding_collinear():
    d = crowding_distance([(0, 2), (1, 1), (2, 0)])
    assert math.isinf(d[0]) and math.isinf(d[2])
    assert d[1] == pytest.approx(2.0)


@pytest.mark.parametrize("front, ref, hv", [
    ([(1, 2), (2, 1)], (3, 3), 3.0),
    ([(1, 1)], (2, 2), 1.0),
    ([], (1, 1), 0.0),
])
def test_hypervolume_examples(front, ref, hv):
    assert hypervolume_2d(front, ref) == hv


def test_hypervolume_rejects_non_dominating():
    with pytest.raises(ValueError):
        hypervolume_2d([(4, 1)], (3, 3))


@settings(max_examples=30)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=8))
def test_hypervolume_matches_grid_count(pts):
    # unit cells dominated by some point, on the integer grid up to ref (10, 10)
    grid = sum(1 for x in range(10) for y in range(10)
               if any(px <= x and py <= y for px, py in pts))
    assert hypervolume_2d(pts, (10, 10)) == grid


def test_feasibility_rule_examples():
    f = ObjectiveVector((5, 5))
    assert feasibility_rule(f, ObjectiveVector((0, 0), 0.1)) is f
    a, b = ObjectiveVector((0, 0), 0.2), ObjectiveVector((9, 9), 0.1)
    assert feasibility_rule(a, b) is b
    u, v = ObjectiveVector((1, 1)), ObjectiveVector((2, 2))
    assert feasibility_rule(u, v) is u
    assert feasibility_rule(ObjectiveVector((1, 3)), ObjectiveVector((3, 1))) is None


def test_objective_vector_validation():
    with pytest.raises(ValueError):
        ObjectiveVector((1.0, float("nan")))
    with pytest.raises(ValueError):
        ObjectiveVector((1.0,), -1.0)


def test_archive_infeasible_only_is_flagged():
    arc = ParetoArchive()
    arc.add("a", ObjectiveVector((1, 1), 0.5))
    arc.add("b", ObjectiveVector((0, 0), 0.2))
    assert arc.flagged and arc.designs() == ["b"]
    arc.add("c", ObjectiveVector((9, 9)))
    assert not arc.flagged and arc.designs() == ["c"]


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20), st.booleans()), max_size=40))
def test_archive_soundness(points):
    arc = ParetoArchive()
    for i, (x, y, ok) in enumerate(points):
        arc.add(i, ObjectiveVector((x, y), 0.0 if ok else 1.0 + x))
    arc.check()
    members = [e.objectives for e in arc]
    assert not any(dominates(u, v) for u in members for v in members)
    if any(ok for *_, ok in points):
        assert all(o.feasible for o in members)


def test_tchebycheff_examples():
    assert tchebycheff((0.2, 0.6), (0.5, 0.5), (0, 0)) == pytest.approx(0.3)
    assert tchebycheff((0.2, 0.6), (1, 0), (0, 0)) == pytest.approx(0.2)
    assert weighted_sum((0.2, 0.6), (0.5, 0.5), (0, 0)) == pytest.approx(0.4)


@pytest.mark.parametrize("algo", ["nsga2", "moead"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_toy_space_matches_enumeration(algo, seed):
    problem, front = toy_problem(seed=seed + 10)
    if algo == "nsga2":
        arc = nsga2(problem, pop=20, gens=60, seed=seed, check=True)
    else:
        arc = moead(problem, weights=20, gens=60, seed=seed, check=True)
    found = {tuple(e.objectives.values) for e in arc}
    assert found <= front
    assert all(e.objectives.feasible for e in arc)
    ref = (max(f[0] for f in front) + 1, max(f[1] for f in front) + 1)
    assert hypervolume_2d(found, ref) / hypervolume_2d(front, ref) >= 0.98


def test_nsga2_zero_generations_and_determinism():
    problem, _ = toy_problem()
    arc = nsga2(problem, pop=10, gens=0, seed=4)
    assert problem.evaluations <= 10
    pts = [problem(x) for x in problem.cache]
    nd = {tuple(pts[i].values) for i in nondominated_sort(pts)[0]}
    assert {tuple(e.objectives.values) for e in arc} == nd
    p1, _ = toy_problem()
    p2, _ = toy_problem()
    a1 = nsga2(p1, pop=10, gens=5, seed=9)
    a2 = nsga2(p2, pop=10, gens=5, seed=9)
    assert a1.designs() == a2.designs()


def test_nsga2_rejects_odd_population():
    problem, _ = toy_problem()
    with pytest.raises(ValueError):
        nsga2(problem, pop=7)


def test_box_problem_respects_bounds():
    seen = []

    def ev(x):
        seen.append(np.array(x))
        return ObjectiveVector((float(x[0]), float(1 - x[0] + x[1] ** 2)))
    problem = box_problem(ev, [0, -1], [1, 1])
    arc = nsga2(problem, pop=12, gens=10, seed=0)
    X = np.array(seen)
    assert X.min(axis=0).tolist() >= [0, -1] and X.max(axis=0).tolist() <= [1, 1]
    assert len(arc) > 3


def test_moead_unknown_scalarization():
    problem, _ = toy_problem()
    with pytest.raises(ValueError):
        moead(problem, scalarization="chebyshev-ish")


def sphere(x):
    return float(np.sum(x ** 2))


def test_pso_sphere_and_anytime():
    res = pso(ScalarProblem(sphere, [-5, -5, -5], [5, 5, 5]), particles=30, iters=200, seed=0)
    assert res.value < 1e-3
    assert all(b <= a for a, b in zip(res.best_values, res.best_values[1:]))


def test_pso_stationary_swarm():
    prob = ScalarProblem(sphere, [-5, -5], [5, 5])
    res = pso(prob, particles=8, iters=20, seed=2, inertia=0.0, c_personal=0.0, c_global=0.0)
    assert prob.evaluations == 8
    assert res.best_values[0] == res.value


def test_pso_deterministic():
    r1 = pso(ScalarProblem(sphere, [-1, -1], [1, 1]), iters=30, seed=5)
    r2 = pso(ScalarProblem(sphere, [-1, -1], [1, 1]), iters=30, seed=5)
    assert r1.history == r2.history and np.array_equal(r1.x, r2.x)


def test_acceptance_probability_examples():
    assert acceptance_probability(1.0, 1.0) == pytest.approx(0.36788, abs=1e-5)
    assert acceptance_probability(-3.0, 0.5) == 1.0
    assert acceptance_probability(1.0, 1e-12) < 1e-9


def test_sa_grid_optimum_and_anytime():
    prob = ScalarProblem(lambda x: float((x[0] - 3) ** 2 + (x[1] + 2) ** 2), [-10, -10], [10, 10],
                         step=1)
    res = sa(prob, T0=5.0, alpha=0.99, steps=3000, seed=1)
    assert res.value == 0.0 and res.x.tolist() == [3, -2]
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


def test_sa_and_pso_respect_constraint():
    prob = ScalarProblem(sphere, [-4, -4], [4, 4], step=0.5, constraint=lambda x: max(0.0, 1 - x[0]))
    scan = grid_scan(prob)
    assert scan.feasible and scan.x[0] >= 1
    s = sa(ScalarProblem(sphere, [-4, -4], [4, 4], step=0.5, constraint=lambda x: max(0.0, 1 - x[0])),
           T0=2.0, alpha=0.995, steps=2000, seed=0)
    assert s.feasible and s.value == scan.value


def test_archive_csv_export():
    arc = ParetoArchive()
    arc.add((0, 1), ObjectiveVector((1.0, 2.0)), 3)
    text = arc.to_csv(["mred", "pdp"])
    assert text.splitlines()[0].startswith("design")
    assert "mred" in text and "3" in text.splitlines()[1]
