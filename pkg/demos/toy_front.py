"""Brute force versus evolutionary search on the 81-design 6-bit toy space.

Run:  python demos/toy_front.py
"""

import itertools

from approx_dcim.archsearch import Budget, oracle_scores, search_architecture, toy_setup
from approx_dcim.cells import default_library


def main():
    lib, oracle = toy_setup(default_library())
    print(f"cells: {', '.join(lib.names)}   slots: {oracle.t}   designs: {lib.K ** oracle.t}")
    scores = oracle_scores(oracle, itertools.product(range(lib.K), repeat=oracle.t))

    budget = Budget(0.002)
    feas = [s for s in scores if s.nmed <= budget.nmed]
    print(f"{len(feas)} designs meet NMED <= {budget.nmed}")

    for method in ("exhaustive", "nsga2", "moead"):
        res = search_architecture(6, lib, budget, method=method, pop=20, gens=60, oracle=oracle)
        print(f"\n{method}: {len(res.front)} front points after {res.evaluations} evaluations")
        for p in res.front:
            o = p.oracle
            print(f"  {'-'.join(map(str, o.design))}  MRED {o.mred:.5f}  NMED {o.nmed:.6f}  PDP {o.pdp:7.2f} fJ")


if __name__ == "__main__":
    main()
