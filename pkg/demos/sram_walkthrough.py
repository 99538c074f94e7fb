"""Bank organisation scan and bitcell sizing for a 32 kbit macro.

Run:  python demos/sram_walkthrough.py
"""

from approx_dcim.sram import optimize_bitcell, search_bank


def main():
    scan = search_bank(32768, "scan")
    print(f"{len(scan.ranked)} organisations; top five by FOM:")
    for b in scan.ranked[:5]:
        m = b.metrics
        print(f"  {b.config.label:<20} FOM {b.fom:7.4f}   D_max {m.d_max:8.1f}   P_max {m.p_max:8.2f}")
    print(f"\npower/delay front ({len(scan.front)} points):")
    for b in sorted(scan.front, key=lambda b: b.metrics.p_max):
        print(f"  {b.config.label:<20} P_max {b.metrics.p_max:8.2f}   D_max {b.metrics.d_max:8.1f}")

    for method in ("pso", "sa"):
        res = search_bank(32768, method, seed=1)
        print(f"{method}: best {res.best.config.label} FOM {res.best.fom:.4f} "
              f"in {res.evaluations} evaluations")

    cell = optimize_bitcell(method="pso", seed=0)
    d, m = cell.design, cell.metrics
    print(f"\nbitcell w_pu={d.w_pu:.2f} w_pd={d.w_pd:.2f} w_pg={d.w_pg:.2f}: "
          f"hold {m.hold:.3f} read {m.read:.3f} write {m.write:.3f} FOM {m.fom:.4f}")


if __name__ == "__main__":
    main()
