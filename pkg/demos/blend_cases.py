"""How multiplier error shows up in an alpha blend.

A single blend weight touches only two rows of the product table, so the
PSNR at one alpha can rank designs oddly.  This script prints PSNR per alpha
and the pooled sweep figure for a handful of 8-bit designs.

Run:  python demos/blend_cases.py [design ...]     (designs as 0-4-4-...)
"""

import sys

from approx_dcim.dataset import Oracle, decode
from approx_dcim.imaging import (SWEEP_ALPHAS, blend, checker_noise_image, gradient_image,
                                 product_table, psnr, sweep_psnr)
from approx_dcim.multiplier import evaluate

DEFAULT = ["6-6-6-6-7-4-6-4-2", "4-4-6-4-4-7-6-6-4", "4-2-4-4-4-7-6-4-1", "4-0-4-4-7-0-4-2-1"]


def main(argv):
    oracle = Oracle(8)
    a, b = gradient_image(), checker_noise_image()
    designs = [decode(d) for d in (argv or DEFAULT)]
    head = " ".join(f"{al:>6}" for al in SWEEP_ALPHAS)
    print(f"{'design':<20} {'MRED':>8} {head}  {'sweep':>6}")
    for d in designs:
        net = oracle.netlist(d)
        table = product_table(lambda x, y: evaluate(net, x, y))
        per = [psnr(blend(a, b, al), blend(a, b, al, table)) for al in SWEEP_ALPHAS]
        cells = " ".join(f"{v:6.1f}" for v in per)
        print(f"{'-'.join(map(str, d)):<20} {oracle.error(d).mred:8.5f} {cells}  "
              f"{sweep_psnr(a, b, table):6.1f}")


if __name__ == "__main__":
    main(sys.argv[1:])
