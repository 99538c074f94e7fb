import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approx_dcim.optim import dominates
from approx_dcim.sizing import PvtCorner
from approx_dcim.sram import (BANK_KEYS, BankConfig, BankMetrics, BitcellDesign, CoefficientError,
                              VariationSpec, bank_model, enumerate_configs, fom, load_coefficients,
                              mc_bitcell_eval, optimize_bitcell, parse_coefficients, search_bank)

CAP = 32768
COEFFS = load_coefficients()


def brute_grid(capacity, mus=(2, 4, 8)):
    out = set()
    for r in [2 ** k for k in range(1, 10)]:
        for c in [2 ** k for k in range(1, 9)]:
            n_a = capacity / (r * c)
            if n_a >= 1 and n_a == int(n_a):
                out |= {(r, c, mu, int(n_a)) for mu in mus}
    return out


def test_enumerate_matches_brute_grid():
    got = {(b.r, b.c, b.mu, b.n_a) for b in enumerate_configs(CAP)}
    assert got == brute_grid(CAP)
    assert len(got) == 207
    assert (256, 32, 4, 4) in got
    assert not any(r == 512 and c == 256 for r, c, _, _ in got)
    assert all(b.r * b.c * b.n_a == CAP for b in enumerate_configs(CAP))


def test_enumerate_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        enumerate_configs(3000)


def test_doubling_rows():
    a = bank_model(BankConfig(64, 32, 4, 16), COEFFS, CAP)
    b = bank_model(BankConfig(128, 32, 4, 8), COEFFS, CAP)
    bl_a = COEFFS["t_bl"] * 64
    bl_b = COEFFS["t_bl"] * 128
    assert bl_b == 2 * bl_a
    dec = COEFFS["t_dec"] * (math.log2(128 * 8) - math.log2(64 * 16))
    assert (b.d_rd - a.d_rd) == pytest.approx(bl_b - bl_a + dec)


def test_area_only_coefficients():
    k = {key: 0.0 for key in BANK_KEYS[:15]}
    k["a_cell"] = 0.8
    m = bank_model(BankConfig(256, 32, 4, 4), k, CAP)
    assert m.area == pytest.approx(CAP * 0.8)


def test_default_point_recomputed():
    k = COEFFS
    r, c, mu, n_a = 256, 32, 4, 4
    m = bank_model(BankConfig(r, c, mu, n_a), k, CAP)
    d_rd = k["t_dec"] * math.log2(r * n_a) + k["t_wl"] * c + k["t_mux"] * math.log2(mu) \
        + k["t_bl"] * r + k["t_sa"]
    p_rd = k["e_bl"] * (c / mu) * r + k["e_per"] * n_a
    area = n_a * (r * c * k["a_cell"] + k["a_row"] * r + k["a_col"] * c + k["a_fix"])
    assert (m.d_rd, m.p_rd, m.area) == (pytest.approx(d_rd), pytest.approx(p_rd), pytest.approx(area))


def test_capacity_asserted():
    with pytest.raises(ValueError, match="capacity"):
        bank_model(BankConfig(256, 32, 4, 2), COEFFS, CAP)


def test_unknown_coefficient():
    with pytest.raises(CoefficientError, match="t_magic"):
        parse_coefficients("t_magic = 3\n")
    with pytest.raises(CoefficientError):
        bank_model(BankConfig(2, 2, 2, 1), {**COEFFS, "t_magic": 1.0})


def test_fom_examples():
    m = BankMetrics(1e-9, 1e-9, 1e-3, 1e-3, 1e4)
    assert fom(m) == pytest.approx(10.0, abs=1e-12)
    with pytest.raises(ValueError):
        fom(BankMetrics(1.0, 1.0, 0.0, 0.0, 1.0))


@settings(max_examples=50)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_fom_log_laws(p, d, a):
    base = fom(BankMetrics(d, d, p, p, a))
    assert fom(BankMetrics(d, d, 10 * p, 10 * p, a)) == pytest.approx(base - 1, abs=1e-9)
    assert fom(BankMetrics(10 * d, d, p, p, a)) == pytest.approx(base - 1, abs=1e-9)
    assert fom(BankMetrics(d, d, p, p, 100 * a)) == pytest.approx(base - 1, abs=1e-9)


def test_scan_front_and_optimum():
    res = search_bank(CAP, "scan")
    assert res.evaluations == 207 and len(res.ranked) == 207
    assert res.best.fom == max(b.fom for b in res.ranked)
    pts = [(b.metrics.p_max, b.metrics.d_max) for b in res.front]
    assert len(pts) >= 3
    assert not any(dominates(u, v) for u in pts for v in pts)


@pytest.mark.parametrize("method", ["pso", "sa"])
def test_heuristics_match_scan(method):
    best = search_bank(CAP, "scan").best.fom
    for seed in range(8):
        res = search_bank(CAP, method, seed=seed)
        assert res.evaluations <= 207
        assert best - res.best.fom <= 0.05
        assert all(b.config.r * b.config.c * b.config.n_a == CAP for b in res.ranked)


def test_bitcell_sigma_zero_is_nominal():
    d = BitcellDesign(1.0, 2.0, 1.2)
    nominal = mc_bitcell_eval(d, VariationSpec(n_mc=1, sigma=0.0))
    for n in (1, 7, 40):
        assert mc_bitcell_eval(d, VariationSpec(n_mc=n, sigma=0.0, seed=n)) == nominal


def test_bitcell_monotone_margins():
    v = VariationSpec(n_mc=16, sigma=0.05)
    reads = [mc_bitcell_eval(BitcellDesign(1.0, pd, 1.0), v).read for pd in np.linspace(0.5, 3, 11)]
    assert all(b >= a for a, b in zip(reads, reads[1:]))
    writes = [mc_bitcell_eval(BitcellDesign(1.0, 1.0, pg), v).write for pg in np.linspace(0.5, 3, 11)]
    assert all(b >= a for a, b in zip(writes, writes[1:]))
    delays = [mc_bitcell_eval(BitcellDesign(1.0, 1.0, pg), v).delay for pg in np.linspace(0.5, 3, 11)]
    assert all(b <= a for a, b in zip(delays, delays[1:]))


def test_bitcell_determinism_and_corners():
    d = BitcellDesign(0.8, 1.5, 1.0)
    v = VariationSpec(n_mc=32, seed=4)
    assert mc_bitcell_eval(d, v) == mc_bitcell_eval(d, v)
    slow = VariationSpec(n_mc=32, seed=4, corners=(PvtCorner("TT"), PvtCorner("SS", 1.3, 0.9)))
    assert mc_bitcell_eval(d, slow).delay == pytest.approx(1.3 * mc_bitcell_eval(d, v).delay)


def test_bitcell_worst_case_monotone_in_samples():
    d = BitcellDesign(0.8, 1.5, 1.0)
    prev = None
    for n in (1, 4, 16, 64):
        m = mc_bitcell_eval(d, VariationSpec(n_mc=n, seed=9))
        if prev is not None:
            assert m.margin <= prev.margin and m.delay >= prev.delay and m.power >= prev.power
        prev = m


def test_variation_spec_validation():
    with pytest.raises(ValueError):
        VariationSpec(n_mc=0)
    with pytest.raises(ValueError):
        VariationSpec(sigma=-0.1)


def test_bitcell_collapsed_bounds():
    res = optimize_bitcell(lower=(1.0, 2.0, 1.5), upper=(1.0, 2.0, 1.5), method="pso")
    assert res.design.widths.tolist() == [1.0, 2.0, 1.5]


def test_bitcell_optimum_on_boundary_and_solvers_agree():
    scan = optimize_bitcell(method="scan")
    w = scan.design.widths
    assert np.any(np.isclose(w, 0.5) | np.isclose(w, 3.0))
    for method in ("pso", "sa"):
        res = optimize_bitcell(method=method, seed=1)
        assert scan.metrics.fom - res.metrics.fom <= 0.05


def test_bitcell_front():
    res = optimize_bitcell(method="nsga2", budget=200)
    assert res.archive is not None and len(res.archive) >= 2
    for e in res.archive:
        assert np.all(e.x >= 0.5 - 1e-12) and np.all(e.x <= 3.0 + 1e-12)
