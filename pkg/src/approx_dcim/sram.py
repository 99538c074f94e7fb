"""SRAM bank organization search and a variation-aware 6T bitcell surrogate.

Bank metrics come from a closed-form model whose coefficients live in a
key = value file (see ``data/sram_default.txt``).  Delays are in ps, powers in
uW and areas in um^2; the ``fom_*_unit`` coefficients convert them before the
figure of merit is taken.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cells import data_path
from .optim import (ObjectiveVector, ParetoArchive, ScalarProblem, box_problem, grid_scan,
                    nsga2, pareto_filter, pso, sa)
from .sizing import NOMINAL, PvtCorner

ROWS = tuple(2 ** k for k in range(1, 10))     # 2 .. 512
COLS = tuple(2 ** k for k in range(1, 9))      # 2 .. 256
DEFAULT_MU = (2, 4, 8)
DEFAULT_CAPACITY = 4 * 1024 * 8

BANK_KEYS = ("t_dec", "t_bl", "t_wbl", "t_wl", "t_mux", "t_sa", "t_wd",
             "e_bl", "e_wbl", "e_per", "e_per_w", "a_cell", "a_row", "a_col", "a_fix",
             "fom_power_unit", "fom_delay_unit", "fom_area_unit")
BITCELL_KEYS = ("bc_hold0", "bc_read0", "bc_write0", "bc_tau", "bc_kappa", "bc_area0", "bc_area1")
KNOWN_KEYS = frozenset(BANK_KEYS + BITCELL_KEYS)


class CoefficientError(ValueError):
    pass


def parse_coefficients(text: str) -> dict:
    coeffs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise CoefficientError(f"line {lineno}: expected key = value")
        if key not in KNOWN_KEYS:
            raise CoefficientError(f"line {lineno}: unknown coefficient {key!r}")
        try:
            coeffs[key] = float(value)
        except ValueError:
            raise CoefficientError(f"line {lineno}: {key} is not a number") from None
    return coeffs


def load_coefficients(path=None) -> dict:
    return parse_coefficients(Path(path or data_path("sram_default.txt")).read_text())


def _require(coeffs, keys):
    unknown = set(coeffs) - KNOWN_KEYS
    if unknown:
        raise CoefficientError(f"unknown coefficient {sorted(unknown)[0]!r}")
    missing = [k for k in keys if k not in coeffs]
    if missing:
        raise CoefficientError(f"missing coefficient {missing[0]!r}")


# ---------------------------------------------------------------- bank level

@dataclass(frozen=True)
class BankConfig:
    r: int
    c: int
    mu: int
    n_a: int

    def check(self, capacity: int | None = None):
        if self.r not in ROWS or self.c not in COLS:
            raise ValueError(f"rows/columns off the power-of-two grid: {self}")
        if self.mu < 1 or self.n_a < 1:
            raise ValueError(f"invalid mux ratio or array count: {self}")
        if capacity is not None and self.r * self.c * self.n_a != capacity:
            raise ValueError(f"{self} violates capacity {capacity}")

    @property
    def label(self) -> str:
        return f"r{self.r}_c{self.c}_mu{self.mu}_na{self.n_a}"


@dataclass(frozen=True)
class BankMetrics:
    d_rd: float
    d_wr: float
    p_rd: float
    p_wr: float
    area: float

    @property
    def d_max(self) -> float:
        return max(self.d_rd, self.d_wr)

    @property
    def p_max(self) -> float:
        return max(self.p_rd, self.p_wr)


def enumerate_configs(capacity: int = DEFAULT_CAPACITY, mu_set=DEFAULT_MU) -> list[BankConfig]:
    if capacity < 1 or capacity & (capacity - 1):
        raise ValueError("capacity must be a power of two")
    out = []
    for r in ROWS:
        for c in COLS:
            if capacity % (r * c) or capacity < r * c:
                continue
            for mu in mu_set:
                out.append(BankConfig(r, c, mu, capacity // (r * c)))
    return out


def bank_model(cfg: BankConfig, coeffs: dict, capacity: int | None = None) -> BankMetrics:
    _require(coeffs, BANK_KEYS[:15])
    cfg.check(capacity)
    k = coeffs
    r, c, mu, n_a = cfg.r, cfg.c, cfg.mu, cfg.n_a
    common = k["t_dec"] * math.log2(r * n_a) + k["t_wl"] * c + k["t_mux"] * math.log2(mu)
    d_rd = common + k["t_bl"] * r + k["t_sa"]
    d_wr = common + k["t_wbl"] * r + k["t_wd"]
    active = (c / mu) * r
    p_rd = k["e_bl"] * active + k["e_per"] * n_a
    p_wr = k["e_wbl"] * active + k["e_per_w"] * n_a
    area = n_a * (r * c * k["a_cell"] + k["a_row"] * r + k["a_col"] * c + k["a_fix"])
    return BankMetrics(d_rd, d_wr, p_rd, p_wr, area)


def fom(m: BankMetrics, coeffs: dict | None = None) -> float:
    """-log10(P_max * sqrt(A) * D_max) after unit conversion (larger is better)."""
    k = coeffs or {}
    p = m.p_max * k.get("fom_power_unit", 1.0)
    d = m.d_max * k.get("fom_delay_unit", 1.0)
    a = m.area * k.get("fom_area_unit", 1.0)
    if not (p > 0 and d > 0 and a > 0):
        raise ValueError("FOM needs positive power, delay and area")
    return -math.log10(p * math.sqrt(a) * d)


@dataclass(frozen=True)
class BankResult:
    config: BankConfig
    metrics: BankMetrics
    fom: float


@dataclass
class BankSearch:
    method: str
    best: BankResult
    ranked: list          # evaluated configs, FOM descending
    front: list           # (P_max, D_max) non-dominated subset of ``ranked``
    evaluations: int


def _encode_space(mu_set):
    lower = np.array([1.0, 1.0, 0.0])
    upper = np.array([9.0, 8.0, len(mu_set) - 1.0])
    return lower, upper


def search_bank(capacity: int = DEFAULT_CAPACITY, method: str = "scan", seed: int = 0,
                coeffs: dict | None = None, mu_set=DEFAULT_MU, budget: int | None = None) -> BankSearch:
    """Maximize FOM over the bank grid.

    PSO and SA search ``(log2 r, log2 c, mu index)``; configurations with
    ``r*c > capacity`` are infeasible with violation ``log2(r*c/capacity)``.
    Their default budget matches the scan's evaluation count.
    """
    coeffs = coeffs or load_coefficients()
    mu_set = tuple(mu_set)
    results: dict[BankConfig, BankResult] = {}

    def run(cfg):
        if cfg not in results:
            m = bank_model(cfg, coeffs, capacity)
            results[cfg] = BankResult(cfg, m, fom(m, coeffs))
        return results[cfg]

    method = method.lower()
    evaluations = None
    if method == "scan":
        for cfg in enumerate_configs(capacity, mu_set):
            run(cfg)
    elif method in ("pso", "sa"):
        budget = budget or len(enumerate_configs(capacity, mu_set))

        def decode(x):
            r, c = 2 ** int(x[0]), 2 ** int(x[1])
            return r, c, mu_set[int(x[2])]

        def violation(x):
            r, c, _ = decode(x)
            return max(0.0, math.log2(r * c / capacity))

        def objective(x):
            r, c, mu = decode(x)
            if r * c > capacity:
                return 0.0
            return -run(BankConfig(r, c, mu, capacity // (r * c))).fom

        lower, upper = _encode_space(mu_set)
        problem = ScalarProblem(objective, lower, upper, step=1.0, constraint=violation)
        if method == "pso":
            pso(problem, particles=12, iters=2000, seed=seed, max_evaluations=budget,
                restart_after=5)
        else:
            # temperature in FOM units, cooled to ~0.005 over the step allowance
            steps = 4 * budget
            sa(problem, T0=0.5, alpha=0.01 ** (1.0 / steps), steps=steps, seed=seed,
               max_evaluations=budget)
        evaluations = problem.evaluations
    else:
        raise ValueError(f"unknown bank search method {method!r}")
    ranked = sorted(results.values(), key=lambda b: (-b.fom, b.config.label))
    keep = pareto_filter([(b.metrics.p_max, b.metrics.d_max) for b in ranked])
    front = sorted((ranked[i] for i in keep), key=lambda b: b.metrics.p_max)
    return BankSearch(method, ranked[0], ranked, front, evaluations or len(results))


def write_bank_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "r", "c", "mu", "n_a", "d_rd_ps", "d_wr_ps", "p_rd_uw", "p_wr_uw",
                    "area_um2", "d_max_ps", "p_max_uw", "fom"])
        for b in rows:
            cfg, m = b.config, b.metrics
            w.writerow([cfg.label, cfg.r, cfg.c, cfg.mu, cfg.n_a, repr(m.d_rd), repr(m.d_wr),
                        repr(m.p_rd), repr(m.p_wr), repr(m.area), repr(m.d_max), repr(m.p_max),
                        repr(b.fom)])


# ------------------------------------------------------------- bitcell level

DEVICES = ("PU", "PD", "PG")


@dataclass(frozen=True)
class BitcellDesign:
    w_pu: float
    w_pd: float
    w_pg: float

    def __post_init__(self):
        if min(self.widths) <= 0:
            raise ValueError("bitcell widths must be positive")

    @property
    def widths(self) -> np.ndarray:
        return np.array([self.w_pu, self.w_pd, self.w_pg], dtype=float)


@dataclass(frozen=True)
class VariationSpec:
    n_mc: int = 64
    sigma: float = 0.08
    corners: tuple = (NOMINAL,)
    seed: int = 0

    def __post_init__(self):
        if self.n_mc < 1:
            raise ValueError("n_mc must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.corners:
            raise ValueError("at least one corner is required")

    def deviations(self) -> np.ndarray:
        """``(n_mc, 6)`` standard normals; sample ``i`` depends only on (seed, i)."""
        return np.stack([np.random.default_rng([self.seed, i]).standard_normal(6)
                         for i in range(self.n_mc)])


@dataclass(frozen=True)
class BitcellMetrics:
    hold: float
    read: float
    write: float
    delay: float
    power: float
    area: float

    @property
    def margin(self) -> float:
        return min(self.hold, self.read, self.write)

    @property
    def fom(self) -> float:
        return math.log10(self.margin) - math.log10(self.power * self.delay * math.sqrt(self.area))


def _bitcell_nominal(strength, widths, coeffs):
    """Metrics for strengths of shape (..., 6): (PU, PD, PG) for the left then right half."""
    k = coeffs
    s = np.maximum(strength, 1e-6)
    pu, pd, pg = s[..., 0::3], s[..., 1::3], s[..., 2::3]
    # hold degrades as the pull-up overpowers the pull-down; no metric improves with PU
    hold = k["bc_hold0"] * (pd / (pd + 0.5 * pu)).min(axis=-1)
    read = k["bc_read0"] * (pd / (pd + pg)).min(axis=-1)
    write = k["bc_write0"] * (pg / (pg + pu)).min(axis=-1)
    delay = k["bc_tau"] * (1.0 / pg + 1.0 / pd).max(axis=-1)
    power = k["bc_kappa"] * s.sum(axis=-1)
    area = k["bc_area0"] + k["bc_area1"] * 2.0 * float(np.sum(widths))
    return hold, read, write, delay, power, area


def mc_bitcell_eval(d: BitcellDesign, v: VariationSpec, coeffs: dict | None = None,
                    z: np.ndarray | None = None) -> BitcellMetrics:
    """Worst case over ``n_mc`` samples and every corner.

    Each device strength is ``w * max(1 + sigma * z, 0)``.  Corners scale
    delay and power; margins are corner-independent in this surrogate.
    """
    coeffs = coeffs if coeffs is not None else load_coefficients()
    _require(coeffs, BITCELL_KEYS)
    z = v.deviations() if z is None else z
    w = np.tile(d.widths, 2)
    strength = w * np.maximum(1.0 + v.sigma * z, 0.0)
    hold, read, write, delay, power, area = _bitcell_nominal(strength, d.widths, coeffs)
    ds = max(c.delay_scale for c in v.corners)
    ps = max(c.power_scale for c in v.corners)
    return BitcellMetrics(float(hold.min()), float(read.min()), float(write.min()),
                          float(delay.max()) * ds, float(power.max()) * ps, float(area))


@dataclass
class BitcellResult:
    design: BitcellDesign | None
    metrics: BitcellMetrics | None
    archive: ParetoArchive | None
    evaluations: int


def optimize_bitcell(lower=(0.5, 0.5, 0.5), upper=(3.0, 3.0, 3.0), v: VariationSpec | None = None,
                     method: str = "pso", seed: int = 0, step: float = 0.1, coeffs: dict | None = None,
                     budget: int = 600) -> BitcellResult:
    """Maximize FOM_cell (pso, sa, scan) or explore (margin, P*D) with nsga2.

    Single-objective methods search the grid of pitch ``step`` inside the box.
    """
    v = v or VariationSpec()
    coeffs = coeffs if coeffs is not None else load_coefficients()
    z = v.deviations()

    def metrics(x):
        return mc_bitcell_eval(BitcellDesign(*np.asarray(x, dtype=float)), v, coeffs, z)

    method = method.lower()
    if method == "nsga2":
        def evaluate(x):
            m = metrics(x)
            return ObjectiveVector((-m.margin, m.power * m.delay), 0.0)

        problem = box_problem(evaluate, lower, upper)
        archive = nsga2(problem, pop=20, gens=max(1, budget // 20 - 1), seed=seed)
        best = max(archive.designs(), key=lambda x: metrics(x).fom)
        return BitcellResult(BitcellDesign(*map(float, best)), metrics(best), archive, problem.evaluations)
    problem = ScalarProblem(lambda x: -metrics(x).fom, lower, upper, step=step)
    if method == "pso":
        res = pso(problem, particles=20, iters=2000, seed=seed, max_evaluations=budget,
                  restart_after=10)
    elif method == "sa":
        res = sa(problem, T0=0.2, alpha=0.99, steps=20 * budget, seed=seed, max_evaluations=budget)
    elif method == "scan":
        res = grid_scan(problem)
    else:
        raise ValueError(f"unknown bitcell method {method!r}")
    return BitcellResult(BitcellDesign(*map(float, res.x)), metrics(res.x), None, res.evaluations)
