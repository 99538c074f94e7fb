"""Transistor-width sizing of compressor gate chains.

The evaluation backend is a logical-effort model: a gate with drive
``x = (w_pu + w_pd) / 2`` presents input capacitance ``g * x`` and has stage
delay ``g*h + p = C_load / x + p`` (in units of tau).  Power is the
activity-weighted switched device width and area the summed device width.
Functional correctness is reduced to pull-up/pull-down ratio limits and a
minimum drive per width group.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cells import data_path
from .optim import ObjectiveVector, ParetoArchive, box_problem, moead, nsga2
from .ppa import pdp_fj

TAU_PS = 4.0          # delay unit
KAPPA_UW = 0.5        # uW per unit switched width at activity 1
LAMBDA_AREA = 0.1     # um^2 per unit device width
BETA_MIN = 0.5
BETA_MAX = 3.0

_LOGIC = {
    "INV": lambda a: 1 - a,
    "BUF": lambda a: a,
    "NAND2": lambda a, b: 1 - (a & b),
    "NOR2": lambda a, b: 1 - (a | b),
    "NAND3": lambda a, b, c: 1 - (a & b & c),
    "NOR3": lambda a, b, c: 1 - (a | b | c),
    "AND2": lambda a, b: a & b,
    "OR2": lambda a, b: a | b,
    "XOR2": lambda a, b: a ^ b,
    "MAJ3": lambda a, b, c: (a & b) | (a & c) | (b & c),
}


@dataclass(frozen=True)
class GateKind:
    g: float
    p: float
    n_pu: int
    n_pd: int


@dataclass(frozen=True)
class PvtCorner:
    name: str
    delay_scale: float = 1.0
    power_scale: float = 1.0

    def __post_init__(self):
        if self.delay_scale <= 0 or self.power_scale <= 0:
            raise ValueError(f"corner {self.name}: scale factors must be positive")


NOMINAL = PvtCorner("TT")
DEFAULT_CORNERS = (PvtCorner("TT", 1.0, 1.0), PvtCorner("SS", 1.30, 0.90),
                   PvtCorner("FF", 0.80, 1.20))


@dataclass(frozen=True)
class Gate:
    name: str
    kind: str
    pu_group: str
    pd_group: str
    fanin: tuple[str, ...]


@dataclass
class GateChain:
    """Gate-level implementation of one cell plus its width-sharing groups."""

    name: str
    inputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    outputs: dict                      # output pin -> gate name or "0"/"1"
    load: float
    groups: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    kinds: dict = field(default_factory=dict)
    activity: dict = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.inputs)
        for gate in self.gates:
            if gate.kind not in self.kinds:
                raise ValueError(f"chain {self.name}: unknown gate kind {gate.kind}")
            missing = [f for f in gate.fanin if f not in known]
            if missing:
                raise ValueError(f"chain {self.name}: gate {gate.name} reads undefined {missing[0]}")
            if len(gate.fanin) != _LOGIC[gate.kind].__code__.co_argcount:
                raise ValueError(f"chain {self.name}: gate {gate.name} has wrong fan-in")
            known.add(gate.name)
        for pin, src in self.outputs.items():
            if src not in known and src not in ("0", "1"):
                raise ValueError(f"chain {self.name}: output {pin} driven by undefined {src}")
        used = {g.name for g in self.gates}
        sinks = {f for g in self.gates for f in g.fanin} | set(self.outputs.values())
        dangling = used - sinks
        if dangling:
            raise ValueError(f"chain {self.name}: gates {sorted(dangling)} reach no output")
        if np.any(self.lower <= 0) or np.any(self.upper < self.lower):
            raise ValueError(f"chain {self.name}: invalid width bounds")
        if not self.activity:
            self.activity = self._activities()

    @property
    def q(self) -> int:
        return len(self.groups)

    def simulate(self, bits) -> dict:
        """Logic values of every gate and output for one input pattern."""
        val = dict(zip(self.inputs, (int(b) for b in bits)))
        for gate in self.gates:
            val[gate.name] = _LOGIC[gate.kind](*(val[f] for f in gate.fanin))
        return {pin: (int(src) if src in ("0", "1") else val[src]) for pin, src in self.outputs.items()} | val

    def truth_table(self) -> np.ndarray:
        pins = list(self.outputs)
        rows = []
        for bits in itertools.product((0, 1), repeat=len(self.inputs)):
            v = self.simulate(bits)
            rows.append([v[p] for p in pins])
        return np.array(rows, dtype=np.uint8)

    def _activities(self) -> dict:
        ones = {g.name: 0 for g in self.gates}
        n = 0
        for bits in itertools.product((0, 1), repeat=len(self.inputs)):
            v = self.simulate(bits)
            n += 1
            for g in self.gates:
                ones[g.name] += v[g.name]
        return {k: 2 * (c / n) * (1 - c / n) for k, c in ones.items()}

    def reference(self) -> np.ndarray:
        """All-ones sizing clipped into the bounds."""
        return np.clip(np.ones(self.q), self.lower, self.upper)


def load_gate_kinds(path=None) -> dict:
    kinds = {}
    text = Path(path or data_path("gates/gate_kinds.txt")).read_text()
    for raw in text.splitlines():
        tok = raw.split("#", 1)[0].split()
        if tok:
            kinds[tok[0]] = GateKind(float(tok[1]), float(tok[2]), int(tok[3]), int(tok[4]))
    return kinds


def parse_chain(text: str, kinds: dict | None = None) -> GateChain:
    kinds = kinds or load_gate_kinds()
    name, inputs, load = None, (), 0.0
    bounds = (0.5, 4.0)
    group_bounds = {}
    gates, outputs = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        key = tok[0]
        try:
            if key == "chain":
                name = tok[1]
            elif key == "inputs":
                inputs = tuple(tok[1:])
            elif key == "load":
                load = float(tok[1])
            elif key == "bounds":
                bounds = (float(tok[1]), float(tok[2]))
            elif key == "group":
                group_bounds[tok[1]] = (float(tok[2]), float(tok[3]))
            elif key == "gate":
                gates.append(Gate(tok[1], tok[2], tok[3], tok[4], tuple(tok[5:])))
            elif key == "output":
                outputs[tok[1]] = tok[2]
            else:
                raise ValueError(f"unknown directive {key!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"chain line {lineno}: {exc}") from None
    if name is None:
        raise ValueError("chain file lacks a 'chain <name>' line")
    groups = []
    for g in gates:
        for grp in (g.pu_group, g.pd_group):
            if grp not in groups:
                groups.append(grp)
    lower = np.array([group_bounds.get(g, bounds)[0] for g in groups])
    upper = np.array([group_bounds.get(g, bounds)[1] for g in groups])
    return GateChain(name, inputs, tuple(gates), outputs, load, tuple(groups), lower, upper, kinds)


def load_chain(name_or_path) -> GateChain:
    path = Path(name_or_path)
    if not path.exists():
        path = data_path(f"gates/{name_or_path}.chain")
    return parse_chain(path.read_text())


@dataclass(frozen=True)
class SizingMetrics:
    delay: float        # ps
    power: float        # uW
    area: float         # um^2
    pdp: float          # fJ
    feasible: bool
    violation: float


def _group_widths(w, chain: GateChain) -> dict:
    w = np.asarray(w, dtype=float)
    if w.shape != (chain.q,):
        raise ValueError(f"chain {chain.name} expects {chain.q} widths")
    return dict(zip(chain.groups, w))


def correctness_surrogate(w, chain: GateChain, beta_min: float = BETA_MIN,
                          beta_max: float = BETA_MAX, w_min: float | None = None):
    """``(feasible, violation)`` from ratio limits and minimum drive.

    Every gate needs ``beta_min <= w_pu/w_pd <= beta_max``; every group needs
    width >= ``w_min`` (default: the chain's lower bounds).
    """
    wg = _group_widths(w, chain)
    violation = 0.0
    for gate in chain.gates:
        beta = wg[gate.pu_group] / wg[gate.pd_group]
        violation += max(0.0, beta - beta_max) + max(0.0, beta_min - beta)
    floor = chain.lower if w_min is None else np.full(chain.q, w_min)
    violation += float(np.sum(np.maximum(0.0, floor - np.asarray(w, dtype=float))))
    return violation == 0.0, violation


def _bound_excess(w, chain) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.sum(np.maximum(0.0, chain.lower - w) + np.maximum(0.0, w - chain.upper)))


def eval_sizing(w, chain: GateChain, corner: PvtCorner = NOMINAL) -> SizingMetrics:
    wg = _group_widths(w, chain)
    kinds = chain.kinds
    drive = {g.name: 0.5 * (wg[g.pu_group] + wg[g.pd_group]) for g in chain.gates}
    load = {g.name: 0.0 for g in chain.gates}
    for g in chain.gates:
        for f in g.fanin:
            if f in load:
                load[f] += kinds[g.kind].g * drive[g.name]
    for src in chain.outputs.values():
        if src in load:
            load[src] += chain.load
    arrive = {name: 0.0 for name in chain.inputs}
    for g in chain.gates:
        stage = load[g.name] / drive[g.name] + kinds[g.kind].p
        arrive[g.name] = max(arrive[f] for f in g.fanin) + stage
    outs = [arrive[s] for s in chain.outputs.values() if s in arrive]
    delay = corner.delay_scale * TAU_PS * max(outs, default=0.0)
    switched = {g.name: kinds[g.kind].n_pu * wg[g.pu_group] + kinds[g.kind].n_pd * wg[g.pd_group]
                for g in chain.gates}
    power = corner.power_scale * KAPPA_UW * sum(chain.activity[n] * s for n, s in switched.items())
    area = LAMBDA_AREA * sum(switched.values())
    # ratio limits here; the width floor is part of the bound excess
    _, violation = correctness_surrogate(w, chain, w_min=0.0)
    violation += _bound_excess(w, chain)
    delay, power, area = float(delay), float(power), float(area)
    return SizingMetrics(delay, power, area, pdp_fj(power, delay), violation == 0.0, violation)


def worst_case(w, chain: GateChain, corners) -> SizingMetrics:
    """Max delay and max power over ``corners``; area is corner-independent."""
    corners = list(corners)
    if not corners:
        raise ValueError("corner set must not be empty")
    per = [eval_sizing(w, chain, c) for c in corners]
    d = max(m.delay for m in per)
    p = max(m.power for m in per)
    return SizingMetrics(d, p, per[0].area, pdp_fj(p, d), per[0].feasible, per[0].violation)


@dataclass
class SizingResult:
    archive: ParetoArchive
    reference: SizingMetrics
    reference_widths: np.ndarray
    evaluations: int


def optimize_cell(chain: GateChain, corners=DEFAULT_CORNERS, pop: int = 40, gens: int = 60,
                  seed: int = 0, method: str = "moead") -> SizingResult:
    """Bi-objective (PDP, area) sizing under worst-case corners.

    The all-ones reference sizing seeds the initial population.
    """
    corners = tuple(corners)
    ref_w = chain.reference()

    def evaluate(w):
        m = worst_case(w, chain, corners)
        return ObjectiveVector((m.pdp, m.area), m.violation)

    problem = box_problem(evaluate, chain.lower, chain.upper, initial=[ref_w])
    if method == "moead":
        archive = moead(problem, weights=pop, gens=gens, seed=seed)
    elif method == "nsga2":
        archive = nsga2(problem, pop=pop + pop % 2, gens=gens, seed=seed)
    else:
        raise ValueError(f"unknown sizing method {method!r}")
    return SizingResult(archive, worst_case(ref_w, chain, corners), ref_w, problem.evaluations)
