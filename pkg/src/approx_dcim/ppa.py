"""Analytical delay / power / area model for multiplier netlists."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cells import data_path, input_weights, output_probabilities
from .multiplier import Netlist

DEFAULT_FREQUENCY_GHZ = 1.0


class MissingTechEntry(KeyError):
    pass


@dataclass(frozen=True)
class TechEntry:
    delay_ps: float
    energy_fj: float
    area_um2: float


@dataclass(frozen=True)
class TechTable:
    entries: dict

    def __post_init__(self):
        for kind, e in self.entries.items():
            if min(e.delay_ps, e.energy_fj, e.area_um2) <= 0:
                raise ValueError(f"tech entry {kind}: all values must be positive")

    def __getitem__(self, kind: str) -> TechEntry:
        try:
            return self.entries[kind]
        except KeyError:
            raise MissingTechEntry(f"no tech entry for cell kind {kind!r}") from None

    def with_entry(self, kind: str, entry: TechEntry) -> "TechTable":
        return TechTable({**self.entries, kind: entry})


def parse_tech_table(text: str) -> TechTable:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 4:
            raise ValueError(f"line {lineno}: expected 'kind delay_ps energy_fJ area_um2'")
        entries[line[0]] = TechEntry(*(float(v) for v in line[1:]))
    return TechTable(entries)


def load_tech_table(path=None) -> TechTable:
    return parse_tech_table(Path(path or data_path("tech_default.txt")).read_text())


@dataclass(frozen=True)
class PpaReport:
    delay: float   # ps
    power: float   # uW
    area: float    # um^2
    pdp: float     # fJ

    def as_row(self) -> dict:
        return {"delay_ps": self.delay, "power_uw": self.power,
                "area_um2": self.area, "pdp_fj": self.pdp}


def pdp_fj(power_uw: float, delay_ps: float) -> float:
    # uW * ps = 1e-18 J
    return power_uw * delay_ps * 1e-3


def arrival_times(net: Netlist, tech: TechTable) -> np.ndarray:
    """Latest output arrival of every node (ps), PIs arriving at t=0."""
    arrive = np.zeros(len(net.nodes))
    for node in net.nodes:
        preds = net.predecessors(node)
        start = max((arrive[p] for p in preds), default=0.0)
        arrive[node.id] = start + tech[node.kind].delay_ps
    return arrive


def delay(net: Netlist, tech: TechTable) -> float:
    """Longest node-weighted path through the netlist, final adder included."""
    if not net.nodes:
        return 0.0
    return float(arrival_times(net, tech).max())


def signal_probabilities(net: Netlist, marginals=0.5) -> np.ndarray:
    """Bit-1 probability of every signal assuming independent cell inputs."""
    prob = np.zeros(net.n_signals)
    prob[1:1 + len(net.inputs)] = np.broadcast_to(np.asarray(marginals, dtype=float),
                                                  (len(net.inputs),))
    for node in net.nodes:
        omega = input_weights(prob[list(node.inputs)], node.cell.n_inputs)
        prob[list(node.outputs)] = output_probabilities(node.cell, omega)
    return prob


def default_activities(net: Netlist, marginals=0.5) -> np.ndarray:
    """Per-node toggle rate: mean over output pins of 2p(1-p)."""
    prob = signal_probabilities(net, marginals)
    return np.array([np.mean([2 * prob[s] * (1 - prob[s]) for s in node.outputs])
                     for node in net.nodes])


def power(net: Netlist, tech: TechTable, activities=None,
          frequency_ghz: float = DEFAULT_FREQUENCY_GHZ) -> float:
    """Dynamic power in uW: sum of energy * activity * frequency (fJ * GHz = uW)."""
    if activities is None:
        activities = default_activities(net)
    activities = np.asarray(activities, dtype=float)
    if activities.shape != (len(net.nodes),):
        raise ValueError("one activity per node required")
    energy = np.array([tech[n.kind].energy_fj for n in net.nodes])
    return float(energy @ activities * frequency_ghz) if net.nodes else 0.0


def area(net: Netlist, tech: TechTable) -> float:
    return float(sum(tech[n.kind].area_um2 for n in net.nodes))


def ppa_report(net: Netlist, tech: TechTable, activities=None,
               frequency_ghz: float = DEFAULT_FREQUENCY_GHZ) -> PpaReport:
    d = delay(net, tech)
    p = power(net, tech, activities, frequency_ghz)
    return PpaReport(d, p, area(net, tech), pdp_fj(p, d))
