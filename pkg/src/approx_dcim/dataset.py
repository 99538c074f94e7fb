"""Labelled design sets for the surrogate: oracle labels plus a fixed split."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cells import CellLibrary, default_library
from .gnn import TARGETS, GraphBatcher, StageGraph
from .metrics import ErrorReport, InputSet, report_from_products
from .multiplier import DesignEvaluator, MultiplierConfig, build_tree, slot_layout
from .ppa import PpaReport, TechTable, load_tech_table, ppa_report

SPLITS = ("train", "val", "test")


def encode(a) -> str:
    return "-".join(str(int(v)) for v in a)


def decode(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split("-")) if text else ()


class Oracle:
    """Bit-exact error metrics plus analytical PPA for assignment vectors."""

    def __init__(self, N: int, library: CellLibrary | None = None, tech: TechTable | None = None,
                 inputs: InputSet | None = None):
        self.N = N
        self.library = library or default_library()
        self.tech = tech or load_tech_table()
        self.inputs = inputs or InputSet.default(N)
        x, y, mask = self.inputs.operands()
        self._x, self._y, self._mask = x, y, mask
        self._eval = DesignEvaluator(N, self.library, x, y)
        self.t = len(slot_layout(N))

    def netlist(self, a):
        return build_tree(MultiplierConfig(self.N, a, self.library))

    def error(self, a, exact: bool = False) -> ErrorReport:
        approx = self._eval.products(tuple(a))
        return report_from_products(approx, self._x, self._y, self._mask, self.N,
                                    self.inputs.size_u, self.inputs.describe(), exact)

    def ppa(self, a) -> PpaReport:
        return ppa_report(self.netlist(a), self.tech)

    def label(self, a) -> np.ndarray:
        """``(MRED, NMED, D, A, P)``."""
        e, p = self.error(a), self.ppa(a)
        return np.array([e.mred, e.nmed, p.delay, p.area, p.power])


@dataclass
class Dataset:
    N: int
    designs: list                  # assignment tuples
    labels: np.ndarray             # (n, 5) in TARGETS order
    split: np.ndarray              # "train" / "val" / "test" per row
    seed: int = 0

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        self.split = np.asarray(self.split)
        if len(self.designs) != len(self.labels) or len(self.labels) != len(self.split):
            raise ValueError("designs, labels and split must have equal length")

    def __len__(self) -> int:
        return len(self.designs)

    def indices(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return np.flatnonzero(self.split == name)

    def part(self, name: str) -> tuple[list, np.ndarray]:
        idx = self.indices(name)
        return [self.designs[i] for i in idx], self.labels[idx]

    def graphs(self, library: CellLibrary, name: str | None = None) -> list[StageGraph]:
        idx = range(len(self)) if name is None else self.indices(name)
        return GraphBatcher(self.N, library).graphs([self.designs[i] for i in idx])


def sample_designs(t: int, K: int, count: int, seed: int) -> list[tuple[int, ...]]:
    """``count`` distinct assignment vectors drawn uniformly (order of first draw)."""
    if count > K ** t:
        raise ValueError(f"only {K ** t} distinct designs exist")
    rng = np.random.default_rng(seed)
    seen, out = set(), []
    while len(out) < count:
        for row in rng.integers(0, K, (count - len(out), t)):
            a = tuple(int(v) for v in row)
            if a not in seen:
                seen.add(a)
                out.append(a)
    return out


def split_labels(n: int, seed: int, fractions=(0.7, 0.15, 0.15)) -> np.ndarray:
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    split = np.array(["test"] * n, dtype=object)
    order = np.random.default_rng([seed, 1]).permutation(n)
    split[order[:n_train]] = "train"
    split[order[n_train:n_train + n_val]] = "val"
    return split.astype(str)


def generate_dataset(N: int = 8, count: int = 5000, seed: int = 0, oracle: Oracle | None = None,
                     fractions=(0.7, 0.15, 0.15), progress=None) -> Dataset:
    oracle = oracle or Oracle(N)
    designs = sample_designs(oracle.t, oracle.library.K, count, seed)
    labels = np.empty((count, len(TARGETS)))
    for i, a in enumerate(designs):
        labels[i] = oracle.label(a)
        if progress is not None:
            progress(i + 1, count)
    return Dataset(N, designs, labels, split_labels(count, seed, fractions), seed)


def write_dataset_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["design", *TARGETS, "split"])
        for a, y, s in zip(ds.designs, ds.labels, ds.split):
            w.writerow([encode(a), *(repr(float(v)) for v in y), s])


def read_dataset_csv(path, N: int, seed: int = 0) -> Dataset:
    designs, labels, split = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            designs.append(decode(row["design"]))
            labels.append([float(row[k]) for k in TARGETS])
            split.append(row["split"])
    return Dataset(N, designs, np.array(labels).reshape(-1, len(TARGETS)), np.array(split), seed)
