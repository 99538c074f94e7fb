"""Stage-wise message-passing surrogate for multiplier error and PPA.

Every node of a multiplier netlist becomes a graph node whose raw feature is

    [p_in (padded to 3) | p_in * e (padded to 3) | one-hot of the cell kind]

where ``p_in`` is the node's output-bit probability vector and ``e`` its
per-output deviation from the exact 4-2 cell.  Raw features are zero-padded
to the hidden width ``d``.  Stage ``k`` updates only the nodes in ``S_k``::

    h_v <- relu(W_k [h_v | mean_{u in N(v)} h_u])

with ``N(v)`` the nodes sharing a wire with ``v`` (either direction).  Stages
run in order so later stages see refreshed embeddings of earlier ones.  The
readout concatenates slot nodes (slot order) and final-stage nodes (column
order) and feeds an MLP head; outputs are ``offset + scale * softplus(z)``.

All gradients are written out by hand; :func:`gradient_check` compares them
with central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cells import CellLibrary, error_vector, input_weights, output_probabilities
from .multiplier import Netlist
from .ppa import signal_probabilities

TARGETS = ("mred", "nmed", "delay", "area", "power")
BASE_KINDS = ("PP", "HA", "FA")
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    pass


class FingerprintMismatch(ValueError):
    pass


# ------------------------------------------------------------------ graphs

def kind_vocabulary(lib: CellLibrary) -> tuple[str, ...]:
    return BASE_KINDS + tuple(lib.names)


def feature_width(lib: CellLibrary) -> int:
    return 6 + len(kind_vocabulary(lib))


@dataclass(frozen=True, eq=False)
class StageGraph:
    """Node features plus the stage partition and wire adjacency.

    ``stages[k]`` lists the node ids updated by stage ``k``; ``neighbors[v]``
    the ids sharing a wire with ``v``.  ``slot_nodes`` is in slot order and
    ``last_nodes`` in readout order.
    """

    features: np.ndarray
    stages: tuple
    neighbors: tuple
    slot_nodes: tuple
    last_nodes: tuple
    columns: tuple = ()

    def __post_init__(self):
        n = self.features.shape[0]
        seen = np.zeros(n, dtype=int)
        for s in self.stages:
            seen[list(s)] += 1
        if not np.all(seen == 1):
            raise ValueError("stages must partition the node set")
        if len(self.neighbors) != n:
            raise ValueError("one neighbour list per node is required")

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def T(self) -> int:
        return len(self.stages)

    @property
    def t(self) -> int:
        return len(self.slot_nodes)

    def structure_key(self) -> tuple:
        return (tuple(tuple(s) for s in self.stages), tuple(tuple(nb) for nb in self.neighbors),
                tuple(self.slot_nodes), tuple(self.last_nodes))

    def permute(self, perm) -> "StageGraph":
        """Relabel node ``v`` as ``perm[v]``; readout order is preserved."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        feats = self.features[inv]
        stages = tuple(tuple(sorted(int(perm[v]) for v in s)) for s in self.stages)
        neighbors = tuple(tuple(sorted(int(perm[u]) for u in self.neighbors[old]))
                          for old in inv)
        cols = tuple(self.columns[old] for old in inv) if self.columns else ()
        return StageGraph(feats, stages, neighbors, tuple(int(perm[v]) for v in self.slot_nodes),
                          tuple(int(perm[v]) for v in self.last_nodes), cols)


def node_features(net: Netlist, lib: CellLibrary, marginals=0.5) -> np.ndarray:
    vocab = {k: i for i, k in enumerate(kind_vocabulary(lib))}
    prob = signal_probabilities(net, marginals)
    exact = lib.exact
    feats = np.zeros((len(net.nodes), feature_width(lib)))
    for node in net.nodes:
        omega = input_weights(prob[list(node.inputs)], node.cell.n_inputs)
        p_in = output_probabilities(node.cell, omega)
        m = p_in.size
        feats[node.id, :m] = p_in
        if node.cell.shape == exact.shape:
            feats[node.id, 3:3 + m] = p_in * error_vector(node.cell, exact, omega)
        kind = node.kind if node.kind in vocab else node.cell.name
        feats[node.id, 6 + vocab[kind]] = 1.0
    return feats


def build_graph(net: Netlist, lib: CellLibrary, marginals=0.5) -> StageGraph:
    nb = [set() for _ in net.nodes]
    for src, _, dst, _ in net.edges():
        nb[src].add(dst)
        nb[dst].add(src)
    stages = tuple(tuple(s) for s in net.stage_members() if s)
    last = sorted(stages[-1], key=lambda v: (net.nodes[v].column, v))
    return StageGraph(node_features(net, lib, marginals), stages,
                      tuple(tuple(sorted(s)) for s in nb), tuple(net.slots), tuple(last),
                      tuple(n.column for n in net.nodes))


@dataclass(frozen=True, eq=False)
class _Compiled:
    """Dense mean-aggregation operators shared by every graph of one layout."""

    members: tuple          # int arrays, nodes of each stage
    agg: tuple              # (n_k, n) row-normalised adjacency per stage
    readout: np.ndarray


_COMPILED: dict = {}


def _compile(g: StageGraph) -> _Compiled:
    key = g.structure_key()
    hit = _COMPILED.get(key)
    if hit is not None:
        return hit
    members, agg = [], []
    for s in g.stages:
        idx = np.array(s, dtype=int)
        A = np.zeros((idx.size, g.n_nodes))
        for r, v in enumerate(idx):
            nb = g.neighbors[v]
            if nb:
                A[r, list(nb)] = 1.0 / len(nb)
        members.append(idx)
        agg.append(A)
    out = _Compiled(tuple(members), tuple(agg),
                    np.array(tuple(g.slot_nodes) + tuple(g.last_nodes), dtype=int))
    _COMPILED[key] = out
    return out


def stack_graphs(graphs) -> tuple[np.ndarray, _Compiled]:
    graphs = list(graphs)
    if not graphs:
        raise ValueError("no graphs given")
    key = graphs[0].structure_key()
    for g in graphs[1:]:
        if g.structure_key() != key:
            raise ValueError("graphs in one batch must share a layout")
    return np.stack([g.features for g in graphs]), _compile(graphs[0])


class GraphBatcher:
    """Features for many assignments of one layout without building netlists.

    Bit probabilities are propagated for a whole batch at once; slot nodes
    pick their cell per row.  Output matches :func:`build_graph` node for node.
    """

    def __init__(self, N: int, library: CellLibrary, marginals=0.5):
        from .multiplier import MultiplierConfig, build_tree

        self.N = N
        self.library = library
        self.base = build_tree(MultiplierConfig.exact(N, library))
        self.graph = build_graph(self.base, library, marginals)
        self.compiled = _compile(self.graph)
        self.marginals = np.broadcast_to(np.asarray(marginals, dtype=float),
                                         (len(self.base.inputs),)).copy()
        vocab = {k: i for i, k in enumerate(kind_vocabulary(library))}
        self._width = feature_width(library)
        self._slot_pos = {k: i for i, k in enumerate(self.base.slots)}
        exact = library.exact
        self._rows = np.stack([c.rows.astype(float) for c in library.compressors])
        self._diff = np.stack([(c.rows != exact.rows).astype(float) for c in library.compressors])
        self._slot_kind = np.array([6 + vocab[c.name] for c in library.compressors])
        self._fixed = {}
        for node in self.base.nodes:
            kind = node.kind if node.kind in vocab else node.cell.name
            self._fixed[node.id] = 6 + vocab[kind]

    @staticmethod
    def _weights(P: np.ndarray) -> np.ndarray:
        # P: (B, n) bit-1 probabilities -> (B, 2**n), pattern read MSB first
        B, n = P.shape
        w = np.ones((B, 1))
        for j in range(n):
            p = P[:, j:j + 1]
            w = np.stack([w * (1.0 - p), w * p], axis=2).reshape(B, -1)
        return w

    def features(self, designs) -> np.ndarray:
        A = np.asarray([tuple(a) for a in designs], dtype=int).reshape(-1, self.base.t)
        B = A.shape[0]
        net = self.base
        prob = np.zeros((B, net.n_signals))
        prob[:, 1:1 + len(net.inputs)] = self.marginals
        X = np.zeros((B, len(net.nodes), self._width))
        rows_b = np.arange(B)
        for node in net.nodes:
            omega = self._weights(prob[:, list(node.inputs)])
            if node.slot is None:
                p_out = np.clip(omega @ node.cell.rows.astype(float), 0.0, 1.0)
                X[:, node.id, self._fixed[node.id]] = 1.0
                if node.cell.shape == self.library.exact.shape:
                    diff = (node.cell.rows != self.library.exact.rows).astype(float)
                    X[:, node.id, 3:3 + p_out.shape[1]] = p_out * np.clip(omega @ diff, 0.0, 1.0)
            else:
                choice = A[:, self._slot_pos[node.id]]
                p_out = np.clip(np.einsum("bi,bim->bm", omega, self._rows[choice]), 0.0, 1.0)
                e = np.clip(np.einsum("bi,bim->bm", omega, self._diff[choice]), 0.0, 1.0)
                X[:, node.id, 3:3 + p_out.shape[1]] = p_out * e
                X[rows_b, node.id, self._slot_kind[choice]] = 1.0
            X[:, node.id, :p_out.shape[1]] = p_out
            prob[:, list(node.outputs)] = p_out
        return X

    def graphs(self, designs) -> list[StageGraph]:
        g = self.graph
        return [StageGraph(x, g.stages, g.neighbors, g.slot_nodes, g.last_nodes, g.columns)
                for x in self.features(designs)]

    def predict(self, model: "SurrogateModel", designs, batch: int = 1024) -> np.ndarray:
        designs = list(designs)
        out = [predict_batch(model, self.features(designs[i:i + batch]), self.compiled)
               for i in range(0, len(designs), batch)]
        return np.concatenate(out) if out else np.zeros((0, len(TARGETS)))


# ------------------------------------------------------------------- model

def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class SurrogateModel:
    """Stage weights ``W[k]`` (2d x d), head layers, and target scaling.

    Predictions are ``offset + scale * softplus(head(g_out))``; with
    ``offset >= 0`` every output is non-negative.
    """

    W: list
    head_W: list
    head_b: list
    offset: np.ndarray
    scale: np.ndarray
    fingerprint: tuple = ()           # (N, t, T)

    @property
    def d(self) -> int:
        return self.W[0].shape[1]

    @classmethod
    def init(cls, d: int, T: int, readout_nodes: int, hidden=(64, 32), n_out: int = 5,
             seed: int = 0, fingerprint: tuple = ()) -> "SurrogateModel":
        rng = np.random.default_rng(seed)
        W = [rng.normal(0.0, math.sqrt(2.0 / (2 * d)), (2 * d, d)) for _ in range(T)]
        sizes = (readout_nodes * d, *hidden, n_out)
        head_W = [rng.normal(0.0, math.sqrt(2.0 / a), (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        head_W[-1] *= 0.1
        head_b = [np.zeros(b) for b in sizes[1:]]
        return cls(W, head_W, head_b, np.zeros(n_out), np.ones(n_out), tuple(fingerprint))

    @classmethod
    def for_graph(cls, g: StageGraph, d: int = 32, hidden=(64, 32), seed: int = 0,
                  N: int | None = None) -> "SurrogateModel":
        return cls.init(d, g.T, g.t + len(g.last_nodes), hidden, len(TARGETS), seed,
                        (N, g.t, g.T) if N is not None else ())

    def params(self) -> list[np.ndarray]:
        return [*self.W, *self.head_W, *self.head_b]

    def copy(self) -> "SurrogateModel":
        return SurrogateModel([w.copy() for w in self.W], [w.copy() for w in self.head_W],
                              [b.copy() for b in self.head_b], self.offset.copy(),
                              self.scale.copy(), self.fingerprint)


def _pad(X: np.ndarray, d: int) -> np.ndarray:
    f = X.shape[-1]
    if f > d:
        raise ValueError(f"feature width {f} exceeds hidden width {d}")
    if f == d:
        return X.astype(float, copy=True)
    out = np.zeros(X.shape[:-1] + (d,))
    out[..., :f] = X
    return out


def _check_dims(model: SurrogateModel, comp: _Compiled):
    if len(model.W) != len(comp.members):
        raise ValueError(f"model has {len(model.W)} stage blocks, graph has {len(comp.members)} stages")
    if model.head_W[0].shape[0] != comp.readout.size * model.d:
        raise ValueError("readout width does not match the model head")


def _forward(model: SurrogateModel, X: np.ndarray, comp: _Compiled, keep: bool = False):
    _check_dims(model, comp)
    H = _pad(X, model.d)
    B = H.shape[0]
    tape = []
    for W, idx, A in zip(model.W, comp.members, comp.agg):
        Hk = H[:, idx]
        agg = A @ H
        cat = np.concatenate([Hk, agg], axis=2)
        Z = cat @ W
        if keep:
            tape.append((cat, Z))
        H[:, idx] = np.maximum(Z, 0.0)
    g = H[:, comp.readout].reshape(B, -1)
    acts = [g]
    a = g
    n_layers = len(model.head_W)
    for i, (Wh, bh) in enumerate(zip(model.head_W, model.head_b)):
        a = a @ Wh + bh
        if i < n_layers - 1:
            a = np.maximum(a, 0.0)
        acts.append(a)
    return a, (tape, acts)


def sage_forward(g: StageGraph, model: SurrogateModel) -> np.ndarray:
    """Global readout vector of one graph."""
    X, comp = stack_graphs([g])
    if len(model.W) != len(comp.members):
        raise ValueError("model stage count does not match the graph")
    H = _pad(X, model.d)
    for W, idx, A in zip(model.W, comp.members, comp.agg):
        cat = np.concatenate([H[:, idx], A @ H], axis=2)
        H[:, idx] = np.maximum(cat @ W, 0.0)
    return H[0, comp.readout].reshape(-1)


def predict_batch(model: SurrogateModel, X: np.ndarray, comp: _Compiled) -> np.ndarray:
    pre, _ = _forward(model, X, comp)
    return model.offset + model.scale * softplus(pre)


def predict(model: SurrogateModel, graphs, batch: int = 512) -> np.ndarray:
    """``(B, 5)`` predictions for a graph or a list of same-layout graphs."""
    single = isinstance(graphs, StageGraph)
    graphs = [graphs] if single else list(graphs)
    X, comp = stack_graphs(graphs)
    out = np.concatenate([predict_batch(model, X[i:i + batch], comp)
                          for i in range(0, len(graphs), batch)])
    return out[0] if single else out


def loss_and_grad(model: SurrogateModel, X: np.ndarray, comp: _Compiled, Y: np.ndarray,
                  need_grad: bool = True):
    """MSE on the scaled targets ``(y - offset) / scale`` and its gradient."""
    pre, (tape, acts) = _forward(model, X, comp, keep=need_grad)
    target = (Y - model.offset) / model.scale
    sp = softplus(pre)
    diff = sp - target
    loss = float(np.mean(diff ** 2))
    if not need_grad:
        return loss, None
    B = X.shape[0]
    delta = 2.0 * diff * sigmoid(pre) / diff.size
    gW_head, gb_head = [None] * len(model.head_W), [None] * len(model.head_W)
    for i in range(len(model.head_W) - 1, -1, -1):
        gW_head[i] = acts[i].T @ delta
        gb_head[i] = delta.sum(axis=0)
        delta = delta @ model.head_W[i].T
        if i > 0:
            delta = delta * (acts[i] > 0)
    d = model.d
    dH = np.zeros((B, X.shape[1], d))
    dH[:, comp.readout] = delta.reshape(B, comp.readout.size, d)
    gW = [None] * len(model.W)
    for k in range(len(model.W) - 1, -1, -1):
        idx, A = comp.members[k], comp.agg[k]
        cat, Z = tape[k]
        dZ = dH[:, idx] * (Z > 0)
        gW[k] = cat.reshape(-1, 2 * d).T @ dZ.reshape(-1, d)
        dcat = dZ @ model.W[k].T
        dH[:, idx] = dcat[:, :, :d]
        dH += A.T @ dcat[:, :, d:]
    return loss, [*gW, *gW_head, *gb_head]


# ---------------------------------------------------------------- training

@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    def update(self, params, grads):
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.step += 1
        c1 = 1.0 - self.beta1 ** self.step
        c2 = 1.0 - self.beta2 ** self.step
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def fit_scaling(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Offset just below the smallest label (never negative) and a spread scale."""
    Y = np.asarray(Y, dtype=float)
    sd = Y.std(axis=0)
    mu = np.abs(Y.mean(axis=0))
    scale = np.where(sd > 0, sd, np.where(mu > 0, mu, 1.0))
    offset = np.maximum(Y.min(axis=0) - 0.5 * scale, 0.0)
    return offset, scale


@dataclass
class TrainResult:
    model: SurrogateModel
    losses: list              # mean training loss per epoch
    val_losses: list


def train(model: SurrogateModel, graphs, Y, lr: float = 1e-3, batch: int = 64, epochs: int = 100,
          seed: int = 0, val=None, fit_stats: bool = True, lr_decay: float = 1.0) -> TrainResult:
    """Mini-batch Adam on the scaled-target MSE.

    ``val`` is an optional ``(graphs, Y)`` pair whose loss is tracked per
    epoch.  A non-finite loss aborts with :class:`TrainingDiverged`.
    """
    Y = np.asarray(Y, dtype=float)
    X, comp = stack_graphs(graphs)
    if len(Y) != len(X) or len(X) == 0:
        raise ValueError("need one label row per graph and at least one graph")
    model = model.copy()
    if fit_stats:
        model.offset, model.scale = fit_scaling(Y)
    if val is not None:
        Xv, comp_v = stack_graphs(val[0])
        Yv = np.asarray(val[1], dtype=float)
    rng = np.random.default_rng(seed)
    opt = Adam(lr)
    params = model.params()
    losses, val_losses = [], []
    for epoch in range(epochs):
        order = rng.permutation(len(X))
        total = 0.0
        for s in range(0, len(X), batch):
            idx = order[s:s + batch]
            loss, grads = loss_and_grad(model, X[idx], comp, Y[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {s // batch} "
                                       f"(lr={opt.lr})")
            total += loss * len(idx)
            opt.update(params, grads)
        losses.append(total / len(X))
        if val is not None:
            val_losses.append(loss_and_grad(model, Xv, comp_v, Yv, need_grad=False)[0])
        opt.lr *= lr_decay
    return TrainResult(model, losses, val_losses)


def eval_metrics(y_true, y_pred, names=TARGETS) -> dict:
    """Per-target MSE, MRE (%, over nonzero labels) and R^2."""
    y_true = np.atleast_2d(np.asarray(y_true, dtype=float))
    y_pred = np.atleast_2d(np.asarray(y_pred, dtype=float))
    if y_true.size == 0:
        raise ValueError("empty split")
    out = {}
    for j, name in enumerate(names[:y_true.shape[1]]):
        y, p = y_true[:, j], y_pred[:, j]
        err = p - y
        mse = float(np.mean(err ** 2))
        nz = y != 0
        mre = float(np.mean(np.abs(err[nz]) / np.abs(y[nz])) * 100.0) if nz.any() else float("nan")
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(err ** 2)) / ss_tot if ss_tot > 0 else float("nan")
        out[name] = {"mse": mse, "mre": mre, "r2": r2}
    return out


def gradient_check(model: SurrogateModel, graphs, Y, n_params: int = 100, eps: float = 1e-5,
                   seed: int = 0) -> tuple[float, list]:
    """Max relative error between analytic and central-difference gradients.

    ``n_params`` entries are drawn (seeded) across all parameter blocks.
    Returns the maximum and the per-entry ``(analytic, numeric)`` pairs.
    """
    X, comp = stack_graphs(graphs)
    Y = np.asarray(Y, dtype=float)
    model = model.copy()
    _, grads = loss_and_grad(model, X, comp, Y)
    params = model.params()
    sizes = np.array([p.size for p in params])
    rng = np.random.default_rng(seed)
    flat = rng.choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
    bounds = np.cumsum(sizes)
    pairs, worst = [], 0.0
    for f in flat:
        b = int(np.searchsorted(bounds, f, side="right"))
        i = int(f - (bounds[b - 1] if b else 0))
        p = params[b].reshape(-1)
        old = p[i]
        p[i] = old + eps
        lp = loss_and_grad(model, X, comp, Y, need_grad=False)[0]
        p[i] = old - eps
        lm = loss_and_grad(model, X, comp, Y, need_grad=False)[0]
        p[i] = old
        num = (lp - lm) / (2 * eps)
        ana = float(grads[b].reshape(-1)[i])
        rel = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
        worst = max(worst, rel)
        pairs.append((ana, num))
    return worst, pairs


# -------------------------------------------------------------- checkpoint

def save_model(model: SurrogateModel, path) -> None:
    arrays = {f"W{k}": w for k, w in enumerate(model.W)}
    arrays |= {f"hW{k}": w for k, w in enumerate(model.head_W)}
    arrays |= {f"hb{k}": b for k, b in enumerate(model.head_b)}
    fp = np.array([-1 if v is None else v for v in model.fingerprint] or [-1, -1, -1])
    with open(path, "wb") as fh:
        np.savez(fh, version=np.array(CHECKPOINT_VERSION), fingerprint=fp, offset=model.offset,
                 scale=model.scale, **arrays)


def load_model(path, fingerprint: tuple | None = None) -> SurrogateModel:
    """Load a checkpoint; refuse when ``fingerprint`` (N, t, T) disagrees."""
    with np.load(path) as z:
        if int(z["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {int(z['version'])}")
        fp = tuple(int(v) for v in z["fingerprint"])
        if fingerprint is not None and tuple(fingerprint) != fp:
            raise FingerprintMismatch(f"checkpoint layout {fp} does not match {tuple(fingerprint)}")
        T = sum(1 for k in z.files if k.startswith("W"))
        L = sum(1 for k in z.files if k.startswith("hW"))
        return SurrogateModel([z[f"W{k}"] for k in range(T)], [z[f"hW{k}"] for k in range(L)],
                              [z[f"hb{k}"] for k in range(L)], z["offset"], z["scale"], fp)
