"""Command-line entry point: ``python -m approx_dcim <command> [options]``.

Every command writes CSV artifacts plus ``manifest.json`` into ``--out-dir``
and prints one ``key=value`` summary line.  Options may also come from a
``--config`` file of ``key = value`` lines; command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cells import data_path, default_library, load_library_file

CONFIG_KEYS = {
    # key: (type, default)
    "bits": (int, 8),
    "library": (str, ""),
    "tech": (str, ""),
    "nmed_budget": (float, 1.0),
    "mred_budget": (float, None),
    "budgets": (str, "0.004,0.003,0.002,0.001,0.0005"),
    "optimizer": (str, "nsga2"),
    "pop": (int, 50),
    "gens": (int, 100),
    "count": (int, 5000),
    "dataset": (str, ""),
    "model": (str, ""),
    "epochs": (int, 60),
    "lr": (float, 2e-3),
    "lr_decay": (float, 0.97),
    "batch": (int, 64),
    "hidden": (int, 32),
    "capacity": (int, 32768),
    "sram_method": (str, "scan"),
    "bitcell_method": (str, "pso"),
    "cells": (str, ""),
    "sizing_method": (str, "moead"),
    "image_a": (str, "synthetic:gradient"),
    "image_b": (str, "synthetic:checker"),
    "alpha": (float, 0.5),
    "design": (str, ""),
    "designs": (str, ""),
}


class CliError(Exception):
    pass


def parse_config(text: str, origin: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise CliError(f"{origin}:{lineno}: expected key = value")
        if key not in CONFIG_KEYS:
            raise CliError(f"{origin}:{lineno}: unknown key {key!r}")
        typ = CONFIG_KEYS[key][0]
        try:
            out[key] = typ(value.strip())
        except ValueError:
            raise CliError(f"{origin}:{lineno}: {key} expects {typ.__name__}") from None
    return out


def resolve(args) -> dict:
    cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise CliError(f"cannot read config {path}: {exc.strerror}") from None
        cfg.update(parse_config(text, str(path)))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["seed"] = args.seed
    cfg["exact_verify"] = args.exact_verify
    for key in ("nmed_budget", "mred_budget", "count", "pop", "gens", "epochs", "batch"):
        if cfg.get(key) is not None and cfg[key] < 0:
            raise CliError(f"{key} must be non-negative")
    return cfg


def _library(cfg):
    if cfg["library"]:
        path = Path(cfg["library"])
        if not path.exists():
            raise CliError(f"library file not found: {path}")
        return load_library_file(path)
    return default_library()


def _tech(cfg):
    from .ppa import load_tech_table
    if cfg["tech"] and not Path(cfg["tech"]).exists():
        raise CliError(f"tech table not found: {cfg['tech']}")
    return load_tech_table(cfg["tech"] or None)


def _oracle(cfg, lib=None):
    from .dataset import Oracle
    return Oracle(cfg["bits"], lib or _library(cfg), _tech(cfg))


def _write_manifest(out: Path, command: str, cfg: dict, outputs: list) -> None:
    manifest = {"command": command, "version": __version__, "seed": cfg["seed"],
                "config": {k: cfg[k] for k in sorted(cfg)}, "outputs": sorted(outputs)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _summary(command: str, **fields) -> None:
    parts = [f"command={command}"] + [f"{k}={v}" for k, v in fields.items()]
    print(" ".join(parts))


def _budgets(cfg) -> list[float]:
    try:
        vals = [float(v) for v in cfg["budgets"].split(",") if v.strip()]
    except ValueError:
        raise CliError(f"budgets must be a comma-separated list of numbers: {cfg['budgets']!r}") from None
    if any(v < 0 for v in vals):
        raise CliError("budgets must be non-negative")
    return vals


# ----------------------------------------------------------------- commands

def cmd_gen_dataset(cfg, out: Path) -> None:
    from .dataset import generate_dataset, write_dataset_csv
    t0 = time.perf_counter()
    ds = generate_dataset(cfg["bits"], cfg["count"], cfg["seed"], _oracle(cfg))
    path = out / "dataset.csv"
    write_dataset_csv(ds, path)
    _write_manifest(out, "gen-dataset", cfg, [path.name])
    _summary("gen-dataset", rows=len(ds), path=path, seconds=f"{time.perf_counter() - t0:.1f}")


def _load_dataset(cfg, out: Path):
    from .dataset import read_dataset_csv
    path = Path(cfg["dataset"]) if cfg["dataset"] else out / "dataset.csv"
    if not path.exists():
        raise CliError(f"dataset not found: {path} (run gen-dataset or set dataset=)")
    return read_dataset_csv(path, cfg["bits"], cfg["seed"])


def cmd_train(cfg, out: Path) -> None:
    import csv
    from .gnn import SurrogateModel, eval_metrics, predict, save_model, train
    t0 = time.perf_counter()
    lib = _library(cfg)
    ds = _load_dataset(cfg, out)
    graphs = {s: ds.graphs(lib, s) for s in ("train", "val", "test")}
    labels = {s: ds.part(s)[1] for s in graphs}
    if not graphs["train"]:
        raise CliError("training split is empty")
    model = SurrogateModel.for_graph(graphs["train"][0], d=cfg["hidden"], seed=cfg["seed"],
                                     N=cfg["bits"])
    val = (graphs["val"], labels["val"]) if graphs["val"] else None
    res = train(model, graphs["train"], labels["train"], lr=cfg["lr"], batch=cfg["batch"],
                epochs=cfg["epochs"], seed=cfg["seed"], val=val, lr_decay=cfg["lr_decay"])
    save_model(res.model, out / "model.npz")
    with open(out / "train_log.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss"])
        for i, loss in enumerate(res.losses):
            w.writerow([i + 1, repr(loss), repr(res.val_losses[i]) if res.val_losses else ""])
    r2 = {}
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["split", "target", "mse", "mre_pct", "r2"])
        for split in ("train", "val", "test"):
            if not graphs[split]:
                continue
            m = eval_metrics(labels[split], predict(res.model, graphs[split]))
            for target, vals in m.items():
                w.writerow([split, target, repr(vals["mse"]), repr(vals["mre"]), repr(vals["r2"])])
                if split == "test":
                    r2[target] = vals["r2"]
    _write_manifest(out, "train", cfg, ["model.npz", "train_log.csv", "metrics.csv"])
    _summary("train", epochs=cfg["epochs"], final_loss=f"{res.losses[-1]:.6g}",
             **{f"r2_{k}": f"{v:.4f}" for k, v in r2.items()},
             seconds=f"{time.perf_counter() - t0:.1f}")


def _load_model(cfg, out: Path, t: int, T: int):
    from .gnn import load_model
    path = Path(cfg["model"]) if cfg["model"] else out / "model.npz"
    if not path.exists():
        return None
    return load_model(path, (cfg["bits"], t, T))


def cmd_search_arch(cfg, out: Path) -> None:
    import csv
    from .archsearch import Budget, search_architecture, write_front_csv
    from .dataset import encode
    from .gnn import GraphBatcher
    lib = _library(cfg)
    oracle = _oracle(cfg, lib)
    g = GraphBatcher(cfg["bits"], lib).graph
    model = _load_model(cfg, out, g.t, g.T)
    if cfg["model"] and model is None:
        raise CliError(f"model not found: {cfg['model']}")
    budgets = [cfg["nmed_budget"]] + [b for b in _budgets(cfg) if b != cfg["nmed_budget"]]
    results = []
    for eps in budgets:
        res = search_architecture(cfg["bits"], lib, Budget(eps, cfg["mred_budget"]),
                                  method=cfg["optimizer"], pop=cfg["pop"], gens=cfg["gens"],
                                  seed=cfg["seed"], model=model, oracle=oracle)
        results.append(res)
    main = results[0]
    outputs = ["front.csv", "cases.csv"]
    write_front_csv(out / "front.csv", main)
    with open(out / "cases.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "nmed_budget", "feasible", "design", "mred", "nmed", "pdp_fj"])
        for i, res in enumerate(results):
            best = res.best_pdp()
            if best is None:
                w.writerow([i, repr(res.budget.nmed), 0, "", "", "", ""])
                continue
            o = best.oracle
            w.writerow([i, repr(res.budget.nmed), 1, encode(o.design), repr(o.mred), repr(o.nmed),
                        repr(o.pdp)])
    if cfg["exact_verify"] and main.evaluator == "surrogate":
        with open(out / "verify.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["design", "surrogate_mred", "oracle_mred", "surrogate_nmed", "oracle_nmed",
                        "budget_ok"])
            for p, ok in [(p, 1) for p in main.front] + [(p, 0) for p in main.dropped]:
                s = p.surrogate
                w.writerow([encode(p.oracle.design), repr(s.mred) if s else "", repr(p.oracle.mred),
                            repr(s.nmed) if s else "", repr(p.oracle.nmed), ok])
        outputs.append("verify.csv")
    _write_manifest(out, "search-arch", cfg, outputs)
    if not main.feasible:
        print(main.report(), file=sys.stderr)
    _summary("search-arch", evaluator=main.evaluator, optimizer=cfg["optimizer"],
             nmed_budget=cfg["nmed_budget"], front=len(main.front), dropped=len(main.dropped),
             evaluations=main.evaluations, cases=len(results))


def cmd_size_cells(cfg, out: Path) -> None:
    import csv
    from .sizing import DEFAULT_CORNERS, load_chain, optimize_cell
    names = [c for c in cfg["cells"].split(",") if c] or \
        sorted(p.stem for p in data_path("gates").glob("*.chain"))
    rows = 0
    with open(out / "sizing.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "kind", "widths", "pdp_fj", "area_um2", "feasible", "generation"])
        for name in names:
            try:
                chain = load_chain(name)
            except FileNotFoundError:
                raise CliError(f"no gate chain for cell {name!r}") from None
            res = optimize_cell(chain, DEFAULT_CORNERS, pop=cfg["pop"], gens=cfg["gens"],
                                seed=cfg["seed"], method=cfg["sizing_method"])
            ref = res.reference
            w.writerow([name, "reference", " ".join(repr(float(v)) for v in res.reference_widths),
                        repr(ref.pdp), repr(ref.area), int(ref.feasible), -1])
            for e in res.archive.sorted():
                w.writerow([name, "front", " ".join(repr(float(v)) for v in e.x),
                            repr(e.objectives.values[0]), repr(e.objectives.values[1]),
                            int(e.objectives.feasible), e.generation])
                rows += 1
    _write_manifest(out, "size-cells", cfg, ["sizing.csv"])
    _summary("size-cells", cells=len(names), front_rows=rows)


def cmd_sram(cfg, out: Path) -> None:
    import csv
    from .sram import optimize_bitcell, search_bank, write_bank_csv
    res = search_bank(cfg["capacity"], cfg["sram_method"], cfg["seed"])
    write_bank_csv(out / "sram.csv", res.ranked)
    write_bank_csv(out / "sram_front.csv", res.front)
    cell = optimize_bitcell(method=cfg["bitcell_method"], seed=cfg["seed"])
    with open(out / "bitcell.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["w_pu", "w_pd", "w_pg", "hold", "read", "write", "delay", "power", "area", "fom"])
        d, m = cell.design, cell.metrics
        w.writerow([repr(d.w_pu), repr(d.w_pd), repr(d.w_pg), repr(m.hold), repr(m.read),
                    repr(m.write), repr(m.delay), repr(m.power), repr(m.area), repr(m.fom)])
    _write_manifest(out, "sram", cfg, ["sram.csv", "sram_front.csv", "bitcell.csv"])
    b = res.best
    _summary("sram", method=res.method, rows=len(res.ranked), front=len(res.front),
             best=b.config.label, fom=f"{b.fom:.4f}", bitcell_fom=f"{cell.metrics.fom:.4f}")


def _image(spec: str):
    from .imaging import checker_noise_image, gradient_image, read_pgm
    if spec == "synthetic:gradient":
        return gradient_image()
    if spec == "synthetic:checker":
        return checker_noise_image()
    path = Path(spec)
    if not path.exists():
        raise CliError(f"image not found: {path}")
    return read_pgm(path)


def _design_list(cfg, out: Path, t: int, K: int | None = None) -> list[tuple]:
    designs = _raw_designs(cfg, out, t)
    for d in designs:
        if len(d) != t:
            raise CliError(f"design {'-'.join(map(str, d))} has {len(d)} slots, layout needs {t}")
        if K is not None and any(not 0 <= v < K for v in d):
            raise CliError(f"design {'-'.join(map(str, d))} uses a cell index outside 0..{K - 1}")
    return designs


def _raw_designs(cfg, out: Path, t: int) -> list[tuple]:
    from .dataset import decode
    if cfg["design"]:
        return [decode(cfg["design"])]
    if cfg["designs"]:
        return [decode(d) for d in cfg["designs"].split(",") if d]
    cases = out / "cases.csv"
    if cases.exists():
        import csv
        with open(cases, newline="") as fh:
            found = [decode(r["design"]) for r in csv.DictReader(fh) if r["design"]]
        if found:
            return found
    from .archsearch import exact_design
    return [exact_design(_library(cfg), t)]


def cmd_blend(cfg, out: Path) -> None:
    import csv
    from .dataset import encode
    from .archsearch import exact_design
    from .imaging import blend, product_table, psnr, sweep_psnr, write_pgm
    from .multiplier import evaluate
    if cfg["bits"] != 8:
        raise CliError("blend needs an 8-bit multiplier (bits = 8)")
    a, b = _image(cfg["image_a"]), _image(cfg["image_b"])
    oracle = _oracle(cfg)
    designs = _design_list(cfg, out, oracle.t, oracle.library.K)
    exact = blend(a, b, cfg["alpha"])
    write_pgm(out / "blend_exact.pgm", exact)
    outputs = ["blend.csv", "blend_exact.pgm"]
    with open(out / "blend.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "design", "mred", "nmed", "psnr_db", "sweep_psnr_db"])
        base = exact_design(oracle.library, oracle.t)
        for i, d in [("base", base)] + list(enumerate(designs, 1)):
            net = oracle.netlist(d)
            table = product_table(lambda x, y: evaluate(net, x, y))
            img = blend(a, b, cfg["alpha"], table)
            name = f"blend_{i}.pgm"
            write_pgm(out / name, img)
            outputs.append(name)
            err = oracle.error(d)
            p, sp = psnr(exact, img), sweep_psnr(a, b, table)
            w.writerow([i, encode(d), repr(err.mred), repr(err.nmed),
                        *("inf" if math.isinf(v) else repr(v) for v in (p, sp))])
    _write_manifest(out, "blend", cfg, outputs)
    _summary("blend", designs=len(designs) + 1, alpha=cfg["alpha"])


def cmd_eval(cfg, out: Path) -> None:
    import csv
    from .dataset import encode
    oracle = _oracle(cfg)
    designs = _design_list(cfg, out, oracle.t, oracle.library.K)
    with open(out / "eval.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["design", "mred", "nmed", "max_ed", "inputs", "delay_ps", "power_uw", "area_um2",
                    "pdp_fj"])
        for d in designs:
            e, p = oracle.error(d), oracle.ppa(d)
            w.writerow([encode(d), repr(e.mred), repr(e.nmed), e.max_ed, e.inputs, repr(p.delay),
                        repr(p.power), repr(p.area), repr(p.pdp)])
    _write_manifest(out, "eval", cfg, ["eval.csv"])
    e = oracle.error(designs[-1])
    _summary("eval", designs=len(designs), mred=f"{e.mred:.6g}", nmed=f"{e.nmed:.6g}")


COMMANDS = {
    "gen-dataset": cmd_gen_dataset,
    "train": cmd_train,
    "search-arch": cmd_search_arch,
    "size-cells": cmd_size_cells,
    "sram": cmd_sram,
    "blend": cmd_blend,
    "eval": cmd_eval,
}


def _common_flags(top: bool) -> argparse.ArgumentParser:
    # the subcommand copy suppresses defaults so flags given before it survive
    dflt = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=dflt(None), help="key = value configuration file")
    common.add_argument("--seed", type=int, default=dflt(0))
    common.add_argument("--out-dir", default=dflt("runs"), help="directory for CSV artifacts")
    common.add_argument("--exact-verify", action="store_true", default=dflt(False),
                        help="log oracle re-checks next to surrogate values")
    for key, (typ, _) in CONFIG_KEYS.items():
        common.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ, default=dflt(None))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approx_dcim", parents=[_common_flags(True)],
                                     description="Approximate multiplier and SRAM co-optimization")
    sub = parser.add_subparsers(dest="command", required=True)
    sub_common = _common_flags(False)
    for name in COMMANDS:
        sub.add_parser(name, parents=[sub_common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        out = Path(args.out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(f"cannot create output directory {out}: {exc.strerror}") from None
        np.seterr(over="ignore")
        COMMANDS[args.command](cfg, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
