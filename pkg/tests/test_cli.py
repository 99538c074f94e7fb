import csv
import json
import subprocess
import sys

import pytest

from approx_dcim.cli import CliError, main, parse_config
from approx_dcim.sram import enumerate_configs

SMALL = ["--bits", "5", "--seed", "3"]


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip().splitlines(), err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _summary(lines):
    last = lines[-1].split()
    return dict(p.split("=", 1) for p in last)


def test_parse_config():
    cfg = parse_config("# run\nbits = 6\nnmed-budget=0.01  # inline\n\noptimizer = moead\n")
    assert cfg == {"bits": 6, "nmed_budget": 0.01, "optimizer": "moead"}


@pytest.mark.parametrize("text, msg", [
    ("bits 6", "expected key = value"),
    ("colour = red", "unknown key"),
    ("bits = six", "expects int"),
])
def test_parse_config_errors_carry_line(text, msg):
    with pytest.raises(CliError, match=msg) as exc:
        parse_config("\n" + text, "run.cfg")
    assert "run.cfg:2" in str(exc.value)


def test_eval_exact_design(tmp_path, capsys):
    code, lines, _ = _run(capsys, "eval", *SMALL, "--design", "0-0", "--out-dir", str(tmp_path))
    assert code == 0
    s = _summary(lines)
    assert s["command"] == "eval" and float(s["mred"]) == 0.0
    row = _rows(tmp_path / "eval.csv")[0]
    assert float(row["mred"]) == 0 and float(row["nmed"]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "eval" and man["seed"] == 3 and man["config"]["bits"] == 5


def test_bad_design_is_reported(tmp_path, capsys):
    code, _, err = _run(capsys, "eval", *SMALL, "--design", "1-2-3", "--out-dir", str(tmp_path))
    assert code == 2 and "slots" in err
    code, _, err = _run(capsys, "eval", *SMALL, "--design", "1-99", "--out-dir", str(tmp_path))
    assert code == 2 and "outside" in err


def test_missing_files_are_reported(tmp_path, capsys):
    code, _, err = _run(capsys, "train", *SMALL, "--out-dir", str(tmp_path))
    assert code == 2 and "dataset not found" in err
    code, _, err = _run(capsys, "eval", "--config", str(tmp_path / "nope.cfg"),
                        "--out-dir", str(tmp_path))
    assert code == 2 and "nope.cfg" in err
    code, _, err = _run(capsys, "eval", "--library", str(tmp_path / "x.lib"),
                        "--out-dir", str(tmp_path))
    assert code == 2 and "x.lib" in err


def test_negative_budget_rejected(tmp_path, capsys):
    code, _, err = _run(capsys, "search-arch", *SMALL, "--nmed-budget", "-1",
                        "--out-dir", str(tmp_path))
    assert code == 2 and "non-negative" in err


def test_unknown_flag_prints_usage(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "approx_dcim", "eval", "--frobnicate"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode != 0
    assert "usage:" in proc.stderr


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bits = 5\ndesign = 1-1\n")
    code, lines, _ = _run(capsys, "eval", "--config", str(cfg), "--out-dir", str(tmp_path))
    assert code == 0 and _rows(tmp_path / "eval.csv")[0]["design"] == "1-1"
    code, lines, _ = _run(capsys, "eval", "--config", str(cfg), "--design", "0-0",
                          "--out-dir", str(tmp_path))
    assert _rows(tmp_path / "eval.csv")[0]["design"] == "0-0"


def test_global_flags_before_subcommand(tmp_path, capsys):
    code, lines, _ = _run(capsys, "--out-dir", str(tmp_path), "--bits", "5", "eval")
    assert code == 0 and (tmp_path / "eval.csv").exists()


def _pipeline(out, capsys):
    common = [*SMALL, "--out-dir", str(out)]
    assert _run(capsys, "gen-dataset", *common, "--count", "40")[0] == 0
    assert _run(capsys, "train", *common, "--epochs", "3", "--hidden", "24")[0] == 0
    code, lines, _ = _run(capsys, "search-arch", *common, "--pop", "8", "--gens", "3",
                          "--budgets", "0.01,0.002", "--exact-verify")
    assert code == 0
    return lines


def test_pipeline_artifacts(tmp_path, capsys):
    lines = _pipeline(tmp_path, capsys)
    s = _summary(lines)
    assert s["command"] == "search-arch" and s["evaluator"] == "surrogate"
    assert s["cases"] == "3"
    ds = _rows(tmp_path / "dataset.csv")
    assert len(ds) == 40
    assert {r["split"] for r in ds} == {"train", "val", "test"}
    metrics = _rows(tmp_path / "metrics.csv")
    assert {r["split"] for r in metrics} >= {"val", "test"}
    cases = _rows(tmp_path / "cases.csv")
    assert len(cases) == 3
    budget = 1.0
    for r in _rows(tmp_path / "front.csv"):
        assert float(r["nmed"]) <= budget
    for r in cases:
        if r["feasible"] == "1":
            assert float(r["nmed"]) <= float(r["nmed_budget"])
    verify = _rows(tmp_path / "verify.csv")
    assert all(r["oracle_mred"] for r in verify)


def test_pipeline_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    _pipeline(a, capsys)
    _pipeline(b, capsys)
    for name in ("dataset.csv", "metrics.csv", "front.csv", "cases.csv", "verify.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_oracle_search_without_model(tmp_path, capsys):
    code, lines, _ = _run(capsys, "search-arch", *SMALL, "--out-dir", str(tmp_path),
                          "--pop", "8", "--gens", "2", "--budgets", "")
    assert code == 0 and _summary(lines)["evaluator"] == "oracle"
    assert not (tmp_path / "verify.csv").exists()


def test_blend_exact_base(tmp_path, capsys):
    code, lines, _ = _run(capsys, "blend", "--out-dir", str(tmp_path),
                          "--designs", "0-0-0-0-0-0-0-0-0,1-1-1-1-1-1-1-1-1")
    assert code == 0
    rows = _rows(tmp_path / "blend.csv")
    assert [r["case"] for r in rows] == ["base", "1", "2"]
    assert rows[0]["psnr_db"] == "inf" and rows[1]["psnr_db"] == "inf"
    assert float(rows[2]["sweep_psnr_db"]) < float("inf")
    assert (tmp_path / "blend_exact.pgm").read_bytes() == (tmp_path / "blend_base.pgm").read_bytes()


def test_blend_needs_eight_bits(tmp_path, capsys):
    code, _, err = _run(capsys, "blend", *SMALL, "--out-dir", str(tmp_path))
    assert code == 2 and "8-bit" in err


def test_sram_row_count(tmp_path, capsys):
    code, lines, _ = _run(capsys, "sram", "--out-dir", str(tmp_path))
    assert code == 0
    rows = _rows(tmp_path / "sram.csv")
    assert len(rows) == len(enumerate_configs(32768)) == 207
    assert _summary(lines)["rows"] == "207"


def test_size_cells_one_chain(tmp_path, capsys):
    code, lines, _ = _run(capsys, "size-cells", "--cells", "exact42", "--pop", "8", "--gens", "3",
                          "--out-dir", str(tmp_path))
    assert code == 0
    rows = _rows(tmp_path / "sizing.csv")
    assert rows[0]["kind"] == "reference"
    assert all(r["feasible"] == "1" for r in rows if r["kind"] == "front")
    code, _, err = _run(capsys, "size-cells", "--cells", "nope", "--out-dir", str(tmp_path))
    assert code == 2 and "nope" in err
