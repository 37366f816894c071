import functools
import json
import os
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from alloyqg import cli
from alloyqg.assembly import solve_spectrum
from alloyqg.cli import parse_lambda_grid, run_cli
from alloyqg.io import (
    RunManifest,
    edge_label,
    fmt,
    read_csv,
    scatter_svg,
    step_plot_svg,
    write_csv,
)

HERE = Path(__file__).parent
DATA, GOLDEN = HERE / "data", HERE / "golden"
Y_GRAPH, DEFAULT = str(DATA / "y_graph.json"), str(DATA / "default.json")


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    return run_cli([*argv, "--out", str(out)]), out


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(np.float64(2.0)) == "2"
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(7)) == "7"
    assert fmt(((1, 2), 0)) == "1;2/0"
    assert edge_label("e1") == "e1"


def test_csv_roundtrip_exact(tmp_path):
    vals = np.random.default_rng(0).normal(size=20)
    write_csv(tmp_path / "x.csv", ("i", "v"), list(enumerate(vals)))
    back = np.array([float(r["v"]) for r in read_csv(tmp_path / "x.csv")])
    assert np.array_equal(back, vals)


def test_svg_wellformed():
    text = step_plot_svg([("a", [0, 1, 2], [0, 1, 1]), ("b", [0, 1, 2], [0, 0, 2])], "t")
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2
    text = scatter_svg([("s", [0.1, 0.2], [1.0, float("nan")], [0.1, 0.1])], "t", "x", "y")
    assert len(ET.fromstring(text).findall("{http://www.w3.org/2000/svg}circle")) == 1


def test_lambda_grid_syntax():
    assert np.array_equal(parse_lambda_grid("1:40:40"), np.arange(1.0, 41.0))
    for bad in ("1:40", "a:b:c", "5:1:3", "1:2:0"):
        with pytest.raises(cli.UsageError):
            parse_lambda_grid(bad)


def test_spectrum_contract_and_golden(tmp_path):
    code, out = _run(tmp_path, "s", "spectrum", "--graph", Y_GRAPH, "--alloy", DEFAULT, "--seed", "7", "--k", "10")
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 10 and list(rows[0]) == ["n", "lambda", "residual"]
    assert (out / "spectrum.csv").read_bytes() == (GOLDEN / "spectrum_y_seed7_k10.csv").read_bytes()
    m = RunManifest.load(out / "manifest.json")
    assert m.master_seed == 7 and m.subcommand == "spectrum" and m.outputs == ["spectrum.csv"]


def test_spectrum_vectors(tmp_path):
    code, out = _run(tmp_path, "s", "spectrum", "--graph", Y_GRAPH, "--k", "2", "--vectors")
    assert code == 0
    rows = read_csv(out / "eigenvectors.csv")
    assert {r["edge"] for r in rows} == {"e1", "e2", "e3"}


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("QG_SEED", "7")
    code, out = _run(tmp_path, "s", "spectrum", "--graph", Y_GRAPH, "--alloy", DEFAULT, "--k", "10")
    assert code == 0
    assert (out / "spectrum.csv").read_bytes() == (GOLDEN / "spectrum_y_seed7_k10.csv").read_bytes()
    monkeypatch.setenv("QG_SEED", "x")
    assert _run(tmp_path, "t", "spectrum", "--graph", Y_GRAPH, "--k", "3")[0] == 2


def test_spectrum_exit_codes(tmp_path, monkeypatch, capsys):
    assert _run(tmp_path, "a", "spectrum", "--graph", str(DATA / "missing.json"), "--k", "3")[0] == 2
    assert "--graph" in capsys.readouterr().err
    assert _run(tmp_path, "b", "spectrum", "--graph", Y_GRAPH)[0] == 2
    assert run_cli(["nonsense"]) == 2
    assert run_cli([]) == 2
    monkeypatch.setattr(cli, "solve_spectrum", functools.partial(solve_spectrum, tol=1e-300))
    assert _run(tmp_path, "c", "spectrum", "--graph", Y_GRAPH, "--k", "3")[0] == 1


def test_ids_free_golden_matches_floor_formula(tmp_path):
    code, out = _run(tmp_path, "i", "ids", "--nu", "1", "--sizes", "10,20,40", "--lambda-grid", "1:40:40", "--free")
    assert code == 0
    assert (out / "ids.csv").read_bytes() == (GOLDEN / "ids_free_nu1.csv").read_bytes()
    assert (out / "convergence.csv").read_bytes() == (GOLDEN / "convergence_free_nu1.csv").read_bytes()
    for r in read_csv(GOLDEN / "ids_free_nu1.csv"):
        l, lam = int(r["l"]), float(r["lambda"])
        q = (l - 2) * np.sqrt(lam) / np.pi
        assert int(r["F_l"]) <= int(np.floor(q))
        if abs(q - round(q)) > 1e-3 * q:  # discrete eigenvalues sit slightly above the exact ones
            assert int(r["F_l"]) == int(np.floor(q))
    checks = read_csv(out / "ids_checks.csv")
    assert {c["check"] for c in checks} == {"counting_bound", "equivariance", "superadditivity"}
    assert all(c["status"] in ("pass", "skipped") for c in checks)


def test_ids_exit_codes(tmp_path, monkeypatch):
    base = ["ids", "--nu", "1", "--sizes", "6,8", "--lambda-grid", "1:20:5", "--partitions", "1"]
    assert _run(tmp_path, "a", *base, "--free", "--alloy", DEFAULT)[0] == 2
    assert _run(tmp_path, "b", "ids", "--sizes", "2,8", "--lambda-grid", "1:2:2")[0] == 2
    monkeypatch.setattr(cli, "counting_bound", lambda *a: -1)
    code, out = _run(tmp_path, "c", *base)
    assert code == 1
    assert any(c["status"] == "fail" for c in read_csv(out / "ids_checks.csv"))


def test_props_modes(tmp_path):
    code, out = _run(tmp_path, "c", "props", "--corpus", "3", "--k", "10", "--k-interlace", "8")
    assert code == 0
    assert read_csv(out / "bracketing.csv")[0]["instance"] == "corpus0"
    code, out = _run(tmp_path, "h", "props", "--chain", "2,4", "--alloy", str(DATA / "half_indicator.json"),
                     "--interval", "0:30")
    assert code == 0
    assert {"hf.csv", "hf_sums.csv", "uc.csv", "uc_uniformity.csv"} <= set(os.listdir(out))
    code, out = _run(tmp_path, "g", "props", "--graph", Y_GRAPH, "--suites", "bracketing", "--targets", "all")
    assert code == 0
    assert {r["target"] for r in read_csv(out / "bracketing.csv")} >= {"a", "b", "c", "d", "e1"}


def test_props_exit_codes(tmp_path):
    assert _run(tmp_path, "a", "props", "--corpus", "1", "--suites", "nope")[0] == 2
    code, out = _run(tmp_path, "b", "props", "--chain", "3", "--suites", "hf", "--hf-tol", "1e-300")
    assert code == 1


def test_wegner_exit_codes(tmp_path, monkeypatch):
    base = ["wegner", "--sizes", "4", "--eps", "0.5,1", "--lambda", "10", "--samples", "100"]
    code, out = _run(tmp_path, "a", *base, "--svg")
    assert code == 0
    assert len(read_csv(out / "wegner.csv")) == 2
    ET.parse(out / "wegner.svg")
    assert _run(tmp_path, "b", *base[:-1], "50")[0] == 2
    assert _run(tmp_path, "c", "wegner", "--sizes", "4", "--eps", "0", "--lambda", "10")[0] == 2
    real = cli.wegner_scan

    def broken(exp, threads=1):
        rep = real(exp, threads)
        rep.monotone_in_eps = False
        return rep

    monkeypatch.setattr(cli, "wegner_scan", broken)
    assert _run(tmp_path, "d", *base)[0] == 1


def test_replay_reproduces(tmp_path):
    code, out = _run(tmp_path, "w", "wegner", "--sizes", "4,6", "--eps", "0.5,1", "--lambda", "10",
                     "--samples", "100", "--seed", "5")
    assert code == 0
    assert run_cli(["replay", "--manifest", str(out / "manifest.json"), "--out", str(tmp_path / "r"),
                    "--threads", "3"]) == 0
    assert (out / "wegner.csv").read_bytes() == (tmp_path / "r" / "wegner.csv").read_bytes()
    a = json.loads((out / "manifest.json").read_text())
    b = json.loads((tmp_path / "r" / "manifest.json").read_text())
    assert a["config_hash"] == b["config_hash"]
