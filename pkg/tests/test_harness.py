import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from inexact_sesop.core import TRACE_COLUMNS
from inexact_sesop.harness.cli import main
from inexact_sesop.harness.config import ConfigError, RunConfig, SweepConfig
from inexact_sesop.harness.svg import Series, line_chart


def small_config(tmp_path, name="run", **over):
    cfg = {
        "problem": {"type": "quadratic", "n": 15, "seed": 1},
        "oracle": {"delta1": 1e-3, "seed": 0},
        "solver": {"type": "sesop", "iterations": 60, "subsolver": "exact", "delta4": 0.0},
        "output": {"trace_path": str(tmp_path / f"{name}.csv"),
                   "report_path": str(tmp_path / f"{name}.json")},
    }
    for section, fields in over.items():
        cfg[section].update(fields)
    path = tmp_path / f"{name}.config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


def test_run_writes_trace_and_report(tmp_path):
    path, cfg = small_config(tmp_path)
    assert main(["run", str(path)]) == 0
    lines = open(cfg["output"]["trace_path"]).read().splitlines()
    assert lines[0] == "k,f_gap,grad_norm,g_norm,w_k,W_k,ip_d2,ip_d1,sub_gap,dist_to_opt"
    assert lines[0].split(",") == list(TRACE_COLUMNS)
    assert len(lines) == 62
    reports = json.load(open(cfg["output"]["report_path"]))
    names = {r["name"] for r in reports}
    assert {"lemma1", "theorem1"} <= names
    assert all(set(r) >= {"name", "passed", "worst_k", "margin"} for r in reports)


def test_run_is_byte_identical(tmp_path):
    a, ca = small_config(tmp_path, "a")
    b, cb = small_config(tmp_path, "b")
    assert main(["run", str(a)]) == 0 and main(["run", str(b)]) == 0
    assert open(ca["output"]["trace_path"], "rb").read() == open(cb["output"]["trace_path"], "rb").read()


def test_iterative_and_stm_runs(tmp_path):
    path, cfg = small_config(tmp_path, "it", solver={"subsolver": "iterative", "delta4": 1e-5})
    assert main(["run", str(path)]) == 0
    names = {r["name"] for r in json.load(open(cfg["output"]["report_path"]))}
    assert {"lemma5", "theorem2"} <= names
    path, cfg = small_config(tmp_path, "stm", solver={"type": "stm"})
    assert main(["run", str(path)]) == 0
    row = open(cfg["output"]["trace_path"]).read().splitlines()[2].split(",")
    assert row[4] == "" and row[5] == ""


@pytest.mark.parametrize("bad", [
    {"problem": {"n": 0}},
    {"oracle": {"delta1": -1.0}},
    {"solver": {"iterations": 0}},
    {"solver": {"subsolver": "newton"}},
])
def test_invalid_config_exits_2(tmp_path, bad):
    path, _ = small_config(tmp_path, **bad)
    assert main(["run", str(path)]) == 2


def test_unknown_field_and_bad_json(tmp_path):
    path, cfg = small_config(tmp_path)
    cfg["solver"]["momentum"] = 0.9
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path)]) == 2
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_config_roundtrip():
    cfg = RunConfig.from_dict({"problem": {"type": "quadratic", "n": 4, "seed": 2},
                               "solver": {"type": "sesop", "iterations": 3}})
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"problem": {"type": "quadratic", "n": 4}, "extra": {}})


def test_sweep_expansion():
    base = RunConfig.from_dict({"problem": {"type": "quadratic", "n": 4, "seed": 0},
                                "solver": {"type": "sesop", "iterations": 3}})
    runs = SweepConfig(base, "delta1", [0.0, 0.1], seeds=[0, 1]).expand()
    assert len(runs) == 4
    assert sorted({(r.oracle.delta1, r.problem.seed) for r in runs}) == [(0.0, 0), (0.0, 1), (0.1, 0), (0.1, 1)]


def test_usage_errors_exit_2(tmp_path):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["plot", "--out", str(tmp_path / "x.svg")]) == 2
    assert main(["experiment", "7", "--out-dir", str(tmp_path)]) == 2
    assert main(["plot", str(tmp_path / "none.csv"), "--out", str(tmp_path / "x.svg")]) == 2


def test_generate(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["generate", "--n", "10", "--seed", "3", "--out", str(out)]) == 0
    info = json.load(open(out))
    assert info["n"] == 10 and info["L"] > 0 and info["f_star"] < 0
    assert main(["generate", "--n", "0"]) == 2


def _svg(path):
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    return root


def test_plot_two_traces_with_bound(tmp_path):
    a, ca = small_config(tmp_path, "a")
    b, cb = small_config(tmp_path, "b", oracle={"delta1": 1e-1})
    main(["run", str(a)])
    main(["run", str(b)])
    out = tmp_path / "fig.svg"
    rc = main(["plot", ca["output"]["trace_path"], cb["output"]["trace_path"],
               "--out", str(out), "--logy", "--bound", "theorem1"])
    assert rc == 0
    text = out.read_text()
    _svg(out)
    assert text.count("<polyline") == 4
    assert "theorem1 bound (a)" in text and ">b<" in text


def test_plot_bound_violation_exits_1(tmp_path):
    a, ca = small_config(tmp_path, "a")
    main(["run", str(a)])
    out = tmp_path / "fig.svg"
    args = ["plot", ca["output"]["trace_path"], "--out", str(out), "--bound", "theorem1:L=1e-9,R=1e-9"]
    assert main(args) == 1
    assert main(args + ["--force"]) == 0


def test_line_chart_handles_nonpositive_on_log_axis(tmp_path):
    svg = line_chart([Series("s", np.arange(5), np.array([1.0, 0.0, np.nan, 1e-3, 1e-5]))],
                     "t", "k", "y", logy=True)
    path = tmp_path / "c.svg"
    path.write_text(svg)
    _svg(path)


def _runs_config(tmp_path):
    runs = []
    for sub, d4 in (("exact", 0.0), ("iterative", 1e-5)):
        runs.append({"problem": {"type": "quadratic", "n": 12, "seed": 0},
                     "oracle": {"delta1": 1e-3, "seed": 0},
                     "solver": {"type": "sesop", "iterations": 40, "subsolver": sub, "delta4": d4}})
    path = tmp_path / "runs.json"
    path.write_text(json.dumps(runs))
    return path


def test_verify_pass_and_sabotage(tmp_path):
    path = _runs_config(tmp_path)
    out = tmp_path / "verify.json"
    assert main(["verify", "--runs-config", str(path), "--out", str(out)]) == 0
    rep = json.load(open(out))
    assert rep["passed"] and not rep["appendixA_full_range"]["passed"]
    assert main(["verify", "--runs-config", str(path), "--sabotage"]) == 1


def test_verify_bad_runs_config(tmp_path):
    path = tmp_path / "runs.json"
    path.write_text(json.dumps({"not": "a list"}))
    assert main(["verify", "--runs-config", str(path)]) == 2


def test_divergence_exit_code(tmp_path):
    path, _ = small_config(tmp_path, "div", oracle={"delta1": 1e300})
    assert main(["run", str(path)]) == 3
