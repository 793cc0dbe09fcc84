"""Sweeps behind the three numerical experiments, at desk or full scale."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass

import numpy as np

from .. import theory
from .config import ProblemConfig, OracleConfig, RunConfig, SolverConfig, SweepConfig
from .runner import RunResult, execute_many, write_outputs
from .svg import PALETTE, Series, line_chart

log = logging.getLogger(__name__)

EXP1_DELTA1 = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
EXP2_DELTA4 = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2]
EXP3_DELTA1 = [1e-5, 1e-3, 1e-1]
EXP3_DELTA4 = [1e-7, 1e-5, 1e-4, 1e-3]


@dataclass(frozen=True)
class Scale:
    n: int
    iterations: int
    seeds: tuple


SCALES = {
    "paper": Scale(n=500, iterations=100_000, seeds=(0, 1, 2, 3, 4)),
    "desk": Scale(n=100, iterations=10_000, seeds=(0, 1, 2, 3, 4)),
}


def base_config(scale: Scale, solver="sesop", subsolver="exact") -> RunConfig:
    return RunConfig(
        problem=ProblemConfig(type="quadratic", n=scale.n),
        oracle=OracleConfig(),
        solver=SolverConfig(type=solver, iterations=scale.iterations, subsolver=subsolver),
    )


def _tag(r: RunResult) -> str:
    c = r.config
    s = f"{c.solver.type}_d1={c.oracle.delta1:g}"
    if c.solver.type == "sesop" and c.solver.subsolver == "iterative":
        s += f"_d4={c.solver.delta4:g}"
    return s + f"_seed={c.problem.seed}"


def _write_run(r: RunResult, out_dir):
    tag = _tag(r)
    write_outputs(r, os.path.join(out_dir, tag + ".csv"), os.path.join(out_dir, tag + ".report.json"))


SUMMARY_COLUMNS = ["solver", "subsolver", "delta1", "delta4", "seed", "n", "T", "L", "R",
                   "final_gap", "min_gap", "bound_at_T", "checks_passed"]


def _summary_row(r: RunResult) -> dict:
    c, m = r.config, r.trace.meta
    T = len(r.trace) - 1
    bound = ""
    if c.solver.type == "sesop" and m.get("R") is not None:
        p = theory.BoundParams(L=m["L"], R=m["R"], delta1=c.oracle.delta1)
        bound = repr(theory.theorem1_bound(p, T))
    return {
        "solver": c.solver.type, "subsolver": c.solver.subsolver if c.solver.type == "sesop" else "",
        "delta1": repr(c.oracle.delta1), "delta4": repr(c.solver.delta4),
        "seed": c.problem.seed, "n": c.problem.n, "T": T,
        "L": repr(m["L"]), "R": repr(m["R"]),
        "final_gap": repr(r.final_gap()), "min_gap": repr(r.min_gap()),
        "bound_at_T": bound, "checks_passed": int(r.mandatory_passed),
    }


def write_summary(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in results:
            w.writerow(_summary_row(r))


def _convergence_series(results, label_fn, with_bound=False):
    series = []
    for i, r in enumerate(results):
        gap = r.trace.column("f_gap")
        k = np.arange(len(gap))
        color = PALETTE[i % len(PALETTE)]
        series.append(Series(label_fn(r), k[1:], gap[1:], color=color))
        if with_bound:
            m = r.trace.meta
            p = theory.BoundParams(L=m["L"], R=m["R"], delta1=r.config.oracle.delta1)
            series.append(Series("bound " + label_fn(r), k[1:], theory.theorem1_bound(p, k[1:]),
                                 dashed=True, color=color))
    return series


def _median_by(results, key):
    groups = {}
    for r in results:
        groups.setdefault(key(r), []).append(r.min_gap())
    xs = sorted(groups)
    return np.array(xs), np.array([np.median(groups[x]) for x in xs])


class VerificationError(RuntimeError):
    def __init__(self, msg, failures):
        super().__init__(msg)
        self.failures = failures


def _gate(results, force):
    """Refuse to plot runs whose mandatory checks failed, unless forced."""
    bad = [r for r in results if not r.mandatory_passed]
    if bad and not force:
        raise VerificationError(f"{len(bad)} run(s) failed mandatory checks", bad)
    for r in bad:
        log.warning("plotting run %s despite failed checks", _tag(r))


def experiment1(scale: Scale, out_dir, parallelism=1, force=False):
    """Gradient noise only: exact subproblems, delta1 swept."""
    sweep = SweepConfig(base_config(scale), "delta1", EXP1_DELTA1, list(scale.seeds), parallelism)
    results = execute_many(sweep.expand(), parallelism)
    for r in results:
        _write_run(r, out_dir)
    write_summary(results, os.path.join(out_dir, "exp1_summary.csv"))
    _gate(results, force)
    first = [r for r in results if r.config.problem.seed == scale.seeds[0]]
    series = _convergence_series(first, lambda r: f"d1={r.config.oracle.delta1:g}", with_bound=True)
    m = first[0].trace.meta
    k = np.arange(1, scale.iterations + 1)
    series.append(Series("L R^2 / k^2", k, m["L"] * m["R"] ** 2 / k ** 2.0, dashed=True, color="black"))
    _save(out_dir, "exp1_convergence.svg", line_chart(
        series, f"Exact subproblems, seed {scale.seeds[0]}", "k", "f(x_k) - f*", logy=True))
    xs, ys = _median_by(results, lambda r: r.config.oracle.delta1)
    _save(out_dir, "exp1_min_vs_delta1.svg", line_chart(
        [Series("median min gap", xs, ys, markers=True)],
        "Minimal gap vs gradient noise", "delta1", "min f - f*", logy=True, logx=True))
    return results


def experiment2(scale: Scale, out_dir, parallelism=1, force=False, delta1=1e-3):
    """Fixed gradient noise, inexact subproblems with delta4 swept."""
    base = base_config(scale, subsolver="iterative")
    base.oracle.delta1 = delta1
    sweep = SweepConfig(base, "delta4", EXP2_DELTA4, list(scale.seeds), parallelism)
    results = execute_many(sweep.expand(), parallelism)
    for r in results:
        _write_run(r, out_dir)
    write_summary(results, os.path.join(out_dir, "exp2_summary.csv"))
    _gate(results, force)
    first = [r for r in results if r.config.problem.seed == scale.seeds[0]]
    series = _convergence_series(first, lambda r: f"d4={r.config.solver.delta4:g}")
    m = first[0].trace.meta
    k = np.arange(1, scale.iterations + 1)
    series.append(Series("L R^2 / k^2", k, m["L"] * m["R"] ** 2 / k ** 2.0, dashed=True, color="black"))
    _save(out_dir, "exp2_convergence.svg", line_chart(
        series, f"Inexact subproblems, d1={delta1:g}, seed {scale.seeds[0]}", "k", "f(x_k) - f*", logy=True))
    xs, ys = _median_by(results, lambda r: r.config.solver.delta4)
    _save(out_dir, "exp2_min_vs_delta4.svg", line_chart(
        [Series("median min gap", xs, ys, markers=True)],
        "Minimal gap vs subproblem accuracy", "delta4", "min f - f*", logy=True, logx=True))
    return results


COMPARISON_COLUMNS = ["panel", "delta1", "delta4", "seed", "sesop_final", "stm_final", "sesop_better",
                      "crossover_k"]


def _crossover(sesop: RunResult, stm: RunResult):
    """First k after which STM's gap stays below the subspace method's, if any."""
    a = sesop.trace.column("f_gap")
    b = stm.trace.column("f_gap")
    worse = a > b
    if not worse[-1]:
        return ""
    i = len(worse) - 1
    while i > 0 and worse[i - 1]:
        i -= 1
    return i


def experiment3(scale: Scale, out_dir, parallelism=1, force=False, delta1_inexact=1e-3):
    """Subspace method against similar triangles, exact and inexact subproblems."""
    cfgs = []
    for d1 in EXP3_DELTA1:
        for s in scale.seeds:
            for solver in ("sesop", "stm"):
                c = base_config(scale, solver=solver).replace("seed", s).replace("delta1", d1)
                cfgs.append(("exact", c))
    for d4 in EXP3_DELTA4:
        for s in scale.seeds:
            c = base_config(scale, subsolver="iterative").replace("seed", s)
            c = c.replace("delta1", delta1_inexact).replace("delta4", d4)
            cfgs.append(("inexact", c))
    results = execute_many([c for _, c in cfgs], parallelism)
    for r in results:
        _write_run(r, out_dir)
    write_summary(results, os.path.join(out_dir, "exp3_summary.csv"))

    stm = {(r.config.oracle.delta1, r.config.problem.seed): r
           for r in results if r.config.solver.type == "stm"}
    rows = []
    for (panel, c), r in zip(cfgs, results):
        if c.solver.type != "sesop":
            continue
        ref = stm.get((c.oracle.delta1, c.problem.seed))
        if ref is None:
            continue
        rows.append({"panel": panel, "delta1": repr(c.oracle.delta1),
                     "delta4": repr(c.solver.delta4) if panel == "inexact" else "",
                     "seed": c.problem.seed, "sesop_final": repr(r.final_gap()),
                     "stm_final": repr(ref.final_gap()),
                     "sesop_better": int(r.final_gap() <= ref.final_gap()),
                     "crossover_k": _crossover(r, ref)})
    with open(os.path.join(out_dir, "exp3_comparison.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, COMPARISON_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _gate(results, force)

    s0 = scale.seeds[0]
    for d1 in EXP3_DELTA1:
        pair = [r for r in results if r.config.problem.seed == s0 and r.config.oracle.delta1 == d1
                and (r.config.solver.type == "stm" or r.config.solver.subsolver == "exact")]
        _save(out_dir, f"exp3_d1={d1:g}.svg", line_chart(
            _convergence_series(pair, lambda r: r.config.solver.type.upper()),
            f"SESOP vs STM, d1={d1:g}, seed {s0}", "k", "f(x_k) - f*", logy=True))
    panel = [r for r in results if r.config.problem.seed == s0 and r.config.solver.subsolver == "iterative"
             and r.config.solver.type == "sesop"]
    panel.append(stm[(delta1_inexact, s0)])
    _save(out_dir, "exp3_inexact.svg", line_chart(
        _convergence_series(panel, lambda r: "STM" if r.config.solver.type == "stm"
                            else f"SESOP d4={r.config.solver.delta4:g}"),
        f"Inexact subproblems vs STM, d1={delta1_inexact:g}", "k", "f(x_k) - f*", logy=True))
    return results, rows


def _save(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


EXPERIMENTS = {1: experiment1, 2: experiment2, 3: experiment3}


def run_experiment(exp_id: int, scale: str, out_dir, parallelism: int = 1, force: bool = False):
    if exp_id not in EXPERIMENTS:
        raise KeyError(exp_id)
    os.makedirs(out_dir, exist_ok=True)
    return EXPERIMENTS[exp_id](SCALES[scale], out_dir, parallelism, force)
