"""Command line front end: generate, run, experiment, verify, plot."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .. import theory
from ..core import BoundParams, TraceFormatError
from ..problems import make_problem
from ..solvers import AccuracyNotReachedError, DivergenceError
from .config import ConfigError, RunConfig
from .experiments import SCALES, VerificationError, run_experiment
from .runner import applicable_checks, build, execute, load_trace, write_outputs
from .svg import Series, line_chart

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("inexact_sesop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def cmd_generate(args):
    try:
        p = make_problem({"type": args.type, "n": args.n, "seed": args.seed})
    except ValueError as e:
        raise UsageError(str(e)) from None
    info = dict(p.identity(), L=p.L, f_star=p.f_star,
                R_from_origin=float(np.linalg.norm(p.x_star)) if p.x_star is not None else None)
    text = json.dumps(info, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args):
    cfg = RunConfig.load(args.config)
    if args.trace:
        cfg.output.trace_path = args.trace
    if args.report:
        cfg.output.report_path = args.report
    try:
        res = execute(cfg)
    except DivergenceError as e:
        if e.trace is not None and cfg.output.trace_path:
            e.trace.write_csv(cfg.output.trace_path)
        print(f"diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except AccuracyNotReachedError as e:
        print(f"subproblem accuracy not reached: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    write_outputs(res)
    for r in res.reports:
        print(json.dumps(r.to_dict()))
    return EXIT_OK if res.mandatory_passed else EXIT_VERIFY


def cmd_experiment(args):
    try:
        results = run_experiment(args.id, args.scale, args.out_dir, args.jobs, args.force)
    except VerificationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VERIFY
    if args.id == 3:
        _, rows = results
        print("panel,delta1,delta4,seed,sesop_final,stm_final,sesop_better,crossover_k")
        for row in rows:
            print(",".join(str(v) for v in row.values()))
    print(f"wrote outputs to {args.out_dir}")
    return EXIT_OK


def default_verify_matrix(iterations: int) -> list:
    cfgs = []
    for n in (20, 100):
        for d1 in (0.0, 1e-3, 1e-1):
            for seed in (0, 1, 2):
                cfgs.append(RunConfig.from_dict({
                    "problem": {"type": "quadratic", "n": n, "seed": seed},
                    "oracle": {"delta1": d1, "seed": seed},
                    "solver": {"type": "sesop", "iterations": iterations, "subsolver": "exact"}}))
    for d4 in (1e-7, 1e-5, 1e-3):
        cfgs.append(RunConfig.from_dict({
            "problem": {"type": "quadratic", "n": 20, "seed": 0},
            "oracle": {"delta1": 1e-3, "seed": 0},
            "solver": {"type": "sesop", "iterations": iterations, "subsolver": "iterative",
                       "delta4": d4}}))
    return cfgs


def cmd_verify(args):
    out = {"appendixA": None, "appendixA_full_range": None, "omega": None, "runs": []}
    failures = []
    # the squared-weight sum bound fails at T = 0, 1; only T >= 2 gates the exit code
    out["appendixA_full_range"] = theory.check_appendixA_sums(args.t_max).to_dict(full=True)
    rep = theory.check_appendixA_sums(args.t_max, T_min=2)
    out["appendixA"] = rep.to_dict(full=True)
    if not rep.passed:
        failures.append(rep.to_dict(full=True))
    rep = theory.check_omega_sequence(max(args.t_max, 1))
    out["omega"] = rep.to_dict(full=True)
    if not rep.passed:
        failures.append(rep.to_dict(full=True))

    if args.runs_config:
        try:
            with open(args.runs_config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read runs config: {e}") from None
        if not isinstance(raw, list):
            raise ConfigError("runs config must be a JSON list of run configs")
        cfgs = [RunConfig.from_dict(d) for d in raw]
    else:
        cfgs = default_verify_matrix(args.iterations)

    for cfg in cfgs:
        try:
            res = execute(cfg, check=False)
        except (DivergenceError, AccuracyNotReachedError) as e:
            failures.append({"config": cfg.to_dict(), "error": str(e)})
            continue
        problem, _, _ = build(cfg)
        reports = applicable_checks(res.trace, problem, cfg, res.query_errors, sabotage=args.sabotage)
        entry = {"config": {"problem": cfg.problem.__dict__, "oracle": cfg.oracle.__dict__,
                            "solver": cfg.solver.__dict__},
                 "reports": [r.to_dict(full=True) for r in reports]}
        out["runs"].append(entry)
        for r in reports:
            if r.details.get("mandatory", True) and not r.passed:
                failures.append(dict(r.to_dict(), config=entry["config"]))
    out["passed"] = not failures
    out["failures"] = failures
    text = json.dumps(out, indent=2, default=_default) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    for f in failures:
        print("FAILED " + json.dumps(f, default=_default), file=sys.stderr)
    print(f"verify: {'PASS' if not failures else 'FAIL'} "
          f"({len(out['runs'])} runs, {len(failures)} failures)")
    return EXIT_OK if not failures else EXIT_VERIFY


def _default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v))


def _parse_bound(spec: str, meta: dict):
    kind, _, rest = spec.partition(":")
    if kind not in ("theorem1", "theorem2"):
        raise UsageError(f"--bound kind must be theorem1 or theorem2, got {kind!r}")
    params = {"L": meta.get("L"), "R": meta.get("R"), "gamma": meta.get("gamma", 1.0),
              "delta1": (meta.get("oracle") or {}).get("delta1", 0.0)}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        if key not in ("L", "R", "gamma", "delta1", "delta2", "delta3", "delta4"):
            raise UsageError(f"unknown bound parameter {key!r}")
        params[key] = float(val)
    if params["L"] is None or params["R"] is None:
        raise UsageError("bound needs L and R (give them or keep the trace's .meta.json)")
    return kind, BoundParams(**params)


def cmd_plot(args):
    if not args.traces:
        raise UsageError("no traces given")
    traces = []
    for path in args.traces:
        try:
            traces.append((path, load_trace(path)))
        except (OSError, TraceFormatError) as e:
            raise UsageError(f"cannot read trace {path}: {e}") from None
    series = []
    for path, tr in traces:
        label = os.path.splitext(os.path.basename(path))[0]
        gap = tr.column("f_gap")
        k = np.arange(len(gap))
        series.append(Series(label, k[1:], gap[1:]))
        if args.bound:
            kind, p = _parse_bound(args.bound, tr.meta)
            k0 = 1 if kind == "theorem1" else 8
            ks = k[k0:]
            fn = theory.theorem1_bound if kind == "theorem1" else theory.theorem2_bound
            rep = theory.check_theorem_bound(tr, p, kind)
            if not rep.passed and not args.force:
                print(f"{path}: trajectory violates the {kind} bound at k={rep.worst_k}; "
                      "use --force to plot anyway", file=sys.stderr)
                return EXIT_VERIFY
            series.append(Series(f"{kind} bound ({label})", ks, fn(p, ks), dashed=True))
    svg = line_chart(series, args.title or "", "k", "f(x_k) - f*", logy=args.logy)
    with open(args.out, "w") as fh:
        fh.write(svg)
    return EXIT_OK


def make_parser():
    ap = _Parser(prog="inexact-sesop", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="build a test problem and print its summary")
    g.add_argument("--type", choices=["quadratic", "quasar"], default="quadratic")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="execute one run from a JSON config")
    r.add_argument("config")
    r.add_argument("--trace", help="override output.trace_path")
    r.add_argument("--report", help="override output.report_path")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("experiment", help="reproduce one of the three experiments")
    e.add_argument("id", type=int)
    e.add_argument("--scale", choices=sorted(SCALES), default="desk")
    e.add_argument("--out-dir", default="results")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--force", action="store_true")
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="run the bound and inequality checks")
    v.add_argument("--t-max", type=int, default=1000)
    v.add_argument("--runs-config")
    v.add_argument("--iterations", type=int, default=10_000)
    v.add_argument("--out")
    v.add_argument("--sabotage", type=float, nargs="?", const=10.0, default=1.0,
                   help="multiply recorded gaps by this factor (default 10) before checking")
    v.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render traces as an SVG line chart")
    p.add_argument("traces", nargs="*")
    p.add_argument("--out", required=True)
    p.add_argument("--logy", action="store_true")
    p.add_argument("--bound", help="theorem1|theorem2[:L=..,R=..,delta1=..]")
    p.add_argument("--title")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        if args.cmd == "experiment" and args.id not in (1, 2, 3):
            raise UsageError(f"unknown experiment id {args.id}")
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
