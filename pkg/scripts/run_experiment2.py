"""Subproblem-accuracy sweep at delta1 = 1e-3 with the iterative subsolver.

Usage: python scripts/run_experiment2.py [--scale desk|paper] [--out-dir DIR] [--jobs N]
"""
import argparse
import sys

from inexact_sesop.harness.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", default="desk", choices=["desk", "paper"])
    ap.add_argument("--out-dir", default="results/exp2")
    ap.add_argument("--jobs", default="1")
    args = ap.parse_args()
    sys.exit(main(["experiment", "2", "--scale", args.scale,
                   "--out-dir", args.out_dir, "--jobs", args.jobs]))
