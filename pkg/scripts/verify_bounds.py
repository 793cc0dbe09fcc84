"""Run the weight-sum, bound and inequality checks over the default run matrix.

Usage: python scripts/verify_bounds.py [--iterations 10000] [--out verify.json]
"""
import argparse
import sys

from inexact_sesop.harness.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", default="10000")
    ap.add_argument("--out", default="results/verify.json")
    args = ap.parse_args()
    sys.exit(main(["verify", "--iterations", args.iterations, "--out", args.out]))
