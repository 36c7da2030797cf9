"""Clohessy-Wiltshire angles-only Monte Carlo campaign with all four filters.

    python3 scripts/run_cw.py --nmc 200 --seed 0 --workers 1 --out runs/cw
"""

import argparse
import sys

from quadkf.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--nmc", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="runs/cw")
    a = p.parse_args()
    sys.exit(main(["cw", "--nmc", str(a.nmc), "--seed", str(a.seed), "--workers", str(a.workers), "--out", a.out]))
