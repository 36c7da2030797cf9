"""One-shot arctan study: RMSE of the four filters against sample estimators.

    python3 scripts/run_scalar.py --samples 100000 --seed 0 --out runs/scalar
"""

import argparse
import sys

from quadkf.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/scalar")
    a = p.parse_args()
    sys.exit(main(["scalar", "--samples", str(a.samples), "--seed", str(a.seed), "--out", a.out]))
