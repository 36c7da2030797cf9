"""Compare the QUKF gain (B, C) on the scalar scenario with a sampled regression.

Also reports how well the unscented transform reproduces each measurement-space
moment block, for several noise levels.

    python3 scripts/gain_oracle.py --samples 1000000
"""

import argparse
from dataclasses import replace

import numpy as np

from quadkf.config import NoiseSpec, reference_scalar_config
from quadkf.filters import GaussianBelief, UtParams, gain_for, measurement_moments


def sampled_blocks(x, y, x_bar, y_hat):
    dx, dy = x - x_bar, y - y_hat
    return {"p_xy": np.mean(dx * dy), "p_xy2": np.mean(dx * dy**2), "p_yy": np.mean(dy**2),
            "p_yy2": np.mean(dy**3), "p_y2y2": np.mean(dy**4)}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    rng = np.random.default_rng(a.seed)
    for r in (1e-4, 1e-3, 1e-2):
        cfg = replace(reference_scalar_config(), noise=NoiseSpec(kind="gaussian", cov=[[r]]))
        prior = GaussianBelief(cfg.initial_mean, cfg.initial_cov)
        h, noise = cfg.measurement(), cfg.noise_moments()
        x = prior.mean[0] + np.sqrt(prior.cov[0, 0]) * rng.standard_normal(a.samples)
        y = np.arctan(x) + np.sqrt(r) * rng.standard_normal(a.samples)
        for label, ut in (("default", cfg.ut), ("alpha=0.5", UtParams(0.5, 2.0, None))):
            mm = measurement_moments("qukf", prior, h, noise, ut)
            g = gain_for("qukf", mm)
            dy = y - mm.y_hat[0]
            design = np.column_stack([np.ones_like(dy), dy, dy**2 - mm.p_yy[0, 0]])
            _, b_ref, c_ref = np.linalg.lstsq(design, x, rcond=None)[0]
            b, c = g.linear_part[0, 0], g.quadratic_part[0, 0]
            ref = sampled_blocks(x, y, prior.mean[0], mm.y_hat[0])
            rel = {k: float(getattr(mm, k)[0, 0] / v - 1) for k, v in ref.items()}
            print(f"R={r:g} ut={label}: B {b:.4f} vs {b_ref:.4f} ({b / b_ref - 1:+.1%}), "
                  f"C {c:.4f} vs {c_ref:.4f} ({c / c_ref - 1:+.1%})")
            print("    moment errors " + ", ".join(f"{k} {v:+.1%}" for k, v in rel.items()))


if __name__ == "__main__":
    main()
