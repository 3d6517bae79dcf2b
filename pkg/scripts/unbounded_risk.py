"""Lasso risk along b* = t b0 where basis pursuit fails to recover b0.

    python scripts/unbounded_risk.py --delta 0.5 --rho 0.7 --n 200 --seeds 20
"""
import argparse

import numpy as np

from lassolab.experiments import UnboundedConfig, run_unbounded_construction
from lassolab.outputs import emit_unbounded


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--rho", type=float, default=0.7)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--t-max", type=float, default=1e3)
    ap.add_argument("--t-points", type=int, default=7)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noiseless", action="store_true")
    ap.add_argument("-o", "--output-dir", default="results/unbounded")
    args = ap.parse_args()

    t_grid = [float(t) for t in np.geomspace(1.0, args.t_max, args.t_points)]
    cfg = UnboundedConfig(delta=args.delta, rho=args.rho, n=args.n, t_grid=t_grid,
                          seeds=args.seeds, seed=args.seed, noiseless=args.noiseless)
    res = run_unbounded_construction(cfg)
    emit_unbounded(res, args.output_dir)
    print(f"BP failure certified on {res.certified_seeds}/{res.seeds} seeds; "
          f"width/sqrt(n) = {res.width_normalized:.3f}")
    for t, r, s in zip(res.t_grid, res.median_risk, res.median_support_fraction):
        print(f"t={t:10.3f}  median risk={r:12.4g}  median df/n={s:.3f}")


if __name__ == "__main__":
    main()
