"""Phase diagram over a (delta, rho) grid: BP success, width/sqrt(n), Lasso sparsity and risk.

    python scripts/phase_diagram.py --n 200 --replications 50 --workers 4 -o results/phase
"""
import argparse
import logging

import numpy as np

from lassolab.experiments import SweepConfig, crossing, run_sweep
from lassolab.outputs import emit_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--rho-step", type=float, default=0.05)
    ap.add_argument("--rho-max", type=float, default=0.8)
    ap.add_argument("--replications", type=int, default=50)
    ap.add_argument("--width-samples", type=int, default=2000)
    ap.add_argument("--no-lasso", action="store_true", help="only basis pursuit and width")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("-o", "--output-dir", default="results/phase")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rhos = np.round(np.arange(args.rho_step, args.rho_max + 1e-9, args.rho_step), 4)
    grid = [(d, float(r)) for d in args.deltas for r in rhos]
    cfg = SweepConfig(grid=grid, n=args.n, replications=args.replications, seed=args.seed,
                      width_samples=args.width_samples, fit_lasso=not args.no_lasso,
                      workers=args.workers)
    res = run_sweep(cfg)
    emit_sweep(res, args.output_dir)
    for d in args.deltas:
        cells = [c for c in res.cells if c.delta == d]
        r = [c.rho for c in cells]
        print(f"delta={d:g}: BP 50% crossing rho={crossing(r, [c.bp_success_rate for c in cells], 0.5):.3f}, "
              f"width/sqrt(n)=1 at rho={crossing(r, [c.width_normalized for c in cells], 1.0):.3f}")


if __name__ == "__main__":
    main()
