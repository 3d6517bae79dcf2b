"""Sparsity vs risk contingency table below and above the phase transition.

    python scripts/equivalence.py --seeds 100 --above-seeds 30
"""
import argparse

from lassolab.experiments import EquivalenceConfig, run_equivalence_experiment
from lassolab.outputs import emit_equivalence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--above-seeds", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output-dir", default="results/equivalence")
    args = ap.parse_args()

    rep = run_equivalence_experiment(EquivalenceConfig(seeds=args.seeds,
                                                       above_seeds=args.above_seeds,
                                                       seed=args.seed))
    emit_equivalence(rep, args.output_dir)
    for k, v in rep.summary().items():
        print(f"{k}: {v}")


if __name__ == "__main__":
    main()
