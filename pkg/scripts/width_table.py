"""Monte-Carlo Gaussian widths of K for a few (p, k) pairs and covariances.

    python scripts/width_table.py --samples 2000
"""
import argparse

from lassolab.cone_geometry import ConeSpec, gaussian_width
from lassolab.outputs import emit_width
from lassolab.problem_gen import CovarianceSpec, sample_sign_pattern, stream

CASES = [(400, 800, 40), (400, 800, 160), (200, 200, 20), (400, 400, 80)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--toeplitz-rho", type=float, default=0.5)
    ap.add_argument("--kappa", type=float, default=4.0)
    ap.add_argument("-o", "--output-dir", default="results/width")
    args = ap.parse_args()

    entries = []
    for n, p, k in CASES:
        pattern = sample_sign_pattern(p, k, stream(args.seed, 0, 3))
        for spec in (CovarianceSpec("identity", p),
                     CovarianceSpec("toeplitz", p, kappa=args.kappa, rho=args.toeplitz_rho)):
            cone = ConeSpec(pattern, spec)
            est = gaussian_width(cone, args.samples, seed=args.seed, n=n)
            entries.append((cone, est, n, args.seed))
            print(f"n={n} p={p} k={k} {spec.kind:9s} width={est.mean:8.3f} "
                  f"+-{est.std_error:.3f}  width/sqrt(n)={est.normalized:.3f}")
    emit_width(entries, args.output_dir)


if __name__ == "__main__":
    main()
