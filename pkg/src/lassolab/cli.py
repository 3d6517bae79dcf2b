"""Command-line entry point.

Each subcommand reads one JSON config and writes into an output directory.
Exit codes: 0 success, 1 config error, 2 runtime failure (whatever was
already produced stays on disk).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import outputs
from .config import ConfigError, dump_config, load_config

log = logging.getLogger("lassolab")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# which config field each generic flag overrides, per subcommand
_REPLICATION_FIELD = {"sweep": "replications", "equivalence": "seeds", "unbounded": "seeds",
                      "width": "repeats", "fit": "replications", "diagnose": "replications"}


def _apply_overrides(kind: str, cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.replications is not None:
        changes[_REPLICATION_FIELD[kind]] = args.replications
    if args.workers is not None and kind == "sweep":
        changes["workers"] = args.workers
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _formats(args, default):
    return default if args.format == "all" else (args.format,)


def _cmd_sweep(cfg, outdir, args) -> int:
    from .experiments import run_sweep

    result = run_sweep(cfg)
    outputs.emit_sweep(result, outdir, _formats(args, ("csv", "json", "svg")))
    failed = sum(not r.ok for r in result.records)
    for c in result.cells:
        log.info("delta=%g rho=%g  bp_success=%.3f  width/sqrt(n)=%.3f  support_q50=%.3f",
                 c.delta, c.rho, c.bp_success_rate, c.width_normalized, c.support_q50)
    if failed:
        log.error("%d replication(s) failed; see %s", failed, outputs.SWEEP_RECORDS_CSV)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_equivalence(cfg, outdir, args) -> int:
    from .experiments import run_equivalence_experiment

    report = run_equivalence_experiment(cfg)
    outputs.emit_equivalence(report, outdir, _formats(args, ("csv", "json", "svg")))
    for k, v in report.summary().items():
        log.info("%s: %s", k, v)
    return EXIT_OK


def _cmd_unbounded(cfg, outdir, args) -> int:
    from .experiments import run_unbounded_construction

    res = run_unbounded_construction(cfg)
    outputs.emit_unbounded(res, outdir, _formats(args, ("csv", "json", "svg")))
    for t, r, s in zip(res.t_grid, res.median_risk, res.median_support_fraction):
        log.info("t=%g  median risk=%.4g  median support=%.3f", t, r, s)
    if not res.bp_failure_certified:
        log.warning("basis pursuit failure was not certified on any seed")
    return EXIT_OK


def _cmd_width(cfg, outdir, args) -> int:
    from .cone_geometry import ConeSpec, gaussian_width
    from .problem_gen import CovarianceSpec, sample_sign_pattern, stream

    spec = CovarianceSpec(p=cfg.p, **cfg.covariance)
    entries = []
    for r in range(cfg.repeats):
        seed = cfg.seed + r
        cone = ConeSpec(sample_sign_pattern(cfg.p, cfg.k, stream(seed, 0, 3)), spec)
        est = gaussian_width(cone, cfg.samples, seed=seed, n=cfg.n)
        entries.append((cone, est, cfg.n, seed))
        log.info("seed=%d  width=%.4f +- %.4f", seed, est.mean, est.std_error)
    outputs.emit_width(entries, outdir, _formats(args, ("csv", "json")))
    return EXIT_OK


def _problems(cfg):
    from .problem_gen import (CovarianceSpec, ProblemConfig, load_problem, sample_problem,
                              sample_sign_pattern, stream)

    if cfg.problem_file:
        yield 0, load_problem(cfg.problem_file)
        return
    spec = CovarianceSpec(p=cfg.p, **cfg.covariance)
    pcfg = ProblemConfig(n=cfg.n, p=cfg.p, sigma=cfg.sigma, lam=cfg.lam, covariance=spec,
                         seed=cfg.seed)
    for r in range(cfg.replications):
        pattern = sample_sign_pattern(cfg.p, cfg.k, stream(cfg.seed, r, 3))
        yield r, sample_problem(pcfg, pattern, cfg.amplitude, replication=r)


FIT_COLUMNS = ("replication", "n", "p", "lambda", "df", "kkt_residual", "objective",
               "iterations", "converged", "degenerate")


def _cmd_fit(cfg, outdir, args) -> int:
    from .lasso import lasso_fit

    rows, records, status = [], [], EXIT_OK
    fmts = _formats(args, ("csv", "json"))
    for r, prob in _problems(cfg):
        fit = lasso_fit(prob, tol=cfg.tol)
        rec = fit.to_record(coefficients=True)
        records.append({"replication": r, **rec})
        rows.append({"replication": r, "n": prob.n, "p": prob.p, "lambda": prob.lam,
                     **{c: rec[c] for c in FIT_COLUMNS[4:]}})
        if not fit.converged:
            status = EXIT_RUNTIME
    if "csv" in fmts:
        outputs.write_csv(Path(outdir) / "fit.csv", FIT_COLUMNS, rows)
    if "json" in fmts:
        outputs.write_json(Path(outdir) / "fit.json", records)
    return status


def _cmd_diagnose(cfg, outdir, args) -> int:
    from .diagnostics import DiagnosticsReport, diagnose
    from .lasso import lasso_fit

    cols = ("replication",) + DiagnosticsReport.CSV_COLUMNS
    rows, status = [], EXIT_OK
    fmts = _formats(args, ("csv", "json"))
    for r, prob in _problems(cfg):
        fit = lasso_fit(prob, tol=cfg.tol)
        rep = diagnose(prob, fit, mu=cfg.mu, check_opnorm=cfg.check_opnorm)
        d = {"replication": r, **rep.to_dict()}
        rows.append(d)
        if "json" in fmts:
            outputs.write_json(Path(outdir) / f"diagnose_{r:04d}.json", d)
        if not fit.converged:
            status = EXIT_RUNTIME
    if "csv" in fmts:
        outputs.write_csv(Path(outdir) / "diagnose.csv", cols, rows)
    return status


COMMANDS = {
    "sweep": (_cmd_sweep, "phase-transition sweep over a (delta, rho) grid"),
    "equivalence": (_cmd_equivalence, "sparsity vs risk contingency below/above the transition"),
    "unbounded": (_cmd_unbounded, "risk along b* = t b0 for a basis-pursuit failure b0"),
    "width": (_cmd_width, "Monte-Carlo Gaussian width of the cone K"),
    "fit": (_cmd_fit, "fit the Lasso on sampled or saved problems"),
    "diagnose": (_cmd_diagnose, "risk, GCV and gap diagnostics per instance"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lassolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", type=Path, help="JSON config file")
        p.add_argument("-o", "--output-dir", type=Path, default=Path("results") / name)
        p.add_argument("--seed", type=int)
        p.add_argument("--replications", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--format", choices=("csv", "json", "svg", "all"), default="all")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.command, args.config)
        cfg = _apply_overrides(args.command, cfg, args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = args.output_dir
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        outputs.write_json(outdir / "config.json", dump_config(cfg))
        return COMMANDS[args.command][0](cfg, outdir, args)
    except Exception as exc:
        log.exception("run failed")
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
