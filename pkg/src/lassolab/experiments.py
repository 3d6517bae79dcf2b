"""Monte-Carlo experiments: phase-transition sweeps, the sparsity/risk
equivalence, and the scaled-signal construction with unbounded risk.

Every replication is an independent task keyed by ``(seed, cell, rep)``;
results are sorted by key before aggregation, so outputs do not depend on
the number of workers or on completion order.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis_pursuit import bp_solve, certify_b0_failure
from .cone_geometry import ConeSpec, WidthEstimate, gaussian_width, gordon_re_prediction
from .diagnostics import diagnose, risk
from .lasso import lasso_fit
from .problem_gen import (CovarianceSpec, ProblemConfig, build_covariance, sample_problem,
                          sample_sign_pattern, stream)
from .re_analysis import bound_inputs, check_risk_bound_chain, risk_bounds, re_heuristic

log = logging.getLogger(__name__)


def cell_dims(n: int, delta: float, rho: float) -> tuple[int, int, int]:
    """(n, p, k) for an undersampling ratio delta = n/p and sparsity rho = k/n."""
    p = int(round(n / delta))
    k = int(round(rho * n))
    if not 0 <= k <= p:
        raise ValueError(f"cell (delta={delta}, rho={rho}) gives k={k} outside [0, p={p}]")
    return n, p, k


@dataclass
class SweepConfig:
    grid: list[tuple[float, float]]
    n: int = 200
    lam: float = 0.5
    sigma: float = 1.0
    amplitude: float = 1.0
    covariance: dict = field(default_factory=lambda: {"kind": "identity"})
    replications: int = 50
    seed: int = 0
    width_samples: int = 2000
    fit_lasso: bool = True
    workers: int = 1

    def __post_init__(self):
        self.grid = [(float(d), float(r)) for d, r in self.grid]
        for d, r in self.grid:
            if not (d > 0 and r >= 0):
                raise ValueError(f"invalid grid cell {(d, r)}")
            cell_dims(self.n, d, r)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def covariance_spec(self, p: int) -> CovarianceSpec:
        return CovarianceSpec(p=p, **self.covariance)


@dataclass
class ReplicationRecord:
    cell: int
    rep: int
    delta: float
    rho: float
    n: int
    p: int
    k: int
    ok: bool
    error: str = ""
    risk: float = math.nan
    l2_error: float = math.nan
    support_fraction: float = math.nan
    gcv_gap: float = math.nan
    gcv: float = math.nan
    event_chi2: bool = False
    event_opnorm: bool = False
    kkt_residual: float = math.nan
    bp_status: str = ""
    bp_l1_gap: float = math.nan

    COLUMNS = ("cell", "rep", "delta", "rho", "n", "p", "k", "ok", "error", "risk", "l2_error",
               "support_fraction", "gcv_gap", "gcv", "event_chi2", "event_opnorm",
               "kkt_residual", "bp_status", "bp_l1_gap")

    def row(self) -> dict:
        d = asdict(self)
        return {c: d[c] for c in self.COLUMNS}


@dataclass
class CellSummary:
    delta: float
    rho: float
    n: int
    p: int
    k: int
    replications: int
    successes: int
    failures: int
    risk_q25: float
    risk_q50: float
    risk_q75: float
    support_q25: float
    support_q50: float
    support_q75: float
    bp_success_rate: float
    ambiguous_count: int
    width_mean: float
    width_se: float
    width_normalized: float
    gcv_gap_pos_mean: float

    COLUMNS = ("delta", "rho", "n", "p", "k", "replications", "successes", "failures",
               "risk_q25", "risk_q50", "risk_q75", "support_q25", "support_q50",
               "support_q75", "bp_success_rate", "ambiguous_count", "width_mean", "width_se",
               "width_normalized", "gcv_gap_pos_mean")

    def row(self) -> dict:
        d = asdict(self)
        return {c: d[c] for c in self.COLUMNS}


@dataclass
class SweepResult:
    config: SweepConfig
    cells: list[CellSummary]
    records: list[ReplicationRecord]


def _quantiles(x: list[float]) -> tuple[float, float, float]:
    if not x:
        return (math.nan,) * 3
    q = np.quantile(np.asarray(x), [0.25, 0.5, 0.75])
    return float(q[0]), float(q[1]), float(q[2])


def _run_replication(config: SweepConfig, cell: int, rep: int) -> ReplicationRecord:
    delta, rho = config.grid[cell]
    n, p, k = cell_dims(config.n, delta, rho)
    rec = ReplicationRecord(cell, rep, delta, rho, n, p, k, ok=False)
    try:
        pattern = sample_sign_pattern(p, k, stream(config.seed, cell, rep, 3))
        pcfg = ProblemConfig(n=n, p=p, sigma=config.sigma, lam=config.lam,
                             covariance=config.covariance_spec(p), seed=config.seed)
        prob = sample_problem(pcfg, pattern, config.amplitude, replication=(cell, rep))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if config.fit_lasso:
                fit = lasso_fit(prob)
                rep_ = diagnose(prob, fit)
                rec.risk, rec.l2_error = rep_.risk, rep_.l2_error
                rec.support_fraction, rec.gcv_gap = rep_.support_fraction, rep_.gcv_gap
                rec.gcv = rep_.gcv
                rec.event_chi2, rec.event_opnorm = rep_.event_chi2, rep_.event_opnorm
                rec.kkt_residual = float(fit.kkt_residual / fit.penalty)
            bp = bp_solve(prob.X, prob.b_star, decide_only=True)
        rec.bp_status, rec.bp_l1_gap = bp.status, bp.l1_gap
        rec.ok = True
    except Exception as exc:  # recorded, never aborts the sweep
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _run_task(args) -> ReplicationRecord:
    return _run_replication(*args)


def _cell_width(config: SweepConfig, cell: int) -> WidthEstimate | None:
    delta, rho = config.grid[cell]
    n, p, k = cell_dims(config.n, delta, rho)
    pattern = sample_sign_pattern(p, k, stream(config.seed, cell, 0, 3))
    cone = ConeSpec(pattern, config.covariance_spec(p))
    try:
        return gaussian_width(cone, config.width_samples, seed=config.seed + cell, n=n)
    except Exception as exc:  # pragma: no cover - projection failures are rare
        log.warning("width estimate failed for cell %d: %s", cell, exc)
        return None


def run_sweep(config: SweepConfig, workers: int | None = None) -> SweepResult:
    """Lasso, diagnostics and basis pursuit on every (cell, replication); width once per cell."""
    workers = config.workers if workers is None else workers
    tasks = [(config, c, r) for c in range(len(config.grid)) for r in range(config.replications)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [_run_task(t) for t in tasks]
    records.sort(key=lambda r: (r.cell, r.rep))

    cells = []
    for c, (delta, rho) in enumerate(config.grid):
        n, p, k = cell_dims(config.n, delta, rho)
        recs = [r for r in records if r.cell == c]
        good = [r for r in recs if r.ok]
        width = _cell_width(config, c)
        risks = [r.risk for r in good if not math.isnan(r.risk)]
        supp = [r.support_fraction for r in good if not math.isnan(r.support_fraction)]
        gaps = [max(r.gcv_gap, 0.0) for r in good if not math.isnan(r.gcv_gap)]
        rq, sq = _quantiles(risks), _quantiles(supp)
        cells.append(CellSummary(
            delta=delta, rho=rho, n=n, p=p, k=k, replications=len(recs),
            successes=len(good), failures=len(recs) - len(good),
            risk_q25=rq[0], risk_q50=rq[1], risk_q75=rq[2],
            support_q25=sq[0], support_q50=sq[1], support_q75=sq[2],
            bp_success_rate=(sum(r.bp_status == "recovered" for r in good) / len(good)
                             if good else math.nan),
            ambiguous_count=sum(r.bp_status == "ambiguous" for r in good),
            width_mean=width.mean if width else math.nan,
            width_se=width.std_error if width else math.nan,
            width_normalized=width.normalized if width else math.nan,
            gcv_gap_pos_mean=math.fsum(gaps) / len(gaps) if gaps else math.nan,
        ))
    return SweepResult(config, cells, records)


def crossing(xs, ys, level: float) -> float:
    """First x where the piecewise-linear curve through (xs, ys) crosses ``level``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float) - level
    for i in range(len(xs) - 1):
        a, b = ys[i], ys[i + 1]
        if a == 0:
            return float(xs[i])
        if a * b < 0:
            return float(xs[i] + (xs[i + 1] - xs[i]) * a / (a - b))
    if len(ys) and ys[-1] == 0:
        return float(xs[-1])
    return math.nan


@dataclass
class UnboundedConfig:
    delta: float = 0.5
    rho: float = 0.7
    n: int = 200
    t_grid: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0])
    seeds: int = 20
    seed: int = 0
    lam: float = 0.5
    sigma: float = 1.0
    amplitude: float = 1.0
    covariance: dict = field(default_factory=lambda: {"kind": "identity"})
    noiseless: bool = False
    width_samples: int = 1000

    def __post_init__(self):
        self.t_grid = [float(t) for t in self.t_grid]
        if not self.t_grid or any(t <= 0 for t in self.t_grid):
            raise ValueError("t_grid must be nonempty and positive")
        if any(a >= b for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        cell_dims(self.n, self.delta, self.rho)


@dataclass
class UnboundedRow:
    seed: int
    t: float
    risk: float
    support_fraction: float
    l2_error: float
    bp_failure_certified: bool

    COLUMNS = ("seed", "t", "risk", "support_fraction", "l2_error", "bp_failure_certified")

    def row(self) -> dict:
        d = asdict(self)
        return {c: d[c] for c in self.COLUMNS}


@dataclass
class UnboundedRunResult:
    t_grid: list[float]
    rows: list[UnboundedRow]
    median_risk: list[float]
    median_support_fraction: list[float]
    median_l2_error: list[float]
    certified_seeds: int
    seeds: int
    width_normalized: float
    above_transition: bool

    @property
    def bp_failure_certified(self) -> bool:
        return self.certified_seeds > 0


def run_unbounded_construction(cfg: UnboundedConfig) -> UnboundedRunResult:
    """Scale a basis-pursuit-failing b0 by t and refit the Lasso along t_grid.

    Seeds where failure is not certified are kept and flagged; nothing is
    fabricated for them.
    """
    n, p, k = cell_dims(cfg.n, cfg.delta, cfg.rho)
    cov_spec = CovarianceSpec(p=p, **cfg.covariance)
    cov = build_covariance(cov_spec)
    probe = sample_sign_pattern(p, k, stream(cfg.seed, 0, 3))
    width = gaussian_width(ConeSpec(probe, cov_spec), cfg.width_samples, seed=cfg.seed, n=n)
    above = width.normalized > 1.0
    if not above:
        warnings.warn(f"cell (delta={cfg.delta}, rho={cfg.rho}) looks below the transition "
                      f"(width/sqrt(n) = {width.normalized:.3f})", RuntimeWarning, stacklevel=2)
    rows: list[UnboundedRow] = []
    certified = 0
    for s in range(cfg.seeds):
        pattern = sample_sign_pattern(p, k, stream(cfg.seed, s, 3))
        pcfg = ProblemConfig(n=n, p=p, sigma=cfg.sigma, lam=cfg.lam, covariance=cov_spec,
                             seed=cfg.seed)
        base = sample_problem(pcfg, pattern, cfg.amplitude, replication=(s,), cov=cov)
        if cfg.noiseless:
            base = base.with_signal(base.b_star, np.zeros(n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cert = certify_b0_failure(base.X, pattern, cfg.amplitude)
        certified += cert.failed
        b0 = base.b_star
        init, prev_t = None, None
        for t in cfg.t_grid:
            prob = base.with_signal(t * b0)
            warm = None if init is None else init * (t / prev_t)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fit = lasso_fit(prob, init=warm)
            init, prev_t = fit.coefficients, t
            rows.append(UnboundedRow(s, t, risk(prob, fit.coefficients), fit.df / n,
                                     float(np.linalg.norm(fit.coefficients - prob.b_star)),
                                     bool(cert.failed)))
    med = lambda key, t: float(np.median([getattr(r, key) for r in rows if r.t == t]))  # noqa: E731
    return UnboundedRunResult(
        t_grid=list(cfg.t_grid), rows=rows,
        median_risk=[med("risk", t) for t in cfg.t_grid],
        median_support_fraction=[med("support_fraction", t) for t in cfg.t_grid],
        median_l2_error=[med("l2_error", t) for t in cfg.t_grid],
        certified_seeds=certified, seeds=cfg.seeds,
        width_normalized=width.normalized, above_transition=above,
    )


@dataclass
class EquivalenceConfig:
    below: dict = field(default_factory=lambda: {"delta": 0.5, "rho": 0.1, "n": 400})
    above: dict = field(default_factory=lambda: {"delta": 0.5, "rho": 0.7, "n": 200})
    t_grid: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0])
    seeds: int = 100
    above_seeds: int = 30
    seed: int = 0
    lam: float = 0.5
    sigma: float = 1.0
    amplitude: float = 1.0
    covariance: dict = field(default_factory=lambda: {"kind": "identity"})
    dense_threshold: float = 0.9
    restarts: int = 3
    width_samples: int = 2000


@dataclass
class EquivalenceRow:
    regime: str
    seed: int
    t: float
    risk: float
    support_fraction: float
    risk_yardstick: float
    sparse: bool
    bounded: bool

    COLUMNS = ("regime", "seed", "t", "risk", "support_fraction", "risk_yardstick", "sparse",
               "bounded")

    def row(self) -> dict:
        d = asdict(self)
        return {c: d[c] for c in self.COLUMNS}


@dataclass
class EquivalenceReport:
    rows: list[EquivalenceRow]
    below_frequency: float          # P(sparse and risk within the risk bound)
    contingency: dict               # counts over (sparse|dense) x (bounded|unbounded)
    diagonal_fraction: float
    risk_ratio: float               # median risk at largest t / at smallest t
    top_support_median: float
    unbounded: UnboundedRunResult

    def summary(self) -> dict:
        return {
            "below_frequency": self.below_frequency,
            "contingency": self.contingency,
            "diagonal_fraction": self.diagonal_fraction,
            "risk_ratio": self.risk_ratio,
            "top_support_median": self.top_support_median,
            "certified_seeds": self.unbounded.certified_seeds,
            "above_seeds": self.unbounded.seeds,
        }


def run_equivalence_experiment(cfg: EquivalenceConfig) -> EquivalenceReport:
    """Tabulate (dense?, large risk?) below and above the transition.

    Below: risk is "bounded" when sqrt(R) <= sqrt(kappa) times the deterministic
    L2 bound with the heuristic RE constant; if the RE constant is not
    positive, 10x the below-regime median risk is the yardstick instead.
    Above: the scaled basis-pursuit construction; "bounded" means within 10x
    the below-regime median risk.
    """
    n, p, k = cell_dims(cfg.below["n"], cfg.below["delta"], cfg.below["rho"])
    cov_spec = CovarianceSpec(p=p, **cfg.covariance)
    cov = build_covariance(cov_spec)
    kappa = cov_spec.kappa
    probe = sample_sign_pattern(p, k, stream(cfg.seed, 0, 3))
    width = gaussian_width(ConeSpec(probe, cov_spec), cfg.width_samples, seed=cfg.seed, n=n)
    gordon = gordon_re_prediction(ConeSpec(probe, cov_spec), n, width=width)

    below = []
    for s in range(cfg.seeds):
        pattern = sample_sign_pattern(p, k, stream(cfg.seed, s, 3))
        cone = ConeSpec(pattern, cov_spec)
        pcfg = ProblemConfig(n=n, p=p, sigma=cfg.sigma, lam=cfg.lam, covariance=cov_spec,
                             seed=cfg.seed)
        prob = sample_problem(pcfg, pattern, cfg.amplitude, replication=(s,), cov=cov)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fit = lasso_fit(prob)
        R = risk(prob, fit.coefficients)
        bound = math.nan
        if k >= 1:
            re = re_heuristic(cone, prob.X, cfg.restarts, seed=s, gordon=gordon)
            if re.delta_star_heuristic > 0:
                _, l2b = risk_bounds(bound_inputs(prob, cone, re.delta_star_heuristic))
                bound = kappa * l2b ** 2
        below.append((s, R, fit.df / n, bound))
    med_below = float(np.median([b[1] for b in below]))
    yard = 10.0 * med_below
    rows = []
    for s, R, frac, bound in below:
        y = bound if not math.isnan(bound) else yard
        rows.append(EquivalenceRow("below", s, 1.0, R, frac, y, frac <= cfg.dense_threshold, R <= y))

    ucfg = UnboundedConfig(delta=cfg.above["delta"], rho=cfg.above["rho"], n=cfg.above["n"],
                           t_grid=cfg.t_grid, seeds=cfg.above_seeds, seed=cfg.seed + 1,
                           lam=cfg.lam, sigma=cfg.sigma, amplitude=cfg.amplitude,
                           covariance=cfg.covariance)
    un = run_unbounded_construction(ucfg)
    t_top = cfg.t_grid[-1]
    for r in un.rows:
        if r.t == t_top:
            rows.append(EquivalenceRow("above", r.seed, r.t, r.risk, r.support_fraction, yard,
                                       r.support_fraction <= cfg.dense_threshold, r.risk <= yard))
    cont = {"sparse_bounded": 0, "sparse_unbounded": 0, "dense_bounded": 0, "dense_unbounded": 0}
    for r in rows:
        key = ("sparse" if r.sparse else "dense") + "_" + ("bounded" if r.bounded else "unbounded")
        cont[key] += 1
    diag = (cont["sparse_bounded"] + cont["dense_unbounded"]) / max(1, len(rows))
    below_rows = [r for r in rows if r.regime == "below"]
    freq = sum(r.sparse and r.bounded for r in below_rows) / len(below_rows)
    ratio = un.median_risk[-1] / un.median_risk[0] if un.median_risk[0] > 0 else math.inf
    return EquivalenceReport(rows, freq, cont, diag, ratio, un.median_support_fraction[-1], un)


def risk_bound_rows(n: int = 400, p: int = 800, k: int = 40, seeds: int = 50, lam: float = 0.5,
                sigma: float = 1.0, amplitude: float = 1.0, seed: int = 0, restarts: int = 3,
                width_samples: int = 2000):
    """Per-seed risk-bound reports (identity covariance), one Gordon prediction shared by all."""
    cov_spec = CovarianceSpec("identity", p)
    probe = sample_sign_pattern(p, k, stream(seed, 0, 3))
    width = gaussian_width(ConeSpec(probe), width_samples, seed=seed, n=n)
    gordon = gordon_re_prediction(ConeSpec(probe), n, width=width)
    out = []
    for s in range(seeds):
        pattern = sample_sign_pattern(p, k, stream(seed, s, 3))
        cone = ConeSpec(pattern)
        pcfg = ProblemConfig(n=n, p=p, sigma=sigma, lam=lam, covariance=cov_spec, seed=seed + s)
        prob = sample_problem(pcfg, pattern, amplitude)
        fit = lasso_fit(prob)
        re = re_heuristic(cone, prob.X, restarts, seed=s, gordon=gordon)
        out.append(check_risk_bound_chain(prob, cone, fit, re))
    return out
