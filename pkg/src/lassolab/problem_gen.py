"""Synthetic regression problems with Gaussian design and bounded covariance spectrum.

Every random quantity is drawn from a counter-based Philox stream keyed by
``(seed, *keys)``, so replication ``r`` of a sweep can be generated in any
order, by any worker, and still produce the same bits.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

CovKind = Literal["identity", "toeplitz", "diagonal"]

EIG_TOL = 1e-10


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the substream ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class CovarianceSpec:
    kind: CovKind = "identity"
    p: int = 1
    kappa: float = 1.0
    rho: float = 0.0
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "toeplitz", "diagonal"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be positive")
        if not self.kappa >= 1.0:
            raise ValueError("kappa must be >= 1 (spectrum in [1/kappa, kappa])")
        if self.kind == "toeplitz" and not 0.0 <= self.rho < 1.0:
            raise ValueError("toeplitz correlation must lie in [0, 1)")
        if self.kind == "diagonal":
            if self.values is None or len(self.values) != self.p:
                raise ValueError("diagonal covariance needs p values")

    def with_p(self, p: int) -> "CovarianceSpec":
        if self.kind == "diagonal":
            raise ValueError("cannot resize an explicit diagonal covariance")
        return CovarianceSpec(self.kind, p, self.kappa, self.rho, None)

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity" or (self.kind == "toeplitz" and self.rho == 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["values"] is not None:
            d["values"] = list(d["values"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceSpec":
        d = dict(d)
        if d.get("values") is not None:
            d["values"] = tuple(float(v) for v in d["values"])
        return cls(**d)


@dataclass(frozen=True)
class Covariance:
    """A covariance matrix together with its symmetric square roots."""

    spec: CovarianceSpec
    sigma: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    eigenvalues: np.ndarray

    @property
    def is_identity(self) -> bool:
        return self.spec.is_identity


def build_covariance(spec: CovarianceSpec) -> Covariance:
    """Build Sigma, Sigma^{1/2} and Sigma^{-1/2} with spectrum clipped to [1/kappa, kappa]."""
    p, kappa = spec.p, float(spec.kappa)
    if spec.is_identity:
        eye = np.eye(p)
        return Covariance(spec, eye, eye.copy(), eye.copy(), np.ones(p))

    if spec.kind == "toeplitz":
        idx = np.arange(p)
        raw = spec.rho ** np.abs(idx[:, None] - idx[None, :])
    else:
        raw = np.diag(np.asarray(spec.values, dtype=float))
    if not np.all(np.isfinite(raw)):
        raise ValueError("covariance has non-finite entries")

    try:
        w, V = np.linalg.eigh(raw)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError("eigendecomposition of covariance failed") from exc
    w = np.clip(w, 1.0 / kappa, kappa)
    sigma = (V * w) @ V.T
    sigma = 0.5 * (sigma + sigma.T)
    sqrt = (V * np.sqrt(w)) @ V.T
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    sqrt = 0.5 * (sqrt + sqrt.T)
    inv_sqrt = 0.5 * (inv_sqrt + inv_sqrt.T)

    eig = np.linalg.eigvalsh(sigma)
    if eig.min() < 1.0 / kappa - EIG_TOL or eig.max() > kappa + EIG_TOL:
        raise RuntimeError("clipped covariance spectrum escaped [1/kappa, kappa]")
    return Covariance(spec, sigma, sqrt, inv_sqrt, eig)


@dataclass(frozen=True)
class ProblemConfig:
    n: int
    p: int
    sigma: float = 1.0
    lam: float = 0.5
    gamma: float | None = None
    covariance: CovarianceSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.gamma is not None and self.p / self.n > self.gamma:
            raise ValueError(f"p/n = {self.p / self.n:g} exceeds gamma = {self.gamma:g}")
        if self.covariance is None:
            object.__setattr__(self, "covariance", CovarianceSpec("identity", self.p))
        elif self.covariance.p != self.p:
            raise ValueError("covariance dimension does not match p")

    @property
    def aspect(self) -> float:
        """p / n, the role played by gamma in the proportional regime."""
        return self.p / self.n

    @property
    def gamma_eff(self) -> float:
        return self.gamma if self.gamma is not None else max(1.0, self.aspect)

    @property
    def proportional(self) -> bool:
        return 1.0 <= self.aspect <= self.gamma_eff

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "sigma": self.sigma,
            "lam": self.lam,
            "gamma": self.gamma,
            "covariance": self.covariance.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        d = dict(d)
        if d.get("covariance") is not None:
            d["covariance"] = CovarianceSpec.from_dict(d["covariance"])
        return cls(**d)


@dataclass(frozen=True)
class SignPattern:
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 1:
            raise ValueError("sign pattern must be a vector")
        if not np.all(np.isin(e, (-1, 0, 1))):
            raise ValueError("sign pattern entries must be in {-1, 0, +1}")
        object.__setattr__(self, "entries", e.astype(float))

    @property
    def p(self) -> int:
        return self.entries.size

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.entries)

    @cached_property
    def off_support(self) -> np.ndarray:
        return np.flatnonzero(self.entries == 0)

    @property
    def k(self) -> int:
        return int(self.support.size)


def sample_sign_pattern(p: int, k: int, seed: int | np.random.Generator) -> SignPattern:
    if not 0 <= k <= p:
        raise ValueError(f"need 0 <= k <= p, got k={k}, p={p}")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    s = np.zeros(p)
    idx = rng.choice(p, size=k, replace=False)
    s[idx] = rng.choice((-1.0, 1.0), size=k)
    return SignPattern(s)


@dataclass(frozen=True)
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    b_star: np.ndarray
    noise: np.ndarray
    config: ProblemConfig
    cov: Covariance
    pattern: SignPattern | None = None
    replication: int | tuple[int, ...] = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def lam(self) -> float:
        return self.config.lam

    @property
    def penalty(self) -> float:
        """The l1 weight lambda * sqrt(n)."""
        return self.config.lam * np.sqrt(self.n)

    @cached_property
    def gram(self) -> np.ndarray:
        return self.X.T @ self.X

    @cached_property
    def xty(self) -> np.ndarray:
        return self.X.T @ self.y

    def with_signal(self, b_star: np.ndarray, noise: np.ndarray | None = None) -> "RegressionProblem":
        """Same design, new signal (and optionally new noise); y is reassembled."""
        noise = self.noise if noise is None else np.asarray(noise, dtype=float)
        b_star = np.asarray(b_star, dtype=float)
        return RegressionProblem(self.X, self.X @ b_star + noise, b_star, noise,
                                 self.config, self.cov, self.pattern, self.replication)

    def with_lam(self, lam: float) -> "RegressionProblem":
        cfg = ProblemConfig(**{**self.config.__dict__, "lam": float(lam)})
        prob = RegressionProblem(self.X, self.y, self.b_star, self.noise, cfg, self.cov,
                                 self.pattern, self.replication)
        # reuse the cached Gram products
        for name in ("gram", "xty"):
            if name in self.__dict__:
                prob.__dict__[name] = self.__dict__[name]
        return prob

    def noiseless(self) -> "RegressionProblem":
        return self.with_signal(self.b_star, np.zeros(self.n))


def sample_problem(
    config: ProblemConfig,
    pattern: SignPattern,
    amplitude: float = 1.0,
    replication: int | tuple[int, ...] = 0,
    cov: Covariance | None = None,
) -> RegressionProblem:
    """Draw X with iid N(0, Sigma) rows, b* = amplitude * s and Gaussian noise.

    The draw is a pure function of ``(config, pattern, amplitude, replication)``;
    ``replication`` may be a tuple key such as ``(cell, rep)``.
    """
    if pattern.p != config.p:
        raise ValueError(f"pattern length {pattern.p} != p = {config.p}")
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    cov = build_covariance(config.covariance) if cov is None else cov
    key = replication if isinstance(replication, tuple) else (replication,)
    rng = stream(config.seed, *key, 1)
    G = rng.standard_normal((config.n, config.p))
    X = G if cov.is_identity else G @ cov.sqrt
    noise = config.sigma * rng.standard_normal(config.n)
    b_star = amplitude * pattern.entries
    y = X @ b_star + noise
    return RegressionProblem(X, y, b_star, noise, config, cov, pattern, replication)


_MAGIC = "# lassolab-problem v1"


def save_problem(problem: RegressionProblem, path: str | Path) -> None:
    """Write a problem as row-major text: a JSON header, then X, y, b*, noise."""
    header = {
        "n": problem.n,
        "p": problem.p,
        "seed": problem.config.seed,
        "replication": list(problem.replication) if isinstance(problem.replication, tuple)
        else problem.replication,
        "config": problem.config.to_dict(),
        "pattern": None if problem.pattern is None else problem.pattern.entries.astype(int).tolist(),
        "blocks": ["X", "y", "b_star", "noise"],
    }
    lines = [_MAGIC, "# " + json.dumps(header, sort_keys=True)]
    lines += [" ".join(repr(float(v)) for v in row) for row in problem.X]
    for vec in (problem.y, problem.b_star, problem.noise):
        lines.append(" ".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n")


def load_problem(path: str | Path) -> RegressionProblem:
    text = Path(path).read_text().splitlines()
    if not text or text[0] != _MAGIC:
        raise ValueError(f"{path}: not a lassolab problem file")
    header = json.loads(text[1][2:])
    n, p = header["n"], header["p"]
    rows = [np.array(line.split(), dtype=float) for line in text[2:]]
    if len(rows) != n + 3:
        raise ValueError(f"{path}: expected {n + 3} data rows, found {len(rows)}")
    X = np.vstack(rows[:n])
    if X.shape != (n, p):
        raise ValueError(f"{path}: X has shape {X.shape}, header says {(n, p)}")
    config = ProblemConfig.from_dict(header["config"])
    pattern = None if header["pattern"] is None else SignPattern(np.array(header["pattern"]))
    rep = header["replication"]
    rep = tuple(rep) if isinstance(rep, list) else rep
    return RegressionProblem(X, rows[n], rows[n + 1], rows[n + 2], config,
                             build_covariance(config.covariance), pattern, rep)


def problem_from_arrays(X: Sequence, y: Sequence, lam: float, sigma: float = 1.0,
                        b_star: Sequence | None = None) -> RegressionProblem:
    """Wrap user arrays (identity covariance) so the solvers can run on them."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    b_star = np.zeros(p) if b_star is None else np.asarray(b_star, dtype=float)
    config = ProblemConfig(n=n, p=p, sigma=sigma, lam=lam)
    return RegressionProblem(X, y, b_star, y - X @ b_star, config,
                             build_covariance(config.covariance))
