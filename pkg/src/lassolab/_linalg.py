from __future__ import annotations

import numpy as np

from .problem_gen import stream


def op_norm(A: np.ndarray, iters: int = 200, tol: float = 1e-8, seed: int = 0) -> float:
    """Largest singular value of A by power iteration on A^T A."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    v = stream(seed, 11).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = np.sqrt(nrm)
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(np.linalg.norm(A @ v)) if est > 0 else 0.0
