"""Exact l1 homotopy (LARS with drops) in Gram form.

Traces the piecewise-linear solution path of

    minimize  0.5 b'Gb - c'b + lam ||b||_1

from ``lam = max|c|`` down to a target. Used where coordinate descent is
too slow: fits with close to n active variables, whose active Gram block is
nearly singular.
"""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _forward(L, m, v):
    x = v.copy()
    for i in range(m):
        s = x[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    return x


@numba.njit(cache=True)
def _backward(L, m, v):
    x = v.copy()
    for i in range(m - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, m):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@numba.njit(cache=True)
def _chol_delete(L, m, pos):
    """Remove row/column ``pos`` from the m x m lower Cholesky factor in place."""
    for i in range(pos, m - 1):
        for k in range(m):
            L[i, k] = L[i + 1, k]
    for k in range(m):
        L[m - 1, k] = 0.0
    # L[:m-1, :m] is now lower Hessenberg in columns pos..m-1; rotate it back
    for i in range(pos, m - 1):
        a = L[i, i]
        b = L[i, i + 1]
        r = np.sqrt(a * a + b * b)
        if r == 0.0:
            continue
        cs = a / r
        sn = b / r
        for k in range(i, m - 1):
            x = L[k, i]
            y = L[k, i + 1]
            L[k, i] = cs * x + sn * y
            L[k, i + 1] = -sn * x + cs * y
    for k in range(m):
        L[k, m - 1] = 0.0


@numba.njit(cache=True)
def _homotopy(G, c, lam_target, max_steps, rank_limit):
    p = c.size
    b = np.zeros(p)
    r = c.copy()
    active = np.zeros(p, dtype=np.int64)
    in_active = np.zeros(p, dtype=np.bool_)
    signs = np.zeros(p)
    L = np.zeros((rank_limit, rank_limit))
    m = 0
    j0 = np.argmax(np.abs(c))
    lam = abs(c[j0])
    if lam <= lam_target:
        return b, lam, 0, 0
    steps = 0
    add = j0
    while steps < max_steps:
        if add >= 0:
            if m >= rank_limit:
                return b, lam, steps, 2
            # append column ``add`` to the factor
            col = np.empty(m)
            for i in range(m):
                col[i] = G[active[i], add]
            w = _forward(L, m, col)
            d2 = G[add, add] - np.dot(w, w)
            if d2 <= 1e-14 * G[add, add]:
                return b, lam, steps, 3
            for i in range(m):
                L[m, i] = w[i]
            L[m, m] = np.sqrt(d2)
            active[m] = add
            in_active[add] = True
            signs[add] = 1.0 if r[add] > 0 else -1.0
            m += 1
        sA = np.empty(m)
        for i in range(m):
            sA[i] = signs[active[i]]
        dA = _backward(L, m, _forward(L, m, sA))
        # a = G[:, A] @ dA
        a = np.zeros(p)
        for i in range(m):
            gi = active[i]
            di = dA[i]
            for j in range(p):
                a[j] += G[j, gi] * di
        gamma = lam - lam_target
        add = -1
        drop = -1
        for j in range(p):
            if in_active[j]:
                continue
            den = 1.0 - a[j]
            if den > 1e-15:
                g = (lam - r[j]) / den
                if 0.0 < g < gamma:
                    gamma = g
                    add = j
                    drop = -1
            den = 1.0 + a[j]
            if den > 1e-15:
                g = (lam + r[j]) / den
                if 0.0 < g < gamma:
                    gamma = g
                    add = j
                    drop = -1
        for i in range(m):
            j = active[i]
            if dA[i] != 0.0:
                g = -b[j] / dA[i]
                if 0.0 < g < gamma:
                    gamma = g
                    drop = i
                    add = -1
        for i in range(m):
            b[active[i]] += gamma * dA[i]
        for j in range(p):
            r[j] -= gamma * a[j]
        lam -= gamma
        steps += 1
        if drop >= 0:
            j = active[drop]
            b[j] = 0.0
            in_active[j] = False
            signs[j] = 0.0
            _chol_delete(L, m, drop)
            for i in range(drop, m - 1):
                active[i] = active[i + 1]
            m -= 1
        elif add < 0:
            return b, lam, steps, 0
    return b, lam, steps, 1


def homotopy_solve(G: np.ndarray, c: np.ndarray, lam: float, max_steps: int | None = None,
                   rank_limit: int | None = None) -> tuple[np.ndarray, int, int]:
    """Return ``(b, steps, status)``; status 0 means the target was reached.

    Nonzero status: 1 step limit, 2 active set hit ``rank_limit``, 3 singular pivot.
    """
    G = np.ascontiguousarray(G, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    p = c.size
    rank_limit = p if rank_limit is None else min(p, rank_limit)
    max_steps = 20 * p if max_steps is None else max_steps
    b, _lam, steps, status = _homotopy(G, c, float(lam), int(max_steps), int(rank_limit))
    return b, int(steps), int(status)
