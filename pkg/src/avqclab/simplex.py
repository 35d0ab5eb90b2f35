"""Probability vectors: validation, Euclidean projection and grids."""

from __future__ import annotations

import itertools

import numpy as np

from .errors import BadWeights

WEIGHT_TOL = 1e-10


def check_weights(q, n: int | None = None, tol: float = WEIGHT_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise BadWeights("weights must be a non-empty 1-d vector")
    if n is not None and q.size != n:
        raise BadWeights(f"expected {n} weights, got {q.size}")
    if not np.all(np.isfinite(q)) or np.any(q < -tol):
        raise BadWeights("weights must be finite and nonnegative")
    if abs(q.sum() - 1) > tol:
        raise BadWeights(f"weights sum to {q.sum():.12g}, not 1")
    return np.clip(q, 0.0, None)


def project(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex.

    Sort-based algorithm; a stable sort makes ties deterministic.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    u = -np.sort(-v, kind="stable")
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    k = idx[cond][-1]
    theta = css[k - 1] / k
    return np.maximum(v - theta, 0.0)


def vertex(i: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def grid(n: int, steps: int) -> np.ndarray:
    """All points of the simplex in ``n`` coordinates with spacing ``1/steps``.

    Returns an array of shape ``(count, n)``; the count is
    ``C(steps + n - 1, n - 1)``.
    """
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.linspace(0.0, 1.0, steps + 1)
        return np.column_stack([t, 1.0 - t])
    pts = []
    for bars in itertools.combinations(range(steps + n - 1), n - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(steps + n - 2 - prev)
        pts.append(comp)
    return np.asarray(pts, dtype=float) / steps


def random_point(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(n))
