"""Log-barrier path following for the small semidefinite programs used here.

The caller supplies the barrier oracle and a certificate callback; this module
only does damped Newton centering and the outer ``t`` schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class PathResult:
    x: np.ndarray
    gap: float
    certificate: object
    newton_steps: int
    converged: bool


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis of ``d x d`` Hermitian matrices (real inner product)."""
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    r = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = r
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j], e[j, i] = -1j * r, 1j * r
            out.append(e)
    return np.asarray(out)


def logdet_pd(m: np.ndarray) -> float:
    """``log det m`` for positive definite ``m``; ``-inf`` otherwise."""
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return -np.inf
    return 2.0 * float(np.sum(np.log(np.diag(c).real)))


def _newton_step(g, h, eq):
    if eq is None:
        try:
            return -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            return -np.linalg.lstsq(h, g, rcond=None)[0]
    k = eq.shape[0]
    kkt = np.block([[h, eq.T], [eq, np.zeros((k, k))]])
    rhs = np.concatenate([-g, np.zeros(k)])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[: g.size]


def path_following(
    x0: np.ndarray,
    cost: np.ndarray,
    barrier: Callable[[np.ndarray, bool], tuple],
    certificate: Callable[[np.ndarray, float], tuple[float, object]],
    eq: np.ndarray | None = None,
    tol: float = 1e-7,
    t0: float = 1.0,
    growth: float = 10.0,
    max_newton: int = 600,
    centering_tol: float = 1e-9,
) -> PathResult:
    """Minimize ``cost @ x`` over the barrier's domain (and ``eq @ x = const``).

    ``barrier(x, derivs)`` returns ``f`` (``inf`` outside the domain), or
    ``(f, grad, hess)`` when ``derivs`` is true. ``certificate(x, t)``
    returns ``(gap, info)`` where ``gap`` is a rigorous duality gap computed
    from feasible points; iteration stops once it is below ``tol``. ``x0``
    must be strictly feasible.
    """
    x = np.asarray(x0, dtype=float).copy()
    t = t0
    steps = 0
    best_gap, best_info, best_x = np.inf, None, x
    while True:
        for _ in range(80):
            f, g, h = barrier(x, True)
            g = t * cost + g
            f = t * (cost @ x) + f
            dx = _newton_step(g, h, eq)
            dec = -(g @ dx)
            steps += 1
            if dec / 2 < centering_tol or steps >= max_newton:
                break
            s = 1.0
            while True:
                xn = x + s * dx
                fn = barrier(xn, False)
                if np.isfinite(fn) and t * (cost @ xn) + fn <= f - 0.25 * s * dec:
                    break
                s *= 0.5
                if s < 1e-14:
                    break
            if s < 1e-14:
                break
            x = xn
        gap, info = certificate(x, t)
        if gap < best_gap:
            best_gap, best_info, best_x = gap, info, x.copy()
        if best_gap <= tol or steps >= max_newton:
            break
        t *= growth
    return PathResult(best_x, float(best_gap), best_info, steps, bool(best_gap <= tol))
