"""Entropic quantities: binary entropy, Holevo information, its worst case
over the convex hull of an AVQC, and coherent information.

All logarithms are base two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import channels, linalg, simplex
from .avqc import AVQC, build_example
from .errors import DimensionMismatch, OutOfRange, UnsupportedSize, ValidationError


def binary_entropy(t: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise OutOfRange(f"binary entropy needs t in [0, 1], got {t}")
    return linalg.entropy_of_spectrum([t, 1.0 - t])


def _check_outputs(states) -> np.ndarray:
    w = [linalg.check_density(s) for s in states]
    if len({s.shape for s in w}) != 1:
        raise DimensionMismatch("cq outputs have different dimensions")
    return np.asarray(w)


def _entropy(rho: np.ndarray) -> float:
    return linalg.entropy_of_spectrum(np.clip(linalg.eigvalsh(rho), 0.0, None))


def holevo_chi(outputs, p) -> float:
    """``S(sum p_x W_x) - sum p_x S(W_x)`` for a cq channel ``x -> W_x``."""
    w = _check_outputs(outputs)
    p = simplex.check_weights(p, len(w))
    avg = np.tensordot(p, w, 1)
    return max(0.0, _entropy(avg) - float(sum(px * _entropy(wx) for px, wx in zip(p, w))))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``D(rho || sigma)`` in bits; ``inf`` when ``supp rho`` is not inside ``supp sigma``."""
    wr, vr = np.linalg.eigh(rho)
    ws, vs = np.linalg.eigh(sigma)
    keep = ws > 1e-14
    # weight of rho outside the support of sigma
    inside = vs[:, keep]
    if np.trace(rho).real - np.trace(inside.conj().T @ rho @ inside).real > 1e-12:
        return np.inf
    log_s = (inside * np.log2(ws[keep])) @ inside.conj().T
    wr = np.clip(wr, 0.0, None)
    pos = wr > 0
    neg_ent = float(np.sum(wr[pos] * np.log2(wr[pos])))
    return max(0.0, neg_ent - float(np.trace(rho @ log_s).real))


@dataclass
class ChiMax:
    value: float
    p: np.ndarray
    upper: float
    iterations: int


def max_chi(outputs, tol: float = 1e-7, max_iter: int = 100000) -> ChiMax:
    """Holevo capacity ``max_p chi(p, W)`` of a cq channel.

    Blahut-Arimoto updates ``p_x <- p_x 2^{D(W_x || W_p)}``. Every iterate
    gives the bracket ``chi(p) <= C <= max_x D(W_x || W_p)``; iteration stops
    once the bracket is narrower than ``tol``. With two inputs the updates
    crawl when the outputs nearly coincide, so the concave scalar problem is
    solved by bounded search instead and only the bracket is reported.
    """
    w = _check_outputs(outputs)
    n = len(w)
    if n == 2:
        res = minimize_scalar(lambda t: -holevo_chi(w, [t, 1 - t]), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
        p = np.array([res.x, 1 - res.x])
        avg = np.tensordot(p, w, 1)
        div = np.array([relative_entropy(wx, avg) for wx in w])
        return ChiMax(holevo_chi(w, p), p, float(div.max()), int(res.nfev))
    p = simplex.uniform(n)
    it = 0
    for it in range(1, max_iter + 1):
        avg = np.tensordot(p, w, 1)
        div = np.array([relative_entropy(wx, avg) for wx in w])
        chi = float(p @ div)
        upper = float(div.max())
        if upper - chi <= tol:
            break
        p = p * np.exp2(div - upper)
        p /= p.sum()
    return ChiMax(chi, p, upper, it)


def cq_outputs(ch: channels.QuantumChannel, inputs) -> np.ndarray:
    return np.asarray([ch(linalg.proj(linalg.check_state_vector(v))) for v in inputs])


@dataclass
class ChiMinimax:
    """Worst hull point for the Holevo capacity with fixed input states."""

    value: float
    worst_q: np.ndarray
    best_p: np.ndarray
    grid_q: np.ndarray
    grid_values: np.ndarray


def chi_minimax_lower_bound(avqc: AVQC, inputs=None, grid: int = 1001, tol: float = 1e-7) -> ChiMinimax:
    """``min_{q in hull} max_p chi(p, x -> N_q(|v_x><v_x|))``.

    ``inputs`` default to the computational basis. For two members the hull
    is the segment ``q = (t, 1 - t)`` with ``grid`` points in ``t``, followed
    by a bounded scalar search between the grid neighbours of the argmin
    (the inner maximum is convex in the channel). For three members a
    simplex grid of about ``grid`` points is searched and then refined
    locally. Because each evaluated point lies in the hull, the value is an
    upper bound on the exact minimax (by at most the grid error) and a lower
    bound on the randomness-assisted capacity.
    """
    n = avqc.n_states
    if n > 3:
        raise UnsupportedSize(f"hull search supports at most 3 members, got {n}")
    if grid < 2:
        raise ValidationError("grid must have at least 2 points")
    d = avqc.dim_in
    inputs = [linalg.ket(i, d) for i in range(d)] if inputs is None else list(inputs)
    per_channel = np.asarray([cq_outputs(ch, inputs) for ch in avqc.channels])  # (S, X, d, d)

    def inner(q):
        return max_chi(np.tensordot(q, per_channel, 1), tol)

    if n == 1:
        pts = np.ones((1, 1))
    elif n == 2:
        t = np.linspace(0.0, 1.0, grid)
        pts = np.column_stack([t, 1 - t])
    else:
        steps = max(2, int(np.ceil((np.sqrt(8 * grid + 1) - 3) / 2)))
        pts = simplex.grid(3, steps)
    vals = np.array([inner(q).value for q in pts])
    k = int(np.argmin(vals))
    best_q, best = pts[k], vals[k]
    if n == 2:
        lo, hi = t[max(0, k - 1)], t[min(grid - 1, k + 1)]
        res = minimize_scalar(lambda s: inner(np.array([s, 1 - s])).value, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if res.fun < best:
            best_q, best = np.array([res.x, 1 - res.x]), float(res.fun)
    elif n == 3:
        radius = 1.0 / steps
        for _ in range(4):
            offs = np.linspace(-radius, radius, 9)
            for a in offs:
                for b in offs:
                    q = best_q + np.array([a, b, -a - b])
                    if np.all(q >= 0):
                        v = inner(q).value
                        if v < best:
                            best_q, best = q, v
            radius /= 4
    final = inner(best_q)
    return ChiMinimax(float(final.value), best_q, final.p, pts, vals)


def capacity_curve(ts) -> list[tuple[float, float, float, float]]:
    """Rows ``(t, chi, closed_form, abs_err)`` for the example at hull point ``t``.

    ``chi`` is the Holevo information of uniform basis inputs through
    ``t N_1 + (1 - t) N_2``; the closed form is ``1 - h(t) / 2``.
    """
    ex = build_example()
    e = [linalg.ket(0, 2), linalg.ket(1, 2)]
    rows = []
    for t in ts:
        ch = ex.mix([t, 1 - t])
        chi = holevo_chi(cq_outputs(ch, e), [0.5, 0.5])
        closed = 1 - binary_entropy(t) / 2
        rows.append((float(t), chi, closed, abs(chi - closed)))
    return rows


def coherent_information(rho, ch: channels.QuantumChannel) -> float:
    """``S(N(rho)) - S((N (x) id)(|psi><psi|))`` for a purification ``psi`` of ``rho``."""
    rho = linalg.check_density(rho)
    d = rho.shape[0]
    if d != ch.dim_in:
        raise DimensionMismatch(f"state of dim {d} into channel with dim_in {ch.dim_in}")
    psi = linalg.purify(rho).reshape(d, d)
    # psi[i, r]: system index i, reference index r
    vs = np.einsum("koi,ir->kor", ch.kraus, psi).reshape(ch.rank, -1)
    joint = vs.T @ vs.conj()
    return _entropy(ch(rho)) - _entropy(joint)


def _hull_points(n: int, grid: int) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.linspace(0.0, 1.0, grid)
        return np.column_stack([t, 1 - t])
    steps = max(2, int(np.ceil((np.sqrt(8 * grid + 1) - 3) / 2)))
    return simplex.grid(n, steps)


@dataclass
class CoherentMinimax:
    value: float
    rho: np.ndarray
    worst_q: np.ndarray


def ic_minimax_single_letter(avqc: AVQC, grid: int = 21, starts: int = 4, seed: int = 0, max_evals: int = 400) -> CoherentMinimax:
    """Heuristic ``max_rho min_{q in hull grid} I_c(rho, N_q)``.

    ``rho = A A^dagger / tr(A A^dagger)`` is optimized by Nelder-Mead from the
    maximally mixed state and ``starts - 1`` random points. The pure input
    ``|0><0|`` (value 0) is always included, so the result is at least 0.
    """
    n = avqc.n_states
    if n > 3:
        raise UnsupportedSize(f"hull search supports at most 3 members, got {n}")
    d = avqc.dim_in
    hull = [avqc.mix(q) for q in _hull_points(n, grid)]
    qs = _hull_points(n, grid)

    def rho_of(x):
        a = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        r = a @ a.conj().T
        tr = np.trace(r).real
        return r / tr if tr > 1e-300 else linalg.maximally_mixed(d)

    def worst(rho):
        vals = [coherent_information(rho, ch) for ch in hull]
        k = int(np.argmin(vals))
        return vals[k], k

    rng = np.random.default_rng(seed)
    pure = linalg.proj(linalg.ket(0, d))
    best_val, best_k = worst(pure)
    best_rho = pure
    x0s = [np.concatenate([np.eye(d).reshape(-1), np.zeros(d * d)])]
    x0s += [rng.standard_normal(2 * d * d) for _ in range(max(0, starts - 1))]
    for x0 in x0s:
        res = minimize(lambda x: -worst(rho_of(x))[0], x0, method="Nelder-Mead", options={"maxfev": max_evals, "xatol": 1e-8, "fatol": 1e-10})
        rho = rho_of(res.x)
        val, k = worst(rho)
        if val > best_val:
            best_val, best_k, best_rho = val, k, rho
    return CoherentMinimax(float(best_val), best_rho, qs[best_k])
