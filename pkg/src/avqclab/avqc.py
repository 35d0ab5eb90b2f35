"""Arbitrarily varying quantum channels: construction, symmetrizability
functional, structured symmetrizers, EB-in-hull search and perturbation
experiments.

The symmetrizability functional of blocklength ``l`` is

    F_l(I) = max_{rho, sigma} min_{p, q} || sum_s p(s) N_s(rho) - sum_s q(s) N_s(sigma) ||_1

with ``s`` ranging over ``S^l`` (row-major, first letter slowest) and
``N_s`` the tensor product of the letters' channels.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import barrier, channels, linalg, simplex
from .channels import MeasurePrepareSpec, QuantumChannel
from .errors import DimensionOverflow, ValidationError

MAX_INDEX = 64
POSITIVE_THRESHOLD = 1e-2
SYMMETRIZER_TOL = 1e-8
DEPHASING_TOL = 1e-10


# -- the AVQC value --------------------------------------------------------


@dataclass(frozen=True)
class AVQC:
    """A finite set of channels with common input and output dimensions."""

    channels: tuple
    label: str = ""

    def __post_init__(self):
        chs = tuple(self.channels)
        if not chs:
            raise ValidationError("an AVQC needs at least one channel")
        dims = {(c.dim_in, c.dim_out) for c in chs}
        if len(dims) != 1:
            raise ValidationError(f"AVQC members have different dimensions {sorted(dims)}")
        for i, c in enumerate(chs):
            try:
                c.validate()
            except ValidationError as exc:
                raise ValidationError(f"channel {i}: {exc}") from exc
        object.__setattr__(self, "channels", chs)

    @property
    def n_states(self) -> int:
        return len(self.channels)

    @property
    def dim_in(self) -> int:
        return self.channels[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.channels[0].dim_out

    def __len__(self):
        return len(self.channels)

    def __getitem__(self, s):
        return self.channels[s]

    def mix(self, q) -> QuantumChannel:
        """The hull member ``sum_s q(s) N_s``."""
        return channels.mix(self.channels, q)


def state_sequences(n_states: int, l: int) -> list[tuple[int, ...]]:
    """All of ``S^l`` in row-major order (first letter varies slowest)."""
    return list(itertools.product(range(n_states), repeat=l))


def _check_size(avqc: AVQC, l: int) -> None:
    if l < 1:
        raise ValidationError("blocklength l must be at least 1")
    big = max(avqc.dim_in, avqc.dim_out) ** l
    if big > linalg.MAX_DIM:
        raise DimensionOverflow(f"dimension {big} at l={l} exceeds {linalg.MAX_DIM}")
    if avqc.n_states**l > MAX_INDEX:
        raise DimensionOverflow(f"|S|^l = {avqc.n_states ** l} exceeds {MAX_INDEX}")


def transfer_matrices(avqc: AVQC, l: int = 1) -> np.ndarray:
    """Stacked superoperators of the ``l``-letter channels.

    Entry ``s`` (row-major over ``S^l``) is the ``dOut^l**2 x dIn^l**2``
    matrix ``T`` with ``vec(N_s(rho)) = T vec(rho)`` for row-major ``vec``.
    """
    _check_size(avqc, l)
    single = []
    for ch in avqc.channels:
        k = channels.compress(ch).kraus
        single.append(np.einsum("kab,kcd->acbd", k, k.conj()))
    out = []
    for seq in state_sequences(avqc.n_states, l):
        t = single[seq[0]]
        for s in seq[1:]:
            u = single[s]
            # (a c)(b d) index layout per factor; combine factors pairwise
            a1, c1, b1, d1 = t.shape
            a2, c2, b2, d2 = u.shape
            t = np.einsum("acbd,ACBD->aAcCbBdD", t, u).reshape(a1 * a2, c1 * c2, b1 * b2, d1 * d2)
        a, c, b, d = t.shape
        out.append(t.reshape(a * c, b * d))
    return np.asarray(out)


def _outputs(tm: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(tm.shape[1])))
    return (tm @ rho.reshape(-1)).reshape(tm.shape[0], d, d)


def _adjoint(tm: np.ndarray, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_s w_s N_s^dagger(y)``."""
    d = int(round(np.sqrt(tm.shape[2])))
    t = np.tensordot(w, tm, 1)
    h = (t.conj().T @ y.reshape(-1)).reshape(d, d)
    return (h + h.conj().T) / 2


# -- constructors ----------------------------------------------------------

def _basis_projectors(d: int) -> np.ndarray:
    return np.asarray([linalg.proj(linalg.ket(i, d)) for i in range(d)])


def example_spec() -> MeasurePrepareSpec:
    """Two measure-and-prepare channels ``C^2 -> C^3``.

    Measure in the computational basis; on outcome ``x`` state ``s`` prepares
    ``|e_k><e_k|`` with ``k = x`` when ``s == x`` and ``k = 3`` otherwise.
    """
    m = _basis_projectors(2)
    e = _basis_projectors(3)
    prepared = np.asarray([[e[0], e[2]], [e[2], e[1]]])
    return MeasurePrepareSpec(m, prepared)


def build_example() -> AVQC:
    spec = example_spec()
    return AVQC(tuple(channels.from_measure_prepare(spec, s) for s in range(2)), "example")


def build_interpolated_family(lam: float, eta: float) -> AVQC:
    """Members ``(1 - lam) D_eta + lam N_s`` for the two example channels.

    ``D_eta(X) = (1 - eta) X + eta tr(X) pi_3`` with ``X`` embedded into ``C^3``.
    """
    for name, v in (("lambda", lam), ("eta", eta)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {v}")
    base = build_example()
    d = channels.depolarizing_embed(eta, 2, 3)
    if lam == 1.0:
        members = base.channels
    elif lam == 0.0:
        members = (d, d)
    else:
        members = tuple(channels.mix([d, n], [1 - lam, lam]) for n in base.channels)
    return AVQC(members, f"family(lambda={lam:g}, eta={eta:g})")


# -- inner minimization ----------------------------------------------------


@dataclass
class InnerResult:
    """Inner minimum with a primal-dual certificate.

    ``value`` is the trace norm at ``(p, q)``; ``lower`` is a dual bound, so
    the true minimum lies in ``[lower, value]``.
    """

    value: float
    p: np.ndarray
    q: np.ndarray
    lower: float
    y: np.ndarray
    newton_steps: int

    @property
    def gap(self) -> float:
        return self.value - self.lower


def _trace_norm_at(a, b, p, q) -> float:
    x = np.tensordot(p, a, 1) - np.tensordot(q, b, 1)
    return linalg.hermitian_trace_norm((x + x.conj().T) / 2)


def inner_min_outputs(a: np.ndarray, b: np.ndarray, tol: float = 1e-7, max_newton: int = 600) -> InnerResult:
    """``min_{p,q} ||sum p_s a_s - sum q_s b_s||_1`` for stacks of Hermitian matrices.

    Solved through the dual ``max_{-I <= Y <= I} min_s tr(Y a_s) - max_s tr(Y b_s)``
    with a log-barrier method. Weights are read off the barrier slacks, so
    each stage yields a feasible primal point and an exact gap; iteration
    stops once the gap is below ``tol``.
    """
    n, d, _ = a.shape
    m = b.shape[0]
    hb = barrier.hermitian_basis(d)
    nd = d * d
    ta = np.einsum("aij,sji->sa", hb, a).real
    tb = np.einsum("aij,sji->sa", hb, b).real
    rows = np.vstack(
        [
            np.hstack([ta, -np.ones((n, 1)), np.zeros((n, 1))]),
            np.hstack([-tb, np.zeros((m, 1)), np.ones((m, 1))]),
        ]
    )
    cost = np.zeros(nd + 2)
    cost[nd], cost[nd + 1] = -1.0, 1.0
    eye = np.eye(d)
    hb_t = hb.transpose(0, 2, 1).reshape(nd, -1)  # rows vec(E_b^T), so t @ hb_t.T = tr(R E_a R E_b)

    def ymat(v):
        return np.tensordot(v[:nd], hb, 1)

    def phi(v, derivs):
        y = ymat(v)
        s = rows @ v
        if np.any(s <= 0):
            return np.inf if not derivs else (np.inf, None, None)
        f = -barrier.logdet_pd(eye - y) - barrier.logdet_pd(eye + y) - np.sum(np.log(s))
        if not derivs:
            return f
        g = -rows.T @ (1 / s)
        h = (rows.T / s**2) @ rows
        for sign in (1.0, -1.0):
            r = np.linalg.inv(eye - sign * y)
            rr = r @ hb  # (nd, d, d)
            g[:nd] += sign * np.einsum("aii->a", rr).real
            t = (rr @ r).reshape(nd, -1)
            h[:nd, :nd] += (t @ hb_t.T).real
        return f, g, h

    def certificate(v, t):
        s = rows @ v
        p = 1 / (t * s[:n])
        q = 1 / (t * s[n:])
        p, q = p / p.sum(), q / q.sum()
        primal = _trace_norm_at(a, b, p, q)
        yv = v[:nd]
        dual = float((ta @ yv).min() - (tb @ yv).max())
        return primal - dual, (primal, dual, p, q, ymat(v))

    v0 = np.zeros(nd + 2)
    v0[nd], v0[nd + 1] = -1.0, 1.0
    res = barrier.path_following(v0, cost, phi, certificate, tol=tol, max_newton=max_newton)
    primal, dual, p, q, y = res.certificate
    return InnerResult(float(primal), p, q, float(dual), y, res.newton_steps)


def inner_min(avqc: AVQC, l: int, rho, sigma, tol: float = 1e-7) -> InnerResult:
    """Inner minimization of ``F_l`` at fixed states ``rho, sigma`` on ``C^{dIn^l}``."""
    tm = transfer_matrices(avqc, l)
    d = avqc.dim_in**l
    rho = linalg.check_density(rho)
    sigma = linalg.check_density(sigma)
    if rho.shape[0] != d or sigma.shape[0] != d:
        raise ValidationError(f"states must act on dimension {d}")
    return inner_min_outputs(_outputs(tm, rho), _outputs(tm, sigma), tol)


def inner_min_grid(a: np.ndarray, b: np.ndarray, step: float = 1e-3, rounds: int = 4) -> tuple[float, np.ndarray, np.ndarray]:
    """Brute-force oracle for :func:`inner_min_outputs` on small index sets.

    With two weights per side the grid of spacing ``step`` is exhaustive.
    For three or four weights a coarse simplex grid is searched first and
    then refined ``rounds`` times around the best point; the objective is
    convex, so refinement cannot leave a better basin behind.
    """
    n, m = a.shape[0], b.shape[0]
    if max(n, m) > 4:
        raise ValidationError("grid oracle supports at most 4 weights per side")
    if n <= 2 and m <= 2:
        steps = int(round(1 / step))
        gp, gq = simplex.grid(n, steps), simplex.grid(m, steps)
        return _grid_search(a, b, gp, gq)
    steps = 24
    gp, gq = simplex.grid(n, steps), simplex.grid(m, steps)
    best = _grid_search(a, b, gp, gq)
    radius = 2.0 / steps
    for _ in range(rounds):
        gp = _local_grid(best[1], radius, 12)
        gq = _local_grid(best[2], radius, 12)
        cand = _grid_search(a, b, gp, gq)
        if cand[0] <= best[0]:
            best = cand
        radius /= 4
    return best


def _local_grid(center: np.ndarray, radius: float, steps: int) -> np.ndarray:
    n = center.size
    offs = np.linspace(-radius, radius, steps + 1)
    pts = []
    for delta in itertools.product(offs, repeat=n - 1):
        x = center.copy()
        x[:-1] += delta
        x[-1] = 1 - x[:-1].sum()
        if np.all(x >= -1e-15):
            pts.append(np.clip(x, 0, None))
    pts.append(center)
    return np.asarray(pts)


def _grid_search(a, b, gp, gq, chunk: int = 20000):
    xa = np.tensordot(gp, a, 1)
    xb = np.tensordot(gq, b, 1)
    best = (np.inf, None, None)
    rows_per = max(1, chunk // len(gq))
    for i in range(0, len(gp), rows_per):
        diff = xa[i : i + rows_per, None] - xb[None]
        w = np.linalg.eigvalsh(diff)
        vals = np.abs(w).sum(axis=-1)
        j = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[j] < best[0]:
            best = (float(vals[j]), gp[i + j[0]], gq[j[1]])
    return best


def objective(avqc: AVQC, l: int, rho, sigma, p, q) -> float:
    """``||sum p N_s(rho) - sum q N_s(sigma)||_1`` at given weights."""
    tm = transfer_matrices(avqc, l)
    a = _outputs(tm, np.asarray(rho, dtype=complex))
    b = _outputs(tm, np.asarray(sigma, dtype=complex))
    n = tm.shape[0]
    return _trace_norm_at(a, b, simplex.check_weights(p, n, 1e-8), simplex.check_weights(q, n, 1e-8))


# -- structured symmetrizers -----------------------------------------------


@dataclass
class StructuredSymmetrizer:
    """Weights ``p[x, s]`` and the largest pairwise residual trace norm."""

    weights: np.ndarray
    residual: float

    @property
    def feasible(self) -> bool:
        return self.residual <= SYMMETRIZER_TOL


def symmetrizer_residuals(spec: MeasurePrepareSpec, p) -> np.ndarray:
    """Matrix of ``||sum_s p_a(s) rho_{s,b} - p_b(s) rho_{s,a}||_1`` over pairs ``(a, b)``."""
    p = np.asarray(p, dtype=float)
    prep = spec.prepared
    nx = spec.n_outcomes
    out = np.zeros((nx, nx))
    for a_, b_ in itertools.combinations(range(nx), 2):
        r = np.tensordot(p[a_], prep[:, b_], 1) - np.tensordot(p[b_], prep[:, a_], 1)
        out[a_, b_] = out[b_, a_] = linalg.hermitian_trace_norm((r + r.conj().T) / 2)
    return out


def find_structured_symmetrizer(spec: MeasurePrepareSpec) -> StructuredSymmetrizer:
    """Solve ``sum_s p_{x'}(s) rho_{s,x} = sum_s p_x(s) rho_{s,x'}`` for all pairs.

    A linear program minimizes the entrywise l1 norm of all residuals over
    the product of simplices. The returned residual is the largest pairwise
    trace norm at the solution; it is at most ``1e-8`` exactly when an
    exact symmetrizer was found up to solver precision.
    """
    nx, ns = spec.n_outcomes, spec.n_states
    if nx > 8 or ns > 8:
        raise ValidationError("structured symmetrizer search supports |X|, |S| <= 8")
    if nx == 1:
        return StructuredSymmetrizer(np.full((1, ns), 1.0 / ns), 0.0)
    d = spec.dim_out
    iu = np.triu_indices(d)
    prep = spec.prepared
    blocks = []
    for a_, b_ in itertools.combinations(range(nx), 2):
        # residual entries are linear in the flattened p (index x * ns + s)
        coef = np.zeros((2 * len(iu[0]), nx * ns))
        for s in range(ns):
            for x, sign, other in ((a_, 1.0, b_), (b_, -1.0, a_)):
                entries = prep[s, other][iu]
                coef[: len(iu[0]), x * ns + s] += sign * entries.real
                coef[len(iu[0]) :, x * ns + s] += sign * entries.imag
        blocks.append(coef)
    r = np.vstack(blocks)
    r = r[np.any(np.abs(r) > 0, axis=1)]
    nv, nr = nx * ns, r.shape[0]
    c = np.concatenate([np.zeros(nv), np.ones(nr)])
    a_ub = np.block([[r, -np.eye(nr)], [-r, -np.eye(nr)]])
    b_ub = np.zeros(2 * nr)
    a_eq = np.zeros((nx, nv + nr))
    for x in range(nx):
        a_eq[x, x * ns : (x + 1) * ns] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.ones(nx), bounds=[(0, None)] * (nv + nr), method="highs")
    p = res.x[:nv].reshape(nx, ns) if res.status == 0 else np.full((nx, ns), 1.0 / ns)
    p = np.clip(p, 0.0, None)
    p /= p.sum(axis=1, keepdims=True)
    resid = float(symmetrizer_residuals(spec, p).max())
    return StructuredSymmetrizer(p, resid)


def lift_structured_symmetrizer(spec: MeasurePrepareSpec, p, states: Sequence) -> np.ndarray:
    """Weights ``q_x(s) = sum_y p_y(s) tr(M_y nu_x)`` for input states ``nu_x``.

    For any two states the lifted weights satisfy
    ``sum_s q_b(s) N_s(nu_a) = sum_s q_a(s) N_s(nu_b)``.

    Raises
    ------
    ValidationError
        If ``p`` is not a symmetrizer of ``spec`` within ``1e-8``.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.n_outcomes, spec.n_states):
        raise ValidationError(f"weights must have shape {(spec.n_outcomes, spec.n_states)}")
    for row in p:
        simplex.check_weights(row, tol=1e-8)
    resid = symmetrizer_residuals(spec, p).max()
    if resid > SYMMETRIZER_TOL:
        raise ValidationError(f"weights are not a symmetrizer (residual {resid:.3e})")
    out = []
    for nu in states:
        nu = linalg.check_density(nu)
        probs = np.einsum("xij,ji->x", spec.povm, nu).real
        out.append(probs @ p)
    return np.asarray(out)


def measure_prepare_form(avqc: AVQC, tol: float = DEPHASING_TOL) -> tuple[MeasurePrepareSpec, float] | None:
    """Measure-and-prepare description of channels that ignore input coherences.

    If every member maps each ``|i><j|`` with ``i != j`` (computational basis)
    to nearly zero, the channels coincide with measuring in that basis and
    preparing ``N_s(|x><x|)``. Returns the spec and the largest trace norm of
    a dropped off-diagonal image, or ``None``.
    """
    d = avqc.dim_in
    err = 0.0
    for ch in avqc.channels:
        for i, j in itertools.permutations(range(d), 2):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            err = max(err, float(np.sum(np.linalg.svd(ch(e), compute_uv=False))))
    if err > tol:
        return None
    m = _basis_projectors(d)
    prepared = []
    for ch in avqc.channels:
        row = []
        for x in range(d):
            out = ch(m[x])
            out = (out + out.conj().T) / 2
            row.append(out / np.trace(out).real)
        prepared.append(row)
    return MeasurePrepareSpec(m, np.asarray(prepared)), err


def tensor_spec(spec: MeasurePrepareSpec, l: int) -> MeasurePrepareSpec:
    """The ``l``-letter spec: product measurement, product preparations, ``S^l`` row-major."""
    povm, prep = spec.povm, spec.prepared
    xs = list(itertools.product(range(spec.n_outcomes), repeat=l))
    ss = state_sequences(spec.n_states, l)
    big_povm = np.asarray([linalg.tensor(*[povm[x] for x in xx]) for xx in xs])
    big_prep = np.asarray([[linalg.tensor(*[prep[s, x] for s, x in zip(sq, xx)]) for xx in xs] for sq in ss])
    return MeasurePrepareSpec(big_povm, big_prep)


def product_weights(p: np.ndarray, l: int) -> np.ndarray:
    """``p_{x^l}(s^l) = prod_i p_{x_i}(s_i)`` in row-major order on both indices."""
    nx = p.shape[0]
    rows = []
    for xx in itertools.product(range(nx), repeat=l):
        w = np.ones(1)
        for x in xx:
            w = np.kron(w, p[x])
        rows.append(w)
    return np.asarray(rows)


# -- the functional F_l ----------------------------------------------------


@dataclass
class Budget:
    """Optimization settings for :func:`f_value`.

    ``starts`` random pure-state pairs (plus a few deterministic ones and any
    ``initial_pairs``) seed the ascent. ``ascent_tol`` is the inner-solver
    gap used while climbing; the final witness is re-solved to ``final_tol``.
    """

    starts: int = 64
    seed: int = 0
    ascent_tol: float = 1e-5
    final_tol: float = 1e-7
    fw_tol: float = 1e-6
    max_steps: int = 200
    use_structure: bool = True
    initial_pairs: tuple = ()


@dataclass
class SymmetrizabilityReport:
    l: int
    value: float
    witness_states: tuple
    inner_weights: tuple
    method_diagnostics: dict = field(default_factory=dict)

    @property
    def certificate(self) -> str:
        return self.method_diagnostics.get("certificate", "")

    @property
    def positive(self) -> bool:
        return self.certificate == "ascent-positive"

    def to_dict(self) -> dict:
        from .io import matrix_to_json

        return {
            "l": self.l,
            "value": self.value,
            "certificate": self.certificate,
            "witness_states": [matrix_to_json(m) for m in self.witness_states],
            "inner_weights": [list(map(float, w)) for w in self.inner_weights],
            "method_diagnostics": self.method_diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _top_projector(h: np.ndarray) -> np.ndarray:
    _, v = np.linalg.eigh(h)
    return linalg.proj(v[:, -1])


@dataclass
class _Climb:
    value: float
    rho: np.ndarray
    sigma: np.ndarray
    inner: InnerResult
    fw_gap: float
    steps: int


def project_density(m: np.ndarray) -> np.ndarray:
    """Nearest density matrix in Frobenius norm (eigenvalues projected to the simplex)."""
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * simplex.project(w)) @ v.conj().T


def _climb(tm, rho, sigma, budget: Budget) -> _Climb:
    """Ascent of ``min_{p,q} ||...||_1`` in ``(rho, sigma)``.

    The gradient of the inner minimum (Danskin) at the optimal dual ``Y`` is
    ``sum p N_s^dagger(Y)`` for ``rho`` and ``-sum q N_s^dagger(Y)`` for
    ``sigma``. Each step first tries a Frank-Wolfe move towards the top
    eigenprojectors; when no step length down to 1/64 improves the value it
    falls back to a projected gradient step with an adaptive length.
    """

    def solve(r, s):
        return inner_min_outputs(_outputs(tm, r), _outputs(tm, s), budget.ascent_tol)

    res = solve(rho, sigma)
    fw_gap = np.inf
    step = 0
    pg_len = 1.0
    for step in range(1, budget.max_steps + 1):
        h_r = _adjoint(tm, res.p, res.y)
        h_s = -_adjoint(tm, res.q, res.y)
        r_hat, s_hat = _top_projector(h_r), _top_projector(h_s)
        fw_gap = float(np.trace(h_r @ (r_hat - rho)).real + np.trace(h_s @ (s_hat - sigma)).real)
        if fw_gap < budget.fw_tol:
            break
        moved = False
        tau = 1.0
        while tau >= 1 / 64:
            r2 = rho + tau * (r_hat - rho)
            s2 = sigma + tau * (s_hat - sigma)
            cand = solve(r2, s2)
            if cand.value > res.value + 1e-3 * tau * fw_gap:
                rho, sigma, res, moved = r2, s2, cand, True
                break
            tau /= 2
        while not moved and pg_len > 1e-8:
            r2 = project_density(rho + pg_len * h_r)
            s2 = project_density(sigma + pg_len * h_s)
            rise = float(np.trace(h_r @ (r2 - rho)).real + np.trace(h_s @ (s2 - sigma)).real)
            cand = solve(r2, s2)
            if rise > 0 and cand.value >= res.value + 1e-4 * rise:
                rho, sigma, res, moved = r2, s2, cand, True
                pg_len = min(2 * pg_len, 1e3)
            else:
                pg_len /= 2
        if not moved:
            break
    return _Climb(res.value, rho, sigma, res, fw_gap, step)


def _start_pairs(d: int, budget: Budget) -> list[tuple[np.ndarray, np.ndarray]]:
    pairs = [(linalg.check_density(r), linalg.check_density(s)) for r, s in budget.initial_pairs]
    e0, e1 = linalg.ket(0, d), linalg.ket(1, d)
    pairs.append((linalg.proj(e0), linalg.proj(e1)))
    pairs.append((linalg.proj((e0 + e1) / np.sqrt(2)), linalg.proj((e0 - e1) / np.sqrt(2))))
    rng = np.random.default_rng(budget.seed)
    while len(pairs) < budget.starts + len(budget.initial_pairs):
        pairs.append((linalg.proj(linalg.random_pure(d, rng)), linalg.proj(linalg.random_pure(d, rng))))
    return pairs


def _structured_report(avqc: AVQC, l: int, found) -> SymmetrizabilityReport | None:
    spec, offdiag = found
    sol = find_structured_symmetrizer(spec)
    if not sol.feasible:
        return None
    big = tensor_spec(spec, l) if l > 1 else spec
    p_big = product_weights(sol.weights, l) if l > 1 else sol.weights
    residual = float(symmetrizer_residuals(big, p_big).max())
    if residual > SYMMETRIZER_TOL:
        return None
    d = avqc.dim_in**l
    rho, sigma = linalg.proj(linalg.ket(0, d)), linalg.proj(linalg.ket(d - 1, d))
    # sum_s q_sigma N(rho) = sum_s q_rho N(sigma), so (p, q) = (q_sigma, q_rho)
    q_rho, q_sigma = lift_structured_symmetrizer(big, p_big, [rho, sigma])
    # F_l <= max residual for exact measure-prepare members; the dropped
    # coherences of each side add at most (d - 1) * offdiag
    bound = residual + 2 * (d - 1) * offdiag * l
    at_witness = objective(avqc, l, rho, sigma, q_sigma, q_rho)
    return SymmetrizabilityReport(
        l=l,
        value=float(max(bound, at_witness)),
        witness_states=(rho, sigma),
        inner_weights=(q_sigma, q_rho),
        method_diagnostics={
            "certificate": "structured-zero",
            "symmetrizer_residual": residual,
            "dephasing_error": offdiag,
            "symmetrizer": sol.weights.tolist(),
            "upper_bound": float(bound),
            "value_at_witness": float(at_witness),
        },
    )


def f_value(avqc: AVQC, l: int = 1, budget: Budget | None = None) -> SymmetrizabilityReport:
    """The symmetrizability functional ``F_l``.

    Members that are measure-and-prepare in the computational basis are first
    checked for an exact symmetrizer; success gives a certified upper bound
    (``certificate = "structured-zero"``). Otherwise the max over states is
    climbed from multiple starts and the reported value is a lower bound,
    labeled ``"ascent-positive"`` when it exceeds ``1e-2`` and the best
    climb converged, ``"ascent-heuristic"`` otherwise.
    """
    budget = budget or Budget()
    if l not in (1, 2, 3):
        raise ValidationError("l must be 1, 2 or 3")
    _check_size(avqc, l)
    if budget.use_structure:
        found = measure_prepare_form(avqc)
        if found is not None:
            report = _structured_report(avqc, l, found)
            if report is not None:
                return report
    tm = transfer_matrices(avqc, l)
    d = avqc.dim_in**l
    if l > 1 and not budget.initial_pairs:
        # product witnesses of the one-letter problem are feasible here
        one = f_value(avqc, 1, Budget(**{**budget.__dict__, "use_structure": False}))
        r1, s1 = one.witness_states
        seeded = (linalg.tensor(*[r1] * l), linalg.tensor(*[s1] * l))
        budget = Budget(**{**budget.__dict__, "initial_pairs": (seeded,)})
    climbs = [_climb(tm, r, s, budget) for r, s in _start_pairs(d, budget)]
    values = np.array([c.value for c in climbs])
    best = climbs[int(np.argmax(values))]
    final = inner_min_outputs(_outputs(tm, best.rho), _outputs(tm, best.sigma), budget.final_tol)
    converged = bool(best.fw_gap < budget.fw_tol)
    value = final.value
    cert = "ascent-positive" if value > POSITIVE_THRESHOLD and converged else "ascent-heuristic"
    return SymmetrizabilityReport(
        l=l,
        value=float(value),
        witness_states=(best.rho, best.sigma),
        inner_weights=(final.p, final.q),
        method_diagnostics={
            "certificate": cert,
            "starts": len(climbs),
            "converged_starts": int(sum(c.fw_gap < budget.fw_tol for c in climbs)),
            "best_converged": converged,
            "best_fw_gap": float(best.fw_gap),
            "agreeing_starts": int(np.sum(values >= values.max() - 1e-4)),
            "inner_gap": float(final.gap),
            "lower_bound": float(final.lower),
            "seed": budget.seed,
        },
    )


# -- entanglement breaking channels in the hull ----------------------------


@dataclass
class EBHullResult:
    """Best hull weights, the PT eigenvalue there and a dual upper bound on it."""

    best_q: np.ndarray
    min_pt_eig: float
    upper_bound: float
    verdict: str
    newton_steps: int


def _pt_chois(avqc: AVQC) -> np.ndarray:
    dims = (avqc.dim_in, avqc.dim_out)
    return np.asarray([linalg.partial_transpose(ch.choi, dims, on="B") for ch in avqc.channels])


def min_pt_eig_at(avqc: AVQC, q) -> float:
    q = simplex.check_weights(q, avqc.n_states)
    return float(linalg.eigvalsh(np.tensordot(q, _pt_chois(avqc), 1))[0])


def eb_in_hull_search(avqc: AVQC, tol: float = 1e-10) -> EBHullResult:
    """Maximize ``lambda_min(PT(Choi(sum q_s N_s)))`` over the simplex.

    The objective is concave, and ``lambda_min(C(q)) <= tr(W C(q)) <= max_s
    tr(W C_s)`` for any state ``W``. A barrier method supplies both the
    maximizer and such a ``W``, so the optimum is bracketed to ``tol``.

    Verdicts: ``EBFound`` if the maximum is at least ``-1e-9`` and
    ``dIn * dOut <= 6``; ``NoneFoundCertified`` if the dual bound is below
    ``-1e-9`` in those dimensions; ``NoneFoundHeuristic`` otherwise.
    """
    c = _pt_chois(avqc)
    n, d, _ = c.shape
    eye = np.eye(d)
    eq = np.concatenate([np.ones(n), [0.0]])[None]
    cost = np.zeros(n + 1)
    cost[n] = -1.0

    def phi(x, derivs):
        q, tau = x[:n], x[n]
        if np.any(q <= 0):
            return np.inf if not derivs else (np.inf, None, None)
        m = np.tensordot(q, c, 1) - tau * eye
        f = -barrier.logdet_pd(m) - np.sum(np.log(q))
        if not derivs:
            return f
        r = np.linalg.inv(m)
        rc = r @ c  # (n, d, d)
        g = np.concatenate([-np.einsum("sii->s", rc).real - 1 / q, [np.trace(r).real]])
        h = np.zeros((n + 1, n + 1))
        h[:n, :n] = np.einsum("aij,bji->ab", rc, rc).real + np.diag(1 / q**2)
        rr = r @ r
        h[:n, n] = h[n, :n] = -np.einsum("ij,sji->s", rr, c).real
        h[n, n] = np.trace(rr).real
        return f, g, h

    def certificate(x, t):
        q = np.clip(x[:n], 0, None)
        q /= q.sum()
        lo = float(linalg.eigvalsh(np.tensordot(q, c, 1))[0])
        w = np.linalg.inv(np.tensordot(x[:n], c, 1) - x[n] * eye)
        w = (w + w.conj().T) / 2
        w /= np.trace(w).real
        hi = float(np.einsum("ij,sji->s", w, c).real.max())
        return hi - lo, (q, lo, hi)

    q0 = simplex.uniform(n)
    x0 = np.concatenate([q0, [linalg.eigvalsh(np.tensordot(q0, c, 1))[0] - 1.0]])
    res = barrier.path_following(x0, cost, phi, certificate, eq=eq, tol=tol)
    q, lo, hi = res.certificate
    small = avqc.dim_in * avqc.dim_out <= channels.PPT_EXACT_DIM
    if small and lo >= -channels.EB_TOL:
        verdict = "EBFound"
    elif small and hi < -channels.EB_TOL:
        verdict = "NoneFoundCertified"
    else:
        verdict = "NoneFoundHeuristic"
    return EBHullResult(q, lo, hi, verdict, res.newton_steps)


# -- perturbations ---------------------------------------------------------


@dataclass
class PerturbationTable:
    base_value: float
    distances: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def lipschitz_excess(self) -> np.ndarray:
        """``|F(I) - F(I')| - 2 D(I, I')`` per row; nonpositive up to tolerance."""
        return np.abs(self.base_value - self.values) - 2 * self.distances


def perturb(avqc: AVQC, weight_cap: float, rng: np.random.Generator) -> tuple[AVQC, np.ndarray]:
    """Mix each member with an independent random channel at weight in ``[0, weight_cap]``."""
    members, ws = [], []
    for ch in avqc.channels:
        w = float(rng.uniform(0, weight_cap))
        r = channels.random_channel(avqc.dim_in, avqc.dim_out, rng)
        members.append(channels.mix([ch, r], [1 - w, w]))
        ws.append(w)
    return AVQC(tuple(members), f"{avqc.label} perturbed"), np.asarray(ws)


def perturbation_experiment(
    avqc: AVQC,
    noise: float,
    trials: int,
    seed: int = 0,
    starts: int = 2,
    diamond_starts: int = 16,
    base: SymmetrizabilityReport | None = None,
    max_steps: int = 30,
) -> PerturbationTable:
    """Random nearby AVQCs with their set distance and ``F_1``.

    Mixing weights are at most ``noise / 2`` so that each member moves by at
    most ``noise`` in diamond norm. Every perturbed ``F_1`` ascent is also
    started from the base witness, which makes the lower direction of the
    Lipschitz bound hold by construction of the starts. The perturbed
    values are lower bounds whatever the step cap, so a short climb
    (``max_steps``) is enough for the upper direction as long as the base
    value is converged.
    """
    if noise < 0:
        raise ValidationError("noise must be nonnegative")
    base = base or f_value(avqc, 1, Budget(starts=64, seed=seed))
    rng = np.random.default_rng(seed)
    dist, vals, ws = [], [], []
    for k in range(trials):
        other, w = perturb(avqc, noise / 2, rng)
        dist.append(channels.set_distance(avqc.channels, other.channels, starts=diamond_starts, seed=seed + k))
        budget = Budget(starts=starts, seed=seed + k, max_steps=max_steps, initial_pairs=(base.witness_states,))
        rep = f_value(other, 1, budget)
        vals.append(rep.value)
        ws.append(w)
    return PerturbationTable(base.value, np.asarray(dist), np.asarray(vals), np.asarray(ws))
