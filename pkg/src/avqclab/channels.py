"""Quantum channels in Kraus form, with Choi matrices, measure-and-prepare
construction, entanglement-breaking test and diamond-norm estimates.

Conventions
-----------
A channel ``N: B(C^dIn) -> B(C^dOut)`` stores its Kraus operators as an array
of shape ``(rank, dOut, dIn)``. The Choi matrix is normalized,
``choi = (id (x) N)(|Omega><Omega|)`` with the reference factor first, so it
is a state on ``C^dIn (x) C^dOut``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg, simplex
from .errors import DimensionMismatch, DimensionOverflow, InvalidSpec, ValidationError

CPTP_TOL = 1e-9
POVM_TOL = 1e-9


class QuantumChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    __slots__ = ("kraus", "dim_in", "dim_out", "_choi")

    def __init__(self, kraus, validate: bool = True, tol: float = CPTP_TOL):
        k = np.asarray(kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise ValidationError(f"Kraus array must have shape (rank, dOut, dIn), got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValidationError("Kraus operators have non-finite entries")
        self.kraus = k
        self.kraus.setflags(write=False)
        self.dim_out, self.dim_in = k.shape[1], k.shape[2]
        if max(self.dim_in, self.dim_out) > linalg.MAX_DIM:
            raise DimensionOverflow(f"channel dimensions {self.dim_in}->{self.dim_out} exceed {linalg.MAX_DIM}")
        self._choi = None
        if validate:
            self.validate(tol)

    def __repr__(self):
        return f"QuantumChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, rank={self.rank})"

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    @property
    def choi(self) -> np.ndarray:
        if self._choi is None:
            d = self.dim_in
            # (id (x) K)|Omega> reshaped as the dIn x dOut matrix K^T / sqrt(d)
            vecs = np.transpose(self.kraus, (0, 2, 1)).reshape(self.rank, d * self.dim_out) / np.sqrt(d)
            c = vecs.T @ vecs.conj()
            c.setflags(write=False)
            self._choi = c
        return self._choi

    def validate(self, tol: float = CPTP_TOL) -> None:
        """Check trace preservation and complete positivity.

        Raises ``ValidationError`` naming the failed invariant.
        """
        s = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        err = np.max(np.abs(s - np.eye(self.dim_in)))
        if err > tol:
            raise ValidationError(f"trace preservation violated: |sum K^dag K - I| = {err:.3e}")
        lam = linalg.eigvalsh(self.choi)[0]
        if lam < -tol:
            raise ValidationError(f"complete positivity violated: Choi eigenvalue {lam:.3e}")

    def apply(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __call__(self, rho) -> np.ndarray:
        return apply_unchecked(self, np.asarray(rho, dtype=complex))

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        """Heisenberg-picture map ``X -> sum_k K^dag X K``."""
        return np.einsum("kji,jl,klm->im", self.kraus.conj(), x, self.kraus)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        ks = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return QuantumChannel(np.asarray(ks), validate=False)


def apply_unchecked(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    k = ch.kraus
    return np.einsum("kij,jl,kml->im", k, rho, k.conj())


def apply(ch: QuantumChannel, rho) -> np.ndarray:
    """``sum_k K rho K^dagger`` for a valid input state."""
    rho = linalg.check_density(rho)
    if rho.shape[0] != ch.dim_in:
        raise DimensionMismatch(f"state of dim {rho.shape[0]} into channel with dim_in {ch.dim_in}")
    return apply_unchecked(ch, rho)


def from_choi(choi, dim_in: int, dim_out: int, validate: bool = True) -> QuantumChannel:
    """Rebuild a minimal Kraus representation from a normalized Choi matrix."""
    c = np.asarray(choi, dtype=complex) * dim_in
    w, v = np.linalg.eigh((c + c.conj().T) / 2)
    keep = w > 1e-13 * max(1.0, w[-1])
    ks = []
    for lam, vec in zip(w[keep][::-1], v[:, keep][:, ::-1].T):
        ks.append(np.sqrt(lam) * vec.reshape(dim_in, dim_out).T)
    if not ks:
        raise ValidationError("Choi matrix is zero")
    return QuantumChannel(np.asarray(ks), validate=validate)


def compress(ch: QuantumChannel) -> QuantumChannel:
    """Equivalent channel with the minimal number of Kraus operators."""
    if ch.rank <= ch.dim_in * ch.dim_out:
        return ch
    return from_choi(ch.choi, ch.dim_in, ch.dim_out, validate=False)


def identity(d: int) -> QuantumChannel:
    return QuantumChannel(np.eye(d, dtype=complex)[None])


def embedding(d_in: int, d_out: int) -> QuantumChannel:
    """Isometric embedding ``C^dIn -> C^dOut`` onto the first basis vectors."""
    v = np.zeros((d_out, d_in), dtype=complex)
    v[:d_in, :d_in] = np.eye(d_in)
    return QuantumChannel(v[None])


def constant(tau, d_in: int) -> QuantumChannel:
    """Replacement channel ``rho -> tr(rho) tau``."""
    tau = linalg.check_density(tau)
    w, v = linalg.hermitian_eig(tau)
    ks = []
    for lam, b in zip(w, v.T):
        if lam > 1e-14:
            for i in range(d_in):
                ks.append(np.sqrt(lam) * np.outer(b, linalg.ket(i, d_in)))
    return QuantumChannel(np.asarray(ks))


def depolarizing_embed(eta: float, d_in: int = 2, d_out: int = 3) -> QuantumChannel:
    """``X -> (1 - eta) X + eta tr(X) pi`` with ``X`` embedded into ``C^dOut``.

    ``pi`` is the maximally mixed state on the output space. With
    ``d_in == d_out`` this is the ordinary depolarizing channel.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    parts, weights = [], []
    if eta < 1:
        parts.append(embedding(d_in, d_out))
        weights.append(1 - eta)
    if eta > 0:
        parts.append(constant(linalg.maximally_mixed(d_out), d_in))
        weights.append(eta)
    return mix(parts, weights)


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, rank: int | None = None) -> QuantumChannel:
    """Random CPTP map from a Haar-random isometry ``C^dIn -> C^dOut (x) C^rank``."""
    r = d_in * d_out if rank is None else rank
    z = rng.standard_normal((d_out * r, d_in)) + 1j * rng.standard_normal((d_out * r, d_in))
    q, _ = np.linalg.qr(z)
    ks = q.reshape(r, d_out, d_in)
    return QuantumChannel(ks)


def mix(channels: Sequence[QuantumChannel], q) -> QuantumChannel:
    """Convex combination ``sum_s q(s) N_s`` as weighted Kraus concatenation."""
    if len(channels) == 0:
        raise ValidationError("cannot mix an empty list of channels")
    q = simplex.check_weights(q, len(channels))
    d = (channels[0].dim_in, channels[0].dim_out)
    for ch in channels:
        if (ch.dim_in, ch.dim_out) != d:
            raise DimensionMismatch("channels to mix have different dimensions")
    ks = [np.sqrt(w) * ch.kraus for w, ch in zip(q, channels) if w > 0]
    return QuantumChannel(np.concatenate(ks), validate=False)


def tensor_power(ch: QuantumChannel, l: int) -> QuantumChannel:
    """``N^{(x) l}`` with Kraus operators all ``l``-fold products."""
    if l < 1:
        raise ValidationError("tensor power needs l >= 1")
    if max(ch.dim_in, ch.dim_out) ** l > linalg.MAX_DIM:
        raise DimensionOverflow(f"N^(x){l} would act on dimension {max(ch.dim_in, ch.dim_out) ** l}")
    out = ch
    for _ in range(l - 1):
        out = out.tensor(ch)
    return out


def tensor_product(channels: Sequence[QuantumChannel]) -> QuantumChannel:
    out = channels[0]
    for ch in channels[1:]:
        out = out.tensor(ch)
    return out


# -- measure and prepare ---------------------------------------------------


def check_povm(effects, tol: float = POVM_TOL) -> np.ndarray:
    e = np.asarray(effects, dtype=complex)
    if e.ndim != 3 or e.shape[1] != e.shape[2]:
        raise InvalidSpec(f"POVM must be a stack of square matrices, got shape {e.shape}")
    for m in e:
        if not linalg.is_hermitian(m, tol) or linalg.eigvalsh(m)[0] < -1e-10:
            raise InvalidSpec("POVM effect is not positive semidefinite")
    err = np.max(np.abs(e.sum(axis=0) - np.eye(e.shape[1])))
    if err > tol:
        raise InvalidSpec(f"POVM effects sum to identity only within {err:.3e}")
    return e


@dataclass(frozen=True)
class MeasurePrepareSpec:
    """Measure ``{M_x}``, then prepare ``prepared[s][x]`` depending on the state ``s``."""

    povm: np.ndarray
    prepared: np.ndarray  # shape (|S|, |X|, dOut, dOut)

    def __post_init__(self):
        povm = check_povm(self.povm)
        prep = np.asarray(self.prepared, dtype=complex)
        if prep.ndim != 4 or prep.shape[1] != povm.shape[0]:
            raise InvalidSpec("prepared states must have shape (|S|, |X|, dOut, dOut)")
        for s, x in itertools.product(range(prep.shape[0]), range(prep.shape[1])):
            try:
                linalg.check_density(prep[s, x])
            except ValidationError as exc:
                raise InvalidSpec(f"prepared state ({s}, {x}) invalid: {exc}") from exc
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "prepared", prep)

    @property
    def n_states(self) -> int:
        return self.prepared.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.povm.shape[0]

    @property
    def dim_in(self) -> int:
        return self.povm.shape[1]

    @property
    def dim_out(self) -> int:
        return self.prepared.shape[2]


def from_measure_prepare(spec: MeasurePrepareSpec, s: int) -> QuantumChannel:
    """Kraus form of ``rho -> sum_x tr(rho M_x) rho_{s,x}``.

    Kraus operators are ``sqrt(m_j mu_k) |b_k><a_j|`` from the spectral
    decompositions ``M_x = sum_j m_j |a_j><a_j|`` and
    ``rho_{s,x} = sum_k mu_k |b_k><b_k|``.
    """
    if not 0 <= s < spec.n_states:
        raise InvalidSpec(f"state index {s} out of range")
    ks = []
    for x in range(spec.n_outcomes):
        m_w, m_v = np.linalg.eigh(spec.povm[x])
        r_w, r_v = np.linalg.eigh(spec.prepared[s, x])
        for mj, a in zip(m_w, m_v.T):
            if mj <= 1e-14:
                continue
            for mu, b in zip(r_w, r_v.T):
                if mu <= 1e-14:
                    continue
                ks.append(np.sqrt(mj * mu) * np.outer(b, a.conj()))
    return QuantumChannel(np.asarray(ks))


# -- fidelity and entanglement breaking ------------------------------------


def entanglement_fidelity(rho, ch: QuantumChannel) -> float:
    """``<psi|(N (x) id)(|psi><psi|)|psi>`` for a purification ``psi`` of ``rho``."""
    rho = linalg.check_density(rho)
    if not (ch.dim_in == ch.dim_out == rho.shape[0]):
        raise DimensionMismatch("entanglement fidelity needs a square channel matching the state")
    d = rho.shape[0]
    psi = linalg.purify(rho)
    total = 0.0
    for k in ch.kraus:
        amp = np.vdot(psi, np.kron(k, np.eye(d)) @ psi)
        total += abs(amp) ** 2
    return float(min(1.0, max(0.0, total)))


class EBVerdict(str, enum.Enum):
    EB = "EB"
    NOT_EB = "NotEB"
    INCONCLUSIVE = "Inconclusive"


EB_TOL = 1e-9
PPT_EXACT_DIM = 6


def min_pt_eigenvalue(ch: QuantumChannel) -> float:
    """Smallest eigenvalue of the partial transpose of the normalized Choi matrix."""
    pt = linalg.partial_transpose(ch.choi, (ch.dim_in, ch.dim_out), on="B")
    return float(linalg.eigvalsh(pt)[0])


def eb_verdict_from_eig(lam: float, dim_in: int, dim_out: int) -> EBVerdict:
    if lam < -EB_TOL:
        return EBVerdict.NOT_EB
    if dim_in * dim_out <= PPT_EXACT_DIM:
        return EBVerdict.EB
    return EBVerdict.INCONCLUSIVE


def is_entanglement_breaking(ch: QuantumChannel) -> EBVerdict:
    """PPT test on the Choi matrix.

    A negative partial transpose proves the channel is not entanglement
    breaking. A positive one proves it only for ``dIn * dOut <= 6``, where PPT
    and separability coincide; larger channels get ``INCONCLUSIVE``.
    """
    return eb_verdict_from_eig(min_pt_eigenvalue(ch), ch.dim_in, ch.dim_out)


def eb_threshold(make_channel, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Bisection for the parameter where ``make_channel(t)`` turns EB.

    ``make_channel(lo)`` must be NotEB and ``make_channel(hi)`` EB.
    """
    if min_pt_eigenvalue(make_channel(lo)) >= -EB_TOL or min_pt_eigenvalue(make_channel(hi)) < -EB_TOL:
        raise ValueError("bisection bracket does not straddle the EB boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min_pt_eigenvalue(make_channel(mid)) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- diamond norm ----------------------------------------------------------


@dataclass(frozen=True)
class DiamondEstimate:
    lower: float
    iterations: int
    state: np.ndarray


def _signed_kraus(n: QuantumChannel, m: QuantumChannel | None) -> tuple[np.ndarray, np.ndarray]:
    if m is None:
        return n.kraus, np.ones(n.rank)
    if (n.dim_in, n.dim_out) != (m.dim_in, m.dim_out):
        raise DimensionMismatch("diamond norm of channels with different dimensions")
    ks = np.concatenate([n.kraus, m.kraus])
    signs = np.concatenate([np.ones(n.rank), -np.ones(m.rank)])
    return ks, signs


def _doubled_output(ks: np.ndarray, signs: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = ks.shape[2]
    big = psi.reshape(d, d)
    # rows: reference index, columns: channel output
    vs = np.einsum("rj,koj->kro", big, ks).reshape(ks.shape[0], -1)
    y = np.einsum("k,ka,kb->ab", signs, vs, vs.conj())
    return y, vs


def doubled_trace_norm(n: QuantumChannel, m: QuantumChannel | None, psi) -> float:
    """``||(id (x) (N - M))(|psi><psi|)||_1`` for a unit vector on ``C^dIn (x) C^dIn``."""
    ks, signs = _signed_kraus(n, m)
    y, _ = _doubled_output(ks, signs, np.asarray(psi, dtype=complex))
    return linalg.hermitian_trace_norm(y)


def _ascend(ks, signs, psi, max_iter, tol):
    d = ks.shape[2]
    lifted = np.stack([np.kron(np.eye(d), k) for k in ks])
    value = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        vs = lifted @ psi
        y = (vs.T * signs) @ vs.conj()
        w, v = np.linalg.eigh(y)
        new_value = float(np.sum(np.abs(w)))
        if new_value <= value + tol:
            value = max(value, new_value)
            break
        value = new_value
        h = (v * np.sign(w)) @ v.conj().T
        g = np.einsum("k,kai,ab,kbj->ij", signs, lifted.conj(), h, lifted)
        _, gv = np.linalg.eigh((g + g.conj().T) / 2)
        psi = gv[:, -1]
    return value, it, psi


def diamond_norm_estimate(
    n: QuantumChannel,
    m: QuantumChannel | None = None,
    starts: int = 32,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-13,
) -> DiamondEstimate:
    """Lower bound on ``||N - M||_diamond`` (or ``||N||_diamond`` if ``m`` is None).

    Maximizes ``||(id (x) (N - M))(|psi><psi|)||_1`` over unit vectors on the
    doubled input space. The objective is convex in ``|psi><psi|``, so the
    linearize-and-take-top-eigenvector step never decreases it; each of the
    ``starts`` seeded random starts runs this ascent to a fixed point and the
    best value is kept.
    """
    ks, signs = _signed_kraus(n, m)
    d = n.dim_in
    rng = np.random.default_rng(seed)
    best_value, best_psi = -1.0, None
    total_iter = 0
    starts_psi = [linalg.max_entangled(d)] + [linalg.random_pure(d * d, rng) for _ in range(max(0, starts - 1))]
    for psi in starts_psi:
        value, it, psi_out = _ascend(ks, signs, psi, max_iter, tol)
        total_iter += it
        if value > best_value:
            best_value, best_psi = value, psi_out
    return DiamondEstimate(best_value, total_iter, best_psi)


def set_distance(
    channels_a: Sequence[QuantumChannel],
    channels_b: Sequence[QuantumChannel],
    starts: int = 32,
    seed: int = 0,
) -> float:
    """Hausdorff distance between two finite channel sets in the diamond norm.

    Pairwise norms use :func:`diamond_norm_estimate`, so the result is a lower
    bound that is tight when each ascent converges to the global maximum.
    """
    dims = {(c.dim_in, c.dim_out) for c in list(channels_a) + list(channels_b)}
    if len(dims) != 1:
        raise DimensionMismatch("channel sets have different dimensions")
    table = np.zeros((len(channels_a), len(channels_b)))
    for i, a in enumerate(channels_a):
        for j, b in enumerate(channels_b):
            if a is b or np.array_equal(a.choi, b.choi):
                continue
            table[i, j] = diamond_norm_estimate(a, b, starts=starts, seed=seed).lower
    return float(max(table.min(axis=1).max(), table.min(axis=0).max()))
