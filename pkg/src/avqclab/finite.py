"""Finite common randomness: how many sampled codes ``K`` and what blocklength
``L`` suffice, the Markov/union tail bound, a Monte Carlo derandomization
simulator over permutation-robustified codes, and error-criterion converters.

All logarithms are base two.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import linalg
from .avqc import AVQC, state_sequences
from .errors import BadParams, BudgetExceeded, NoSolutionBelowCap, TooLarge

L_CAP = 10**9
SIM_BUDGET = 10**8
MAX_SEQUENCES = 4096


# -- closed-form bounds ----------------------------------------------------


@dataclass(frozen=True)
class FiniteResourceParams:
    """Target error ``lam``, rate ``R``, slack ``eps``, exponent ``E`` and ``|S|``."""

    lam: float
    E: float
    eps: float
    s_size: int
    R: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise BadParams(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.eps > 0:
            raise BadParams(f"eps must be positive, got {self.eps}")
        if not self.E - self.eps > 0:
            raise BadParams(f"E - eps must be positive, got {self.E - self.eps}")
        if int(self.s_size) != self.s_size or self.s_size < 2:
            raise BadParams(f"|S| must be an integer >= 2, got {self.s_size}")

    @classmethod
    def from_gap(cls, lam: float, gap: float, s_size: int, eps: float = 0.5) -> "FiniteResourceParams":
        """Parameters with ``E - eps = gap`` (only the difference enters the bounds)."""
        return cls(lam=lam, E=gap + eps, eps=eps, s_size=s_size)

    @property
    def gap(self) -> float:
        # E - eps rounded to 12 significant digits so that e.g. 0.7 - 0.5
        # gives 0.2 and not 0.19999999999999996
        return float(f"{self.E - self.eps:.12g}")


def _ceil(x: float) -> int:
    # absorb representation error in the formula before rounding up
    return math.ceil(x * (1 - 1e-12))


def randomness_bound_K_real(p: FiniteResourceParams) -> float:
    return 8.0 * math.log2(p.s_size) / (p.lam * p.gap)


def randomness_bound_K(p: FiniteResourceParams) -> int:
    """``ceil((1 / lam) 8 log|S| / (E - eps))``."""
    return _ceil(randomness_bound_K_real(p))


def _l_lhs(L: int, p: FiniteResourceParams) -> float:
    return L - (2.0 * p.s_size / p.gap) * math.log2(L)


def _l_rhs(p: FiniteResourceParams) -> float:
    return (2.0 / p.gap) * math.log2(4.0 / (p.lam * p.gap))


def blocklength_satisfies(L: int, p: FiniteResourceParams) -> bool:
    """Whether ``L - (2|S|/(E - eps)) log L >= (2/(E - eps)) log(4 / (lam (E - eps)))``."""
    return L >= 1 and _l_lhs(L, p) >= _l_rhs(p)


def blocklength_bound_L(p: FiniteResourceParams, cap: int = L_CAP) -> int:
    """Smallest integer ``L >= 1`` satisfying :func:`blocklength_satisfies`.

    ``L - a log L`` decreases up to ``a / ln 2`` and increases after, and it
    equals 1 at ``L = 1``. So either ``L = 1`` works, or the answer is the
    first point on the increasing branch, found by bisection. Minimality is
    re-checked on the result (``L - 1`` fails).
    """
    if blocklength_satisfies(1, p):
        return 1
    a = 2.0 * p.s_size / p.gap
    lo = max(1, math.floor(a / math.log(2)))  # at or before the minimum
    if not blocklength_satisfies(cap, p):
        raise NoSolutionBelowCap(f"no blocklength up to {cap} satisfies the inequality")
    hi = cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if blocklength_satisfies(mid, p):
            hi = mid
        else:
            lo = mid
    assert blocklength_satisfies(hi, p) and not blocklength_satisfies(hi - 1, p)
    return hi


def blocklength_approx(p: FiniteResourceParams) -> float:
    """The rough scaling law ``(2/(E - eps)) log((1/lam) 4/(E - eps))``."""
    return _l_rhs(p)


def ensemble_error_bound(l: int, s_size: int, delta: float) -> float:
    """``eps_l = (l + 1)^{|S|} 2^{-l delta}``."""
    return float((l + 1) ** s_size * 2.0 ** (-l * delta))


def tail_bound(K: int, r: float, lam: float, eps_l: float, s_size: int, l: int) -> float:
    """Probability bound ``|S|^l 2^{-K (r lam - eps_l 2^r)}`` for a bad sample of ``K`` codes.

    Returns 1 when the exponent is not positive.
    """
    margin = r * lam - eps_l * 2.0**r
    if margin <= 0:
        return 1.0
    log_b = l * math.log2(s_size) - K * margin
    return float(min(1.0, 2.0**log_b))


def best_r(lam: float, eps_l: float) -> float:
    """``r >= 0`` maximizing ``r lam - eps_l 2^r``."""
    if eps_l <= 0:
        return 1.0
    r = math.log2(lam / (eps_l * math.log(2)))
    return max(0.0, r)


def codes_for_tail(target: float, lam: float, eps_l: float, s_size: int, l: int) -> int:
    """Smallest ``K`` with ``tail_bound(K, best_r) <= target``."""
    r = best_r(lam, eps_l)
    margin = r * lam - eps_l * 2.0**r
    if eps_l <= 0:
        margin = lam
        r = 1.0
    if margin <= 0:
        raise BadParams("tail bound is vacuous: ensemble error too large for this lambda")
    K = max(1, _ceil((l * math.log2(s_size) - math.log2(target)) / margin))
    while tail_bound(K, r, lam, eps_l, s_size, l) > target:
        K += 1
    while K > 1 and tail_bound(K - 1, r, lam, eps_l, s_size, l) <= target:
        K -= 1
    return K


def k_threshold(l: int, delta: float, lam: float, s_size: int) -> float:
    """``K`` beyond which the bound with ``r = l delta / 2`` drops below 1 (``inf`` if never)."""
    denom = delta * lam / 2 - ((l + 1) ** s_size / l) * 2.0 ** (-l * delta / 2)
    return math.log2(s_size) / denom if denom > 0 else math.inf


# -- error criterion converters --------------------------------------------


def convert_ent_to_strong(lambda_e: float, k: int, eps: float, c: float = 1.0) -> tuple[float, int]:
    """Subspace bound ``(lambda_e + c / sqrt(k - 1) + eps, floor(eps^2 k / (256 log(32/eps))))``."""
    if k < 2 or int(k) != k:
        raise BadParams("k must be an integer >= 2")
    if not 0.0 < eps < 1.0:
        raise BadParams("eps must lie in (0, 1)")
    if c < 0:
        raise BadParams("c must be nonnegative")
    if not 0.0 <= lambda_e <= 1.0:
        raise BadParams("lambda_e must lie in [0, 1]")
    lam_s = lambda_e + c / math.sqrt(k - 1) + eps
    k_hat = math.floor(eps**2 / (256 * math.log2(32 / eps)) * k)
    return lam_s, k_hat


def convert_strong_to_ent(lambda_s: float, k: int) -> float:
    """``1 - ((k + 1)/k)(1 - lambda_s - 1/(k + 1))`` clamped to ``[0, 1]``."""
    if k < 1 or int(k) != k:
        raise BadParams("k must be an integer >= 1")
    if not 0.0 <= lambda_s <= 1.0:
        raise BadParams("lambda_s must lie in [0, 1]")
    v = 1 - ((k + 1) / k) * (1 - lambda_s - 1 / (k + 1))
    return float(min(1.0, max(0.0, v)))


def tradeoff_rows(lams, gaps, s_sizes) -> list[tuple]:
    """Rows ``(lambda, E_minus_eps, S_size, K, L, L_approx)``."""
    rows = []
    for lam, gap, s in itertools.product(lams, gaps, s_sizes):
        p = FiniteResourceParams.from_gap(lam, gap, s)
        rows.append((lam, gap, s, randomness_bound_K(p), blocklength_bound_L(p), blocklength_approx(p)))
    return rows


# -- codes for classical-quantum channels ----------------------------------


def cq_outputs(avqc: AVQC) -> np.ndarray:
    """``W[s, x] = N_s(|x><x|)`` over the computational basis inputs."""
    d = avqc.dim_in
    return np.asarray([[ch(linalg.proj(linalg.ket(x, d))) for x in range(d)] for ch in avqc.channels])


@dataclass
class BlockCode:
    """Codewords (rows of input letters) and a decoding POVM on the ``l``-letter output."""

    codewords: np.ndarray  # (M, l) ints
    decoder: np.ndarray  # (M, D, D)
    hull_error: float = float("nan")

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def l(self) -> int:
        return self.codewords.shape[1]


def _product_state(w: np.ndarray, seq, word) -> np.ndarray:
    return linalg.tensor(*[w[s, x] for s, x in zip(seq, word)])


def pretty_good_measurement(states: np.ndarray) -> np.ndarray:
    """Square-root measurement ``S^{-1/2} rho_i S^{-1/2}``, completed to a POVM.

    The projector onto the kernel of ``S = sum rho_i`` is shared equally.
    """
    s = states.sum(axis=0)
    w, v = np.linalg.eigh((s + s.conj().T) / 2)
    keep = w > 1e-12 * max(1.0, w[-1])
    inv_sqrt = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
    kernel = v[:, ~keep] @ v[:, ~keep].conj().T
    eff = np.asarray([inv_sqrt @ r @ inv_sqrt for r in states]) + kernel / len(states)
    return (eff + eff.conj().transpose(0, 2, 1)) / 2


def code_error(w: np.ndarray, code: BlockCode, seq) -> float:
    """Average error ``1 - (1/M) sum_i tr(N_{s^l}(c_i) D_i)`` against one jammer sequence."""
    ok = sum(np.trace(_product_state(w, seq, c) @ d).real for c, d in zip(code.codewords, code.decoder))
    return float(min(1.0, max(0.0, 1.0 - ok / code.M)))


def _hull_error(w, code, grid_q):
    worst = 0.0
    for q in grid_q:
        wq = np.tensordot(q, w, 1)[None]
        worst = max(worst, code_error(wq, code, [0] * code.l))
    return worst


def build_toy_base_code(avqc: AVQC, l: int, M: int, hull_grid: int = 11) -> BlockCode:
    """Exhaustive search for a good compound-channel code on basis inputs.

    Every set of ``M`` distinct words in ``X^l`` gets a pretty-good decoder for
    the outputs of the hull centroid; the code with the smallest worst-case
    average error over a grid of memoryless hull channels ``N_q^{(x) l}`` is
    returned (first in lexicographic order on ties).
    """
    if l > 4 or M > 4:
        raise TooLarge("toy code search supports l <= 4 and M <= 4")
    if M < 2:
        raise BadParams("a code needs at least 2 messages")
    w = cq_outputs(avqc)
    n_in = w.shape[1]
    words = list(itertools.product(range(n_in), repeat=l))
    if M > len(words):
        raise BadParams(f"only {len(words)} words of length {l}")
    n = avqc.n_states
    grid_q = _grid_for(n, hull_grid)
    center = np.tensordot(np.full(n, 1.0 / n), w, 1)
    best = None
    for combo in itertools.combinations(words, M):
        cw = np.asarray(combo)
        states = np.asarray([linalg.tensor(*[center[x] for x in c]) for c in cw])
        code = BlockCode(cw, pretty_good_measurement(states))
        err = _hull_error(w, code, grid_q)
        if best is None or err < best.hull_error - 1e-12:
            code.hull_error = err
            best = code
    return best


def _grid_for(n: int, points: int) -> np.ndarray:
    from . import simplex

    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.linspace(0.0, 1.0, points)
        return np.column_stack([t, 1 - t])
    return simplex.grid(n, max(1, points - 1) // 2)


# -- robustification -------------------------------------------------------


@dataclass
class RandomCodeEnsemble:
    """Uniform mixture of the base code with permuted letter positions."""

    base: BlockCode
    perms: list
    codes: list

    @property
    def l(self) -> int:
        return self.base.l


def permute_code(code: BlockCode, perm, d_out: int) -> BlockCode:
    """Word positions ``j <- perm[j]``; decoder tensor factors moved the same way."""
    l = code.l
    perm = tuple(perm)
    cw = code.codewords[:, perm]
    dims = (d_out,) * l
    axes = list(perm) + [l + p for p in perm]
    dec = np.asarray([e.reshape(dims + dims).transpose(axes).reshape(e.shape) for e in code.decoder])
    return BlockCode(cw, dec, code.hull_error)


def robustify(code: BlockCode, d_out: int) -> RandomCodeEnsemble:
    """All ``l!`` position permutations of a code (``l <= 6``, ``M <= 8``)."""
    if code.l > 6 or code.M > 8:
        raise TooLarge("robustification supports l <= 6 and M <= 8")
    perms = list(itertools.permutations(range(code.l)))
    return RandomCodeEnsemble(code, perms, [permute_code(code, p, d_out) for p in perms])


def ensemble_error_table(w: np.ndarray, ens: RandomCodeEnsemble, direct: bool = False) -> np.ndarray:
    """Errors ``[permutation, s^l]`` with ``s^l`` in row-major order.

    By default the permuted code's error against ``s`` is read from the base
    code's error against the permuted sequence (the decoder permutation
    cancels inside the trace); ``direct=True`` evaluates every permuted code.
    """
    seqs = state_sequences(w.shape[0], ens.l)
    if direct:
        return np.asarray([[code_error(w, c, s) for s in seqs] for c in ens.codes])
    base = {s: code_error(w, ens.base, s) for s in seqs}
    inv = [np.argsort(p) for p in ens.perms]
    return np.asarray([[base[tuple(s[j] for j in iv)] for s in seqs] for iv in inv])


@dataclass
class DerandomizationResult:
    K: int
    l: int
    M: int
    lam: float
    trials: int
    seed: int
    failures: int
    failure_fraction: float
    worst_case_error: float
    mean_worst_case_error: float
    ensemble_error: float
    r: float
    theoretical_bound: float
    binomial_sigma: float
    exhaustive: bool

    @property
    def within_bound(self) -> bool:
        return self.failure_fraction <= self.theoretical_bound + 3 * self.binomial_sigma

    def to_dict(self) -> dict:
        d = asdict(self)
        d["within_bound"] = self.within_bound
        return d


def derandomize_simulate(
    avqc: AVQC,
    code: BlockCode,
    K: int,
    lam: float,
    trials: int,
    seed: int = 0,
    exhaustive: bool = False,
) -> DerandomizationResult:
    """Sample ``K`` codes from the robustified ensemble, ``trials`` times.

    Each trial's worst-case error is the maximum over all ``s^l`` of the
    uniform mixture's average error; a trial fails when it reaches ``lam``.
    The comparison bound uses the ensemble's exact worst-case error as
    ``eps_l`` and the best ``r``. With ``exhaustive=True`` every permutation
    is used once (``K = l!``) and there is no sampling.
    """
    if not 0.0 < lam < 1.0:
        raise BadParams("lambda must lie in (0, 1)")
    if trials < 1 or K < 1:
        raise BadParams("K and trials must be positive")
    w = cq_outputs(avqc)
    n_seq = w.shape[0] ** code.l
    if n_seq > MAX_SEQUENCES:
        raise BudgetExceeded(f"|S|^l = {n_seq} exceeds {MAX_SEQUENCES}")
    if K * code.M * n_seq > SIM_BUDGET:
        raise BudgetExceeded(f"K * M * |S|^l = {K * code.M * n_seq} exceeds {SIM_BUDGET}")
    ens = robustify(code, avqc.dim_out)
    table = ensemble_error_table(w, ens)
    eps_l = float(table.mean(axis=0).max())
    rng = np.random.default_rng(seed)
    if exhaustive:
        K = len(ens.perms)
        worst = np.full(trials, eps_l)
    else:
        idx = rng.integers(0, len(ens.perms), size=(trials, K))
        worst = table[idx].mean(axis=1).max(axis=1)
    failures = int(np.sum(worst >= lam))
    r = best_r(lam, eps_l)
    bound = tail_bound(K, r, lam, eps_l, w.shape[0], code.l)
    return DerandomizationResult(
        K=int(K),
        l=code.l,
        M=code.M,
        lam=float(lam),
        trials=int(trials),
        seed=int(seed),
        failures=failures,
        failure_fraction=failures / trials,
        worst_case_error=float(worst.max()),
        mean_worst_case_error=float(worst.mean()),
        ensemble_error=eps_l,
        r=float(r),
        theoretical_bound=bound,
        binomial_sigma=float(math.sqrt(bound * (1 - bound) / trials)),
        exhaustive=bool(exhaustive),
    )
