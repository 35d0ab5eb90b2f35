"""Small dense complex linear algebra for Hilbert spaces of dimension <= 81.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Density matrices
and state vectors are validated by :func:`check_density` and
:func:`check_state_vector` rather than wrapped in classes.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonSquare, NotHermitian, ValidationError

MAX_DIM = 81

HERMITIAN_TOL = 1e-10
DENSITY_TOL = 1e-10
CLAMP_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def _require_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"matrix of shape {m.shape} is not square")


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` sorted in descending order and
    the matching orthonormal eigenvectors as the columns of ``v``.

    Raises
    ------
    NotHermitian
        If ``m`` differs from its adjoint by more than ``tol`` (relative to
        its largest entry).
    """
    m = as_matrix(m)
    _require_square(m)
    if not is_hermitian(m, tol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def eigvalsh(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the Hermitian part of ``m``, without checks."""
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix."""
    m = np.asarray(m, dtype=complex)
    _require_square(m)
    if is_hermitian(m, 1e-12):
        return float(np.sum(np.abs(eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hermitian_trace_norm(m: np.ndarray) -> float:
    # hot path: caller guarantees Hermiticity
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def entropy_of_spectrum(w) -> float:
    """Shannon entropy in bits of a (possibly slightly negative) spectrum.

    Entries in ``[-1e-10, 0)`` are clamped to zero; ``0 log 0 = 0``.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < -CLAMP_TOL):
        raise ValidationError(f"spectrum has negative entry {w.min():.3e}")
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy ``-tr(rho log2 rho)`` in bits."""
    rho = check_density(rho)
    return entropy_of_spectrum(eigvalsh(rho))


def tensor(*ms) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    out = np.asarray(ms[0], dtype=complex)
    for m in ms[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _check_bipartite(m: np.ndarray, dims: tuple[int, int]) -> tuple[int, int]:
    da, db = int(dims[0]), int(dims[1])
    if m.ndim != 2 or m.shape != (da * db, da * db):
        raise DimensionMismatch(f"matrix of shape {m.shape} does not act on {da}x{db}")
    return da, db


def partial_trace(m, dims: tuple[int, int], keep: str = "A") -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``C^dA (x) C^dB``.

    ``keep="A"`` traces out B and returns a ``dA x dA`` matrix; ``keep="B"``
    traces out A.
    """
    m = np.asarray(m, dtype=complex)
    da, db = _check_bipartite(m, dims)
    t = m.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def partial_transpose(m, dims: tuple[int, int], on: str = "B") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    da, db = _check_bipartite(m, dims)
    t = m.reshape(da, db, da, db)
    if on == "B":
        t = t.transpose(0, 3, 2, 1)
    elif on == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"on must be 'A' or 'B', not {on!r}")
    return t.reshape(da * db, da * db)


def purify(rho) -> np.ndarray:
    """Purification ``psi`` on ``C^d (x) C^d`` with ``tr_B |psi><psi| = rho``.

    Built from the spectral decomposition, ``psi = sum_i sqrt(w_i) v_i (x) e_i``,
    so a pure ``rho`` gives a product vector ``x (x) e_1``.
    """
    rho = check_density(rho)
    w, v = hermitian_eig(rho)
    w = np.clip(w, 0.0, None)
    d = rho.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if w[i] > 0:
            psi += np.sqrt(w[i]) * np.kron(v[:, i], np.eye(d)[i])
    return psi / np.linalg.norm(psi)


def check_density(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate and return ``rho`` as a complex density matrix."""
    rho = as_matrix(rho)
    _require_square(rho)
    if rho.shape[0] > MAX_DIM:
        raise ValidationError(f"dimension {rho.shape[0]} exceeds {MAX_DIM}")
    if not is_hermitian(rho, tol):
        raise NotHermitian("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValidationError(f"density matrix has trace {np.trace(rho).real:.12g}")
    if eigvalsh(rho)[0] < -tol:
        raise ValidationError("density matrix has a negative eigenvalue")
    return rho


def is_density(rho, tol: float = DENSITY_TOL) -> bool:
    try:
        check_density(rho, tol)
    except ValidationError:
        return False
    return True


def check_state_vector(psi, tol: float = DENSITY_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValidationError("state vector must be 1-d")
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise ValidationError(f"state vector has norm {np.linalg.norm(psi):.12g}")
    return psi


def ket(i: int, d: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def proj(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def max_entangled(d: int) -> np.ndarray:
    """The vector ``sum_i e_i (x) e_i / sqrt(d)``."""
    return np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state ``AA^dagger / tr(AA^dagger)`` with Ginibre ``A`` of the given rank."""
    k = d if rank is None else rank
    a = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)
