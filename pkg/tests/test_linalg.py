import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avqclab import linalg
from avqclab.errors import DimensionMismatch, NonSquare, NotHermitian, ValidationError

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def test_hermitian_eig_descending_and_reconstructs():
    rng = np.random.default_rng(1)
    h = linalg.random_hermitian(5, rng)
    w, v = linalg.hermitian_eig(h)
    assert np.all(np.diff(w) <= 0)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)
    assert np.allclose(v.conj().T @ v, np.eye(5), atol=1e-12)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonSquare):
        linalg.hermitian_eig(np.zeros((2, 3)))


def test_trace_norm_known_values():
    assert linalg.trace_norm(np.diag([1.0, -2.0, 0.5])) == pytest.approx(3.5)
    # nilpotent |0><1| has a single singular value 1
    assert linalg.trace_norm(np.array([[0, 1], [0, 0]])) == pytest.approx(1.0)


def test_entropy_values():
    assert linalg.von_neumann_entropy(linalg.maximally_mixed(4)) == pytest.approx(2.0)
    assert linalg.von_neumann_entropy(linalg.proj(linalg.ket(0, 3))) == 0.0
    assert linalg.entropy_of_spectrum([0.5, 0.5, -1e-12]) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        linalg.entropy_of_spectrum([1.1, -0.1])


def test_partial_trace_of_product():
    rng = np.random.default_rng(2)
    a, b = linalg.random_density(2, rng), linalg.random_density(3, rng)
    ab = linalg.tensor(a, b)
    assert np.allclose(linalg.partial_trace(ab, (2, 3), keep="A"), a)
    assert np.allclose(linalg.partial_trace(ab, (2, 3), keep="B"), b)
    with pytest.raises(DimensionMismatch):
        linalg.partial_trace(ab, (3, 3))


def test_partial_transpose_of_max_entangled():
    phi = linalg.proj(linalg.max_entangled(2))
    w = np.linalg.eigvalsh(linalg.partial_transpose(phi, (2, 2)))
    assert w[0] == pytest.approx(-0.5)
    # transposing both factors is the full transpose
    both = linalg.partial_transpose(linalg.partial_transpose(phi, (2, 2), on="A"), (2, 2), on="B")
    assert np.allclose(both, phi.T)


def test_check_density_rejects():
    with pytest.raises(ValidationError):
        linalg.check_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        linalg.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        linalg.check_density(np.eye(82) / 82)


@settings(max_examples=200, deadline=None)
@given(seeds, dims, dims)
def test_purification_marginal(seed, d, r):
    rng = np.random.default_rng(seed)
    rho = linalg.random_density(d, rng, rank=min(r, d))
    psi = linalg.purify(rho)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert np.allclose(linalg.partial_trace(linalg.proj(psi), (d, d), keep="A"), rho, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(seeds, dims, dims)
def test_partial_trace_preserves_trace_and_positivity(seed, da, db):
    rng = np.random.default_rng(seed)
    rho = linalg.random_density(da * db, rng)
    for keep in ("A", "B"):
        red = linalg.partial_trace(rho, (da, db), keep=keep)
        assert np.trace(red).real == pytest.approx(1.0)
        assert linalg.eigvalsh(red)[0] > -1e-12


@settings(max_examples=200, deadline=None)
@given(seeds, dims)
def test_trace_norm_triangle_and_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    a, b = linalg.random_hermitian(d, rng), linalg.random_hermitian(d, rng)
    u = linalg.random_unitary(d, rng)
    na, nb = linalg.trace_norm(a), linalg.trace_norm(b)
    assert linalg.trace_norm(a + b) <= na + nb + 1e-10
    assert linalg.trace_norm(u @ a @ u.conj().T) == pytest.approx(na, rel=1e-10, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(seeds, dims)
def test_entropy_bounds_and_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho = linalg.random_density(d, rng)
    s = linalg.von_neumann_entropy(rho)
    assert -1e-12 <= s <= np.log2(d) + 1e-12
    u = linalg.random_unitary(d, rng)
    assert linalg.von_neumann_entropy(u @ rho @ u.conj().T) == pytest.approx(s, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_partial_transpose_spectrum_of_product_states(seed, da, db):
    rng = np.random.default_rng(seed)
    rho = linalg.tensor(linalg.random_density(da, rng), linalg.random_density(db, rng))
    pt = linalg.partial_transpose(rho, (da, db))
    assert linalg.eigvalsh(pt)[0] > -1e-12
    assert np.trace(pt).real == pytest.approx(1.0)
