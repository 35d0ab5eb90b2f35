import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avqclab import avqc, channels, linalg
from avqclab.channels import EBVerdict, MeasurePrepareSpec
from avqclab.errors import DimensionMismatch, DimensionOverflow, InvalidSpec, ValidationError


def sigma(k, d=3):
    return linalg.proj(linalg.ket(k, d))


@pytest.fixture(scope="module")
def example():
    return avqc.build_example()


def test_identity_apply_is_noop():
    rho = linalg.random_density(3, np.random.default_rng(0))
    assert np.allclose(channels.identity(3).apply(rho), rho)


def test_example_channels_on_basis_states(example):
    n1, n2 = example.channels
    e1, e2 = sigma(0, 2), sigma(1, 2)
    assert np.allclose(n1.apply(e1), sigma(0))
    assert np.allclose(n1.apply(e2), sigma(2))
    assert np.allclose(n2.apply(e1), sigma(2))
    assert np.allclose(n2.apply(e2), sigma(1))


def test_depolarizing_embed_full_noise_gives_maximally_mixed():
    ch = channels.depolarizing_embed(1.0)
    rho = linalg.random_density(2, np.random.default_rng(3))
    assert np.allclose(ch.apply(rho), np.eye(3) / 3)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        channels.identity(2).apply(np.eye(3) / 3)


def test_constant_from_trivial_povm():
    tau = linalg.random_density(2, np.random.default_rng(4))
    spec = MeasurePrepareSpec(np.eye(2)[None], tau[None, None])
    ch = channels.from_measure_prepare(spec, 0)
    for seed in range(3):
        rho = linalg.random_density(2, np.random.default_rng(seed))
        assert np.allclose(ch.apply(rho), tau)


def test_measure_prepare_spec_validation():
    with pytest.raises(InvalidSpec):
        MeasurePrepareSpec(np.asarray([np.eye(2), np.eye(2)]), np.zeros((1, 2, 2, 2)))
    with pytest.raises(InvalidSpec):
        MeasurePrepareSpec(np.eye(2)[None], np.diag([2.0, -1.0])[None, None])


def test_mix_point_mass_and_linearity(example):
    n1, n2 = example.channels
    assert np.allclose(channels.mix([n1, n2], [1, 0]).choi, n1.choi)
    t = 0.3
    m = channels.mix([n1, n2], [t, 1 - t])
    assert np.allclose(m.apply(sigma(0, 2)), np.diag([t, 0, 1 - t]))
    assert np.allclose(m.choi, t * n1.choi + (1 - t) * n2.choi, atol=1e-12)
    assert np.allclose(channels.mix([n1, n1], [0.5, 0.5]).choi, n1.choi, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
def test_random_mixtures_are_cptp_and_linear(seed, d_in, d_out):
    rng = np.random.default_rng(seed)
    chs = [channels.random_channel(d_in, d_out, rng) for _ in range(3)]
    q = rng.dirichlet(np.ones(3))
    m = channels.mix(chs, q)
    m.validate()
    assert np.allclose(m.choi, sum(w * c.choi for w, c in zip(q, chs)), atol=1e-12)


def test_tensor_power_factorizes():
    rng = np.random.default_rng(5)
    ch = channels.random_channel(2, 2, rng)
    rho, sig = linalg.random_density(2, rng), linalg.random_density(2, rng)
    sq = channels.tensor_power(ch, 2)
    assert np.allclose(sq.apply(np.kron(rho, sig)), np.kron(ch.apply(rho), ch.apply(sig)))
    assert np.trace(sq.choi).real == pytest.approx(1.0)
    assert channels.tensor_power(ch, 1) is ch
    with pytest.raises(DimensionOverflow):
        channels.tensor_power(channels.identity(5), 3)


def test_from_choi_roundtrip():
    ch = channels.random_channel(2, 3, np.random.default_rng(6))
    back = channels.from_choi(ch.choi, 2, 3)
    assert np.allclose(back.choi, ch.choi, atol=1e-12)


def test_invalid_kraus_rejected():
    with pytest.raises(ValidationError, match="trace preservation"):
        channels.QuantumChannel(0.5 * np.eye(2)[None])


def test_entanglement_fidelity_values():
    rng = np.random.default_rng(7)
    rho = linalg.random_density(2, rng)
    assert channels.entanglement_fidelity(rho, channels.identity(2)) == pytest.approx(1.0)
    flip = channels.constant(sigma(1, 2), 2)
    assert channels.entanglement_fidelity(sigma(0, 2), flip) == pytest.approx(0.0, abs=1e-12)
    # brute force: <Omega| pi (x) pi |Omega> = 1/4
    omega = linalg.max_entangled(2)
    brute = np.vdot(omega, np.kron(np.eye(2) / 2, np.eye(2) / 2) @ omega).real
    dep = channels.depolarizing_embed(1.0, 2, 2)
    assert channels.entanglement_fidelity(np.eye(2) / 2, dep) == pytest.approx(brute)


def test_entanglement_fidelity_independent_of_purification():
    rng = np.random.default_rng(8)
    rho = linalg.random_density(3, rng)
    ch = channels.random_channel(3, 3, rng)
    psi = linalg.purify(rho)
    # another purification: unitary on the reference
    u = linalg.random_unitary(3, rng)
    psi2 = np.kron(np.eye(3), u) @ psi
    def fid(v):
        out = sum(np.kron(k, np.eye(3)) @ linalg.proj(v) @ np.kron(k, np.eye(3)).conj().T for k in ch.kraus)
        return np.vdot(v, out @ v).real
    assert fid(psi2) == pytest.approx(fid(psi), abs=1e-9)
    assert channels.entanglement_fidelity(rho, ch) == pytest.approx(fid(psi), abs=1e-9)


def test_eb_classification(example):
    for ch in example.channels:
        assert channels.is_entanglement_breaking(ch) is EBVerdict.EB
    assert channels.is_entanglement_breaking(channels.identity(2)) is EBVerdict.NOT_EB
    assert channels.min_pt_eigenvalue(channels.identity(2)) == pytest.approx(-0.5, abs=1e-12)
    # PPT in 3x3 is not enough
    assert channels.is_entanglement_breaking(channels.constant(np.eye(3) / 3, 3)) is EBVerdict.INCONCLUSIVE


def test_depolarizing_pt_eigenvalue_matches_closed_form():
    for eta in np.linspace(0, 1, 21):
        lam = channels.min_pt_eigenvalue(channels.depolarizing_embed(eta))
        assert lam == pytest.approx(-(1 - eta) / 2 + eta / 6, abs=1e-12)
        expected = EBVerdict.EB if eta >= 0.75 else EBVerdict.NOT_EB
        assert channels.is_entanglement_breaking(channels.depolarizing_embed(eta)) is expected


def test_eb_threshold_bisection():
    t = channels.eb_threshold(channels.depolarizing_embed, 0.0, 1.0)
    assert t == pytest.approx(0.75, abs=1e-9)


def test_diamond_norm_values(example):
    n1, n2 = example.channels
    assert channels.diamond_norm_estimate(n1, n1).lower == pytest.approx(0.0, abs=1e-12)
    assert channels.diamond_norm_estimate(n1, n2).lower >= 2 - 1e-6
    with pytest.raises(DimensionMismatch):
        channels.diamond_norm_estimate(n1, channels.identity(2))


@pytest.mark.parametrize("lam", [0.5, 0.9, 0.99])
def test_diamond_norm_of_family_offset(lam):
    fam, lim = avqc.build_interpolated_family(lam, 0.3), avqc.build_example()
    for a, b in zip(fam.channels, lim.channels):
        est = channels.diamond_norm_estimate(a, b, starts=8).lower
        assert est <= 2 * (1 - lam) + 1e-9


def test_unit_diamond_norm_of_channels():
    rng = np.random.default_rng(9)
    for _ in range(5):
        ch = channels.random_channel(2, 3, rng)
        assert channels.diamond_norm_estimate(ch, starts=4).lower == pytest.approx(1.0, abs=1e-6)


def test_set_distance_properties():
    ex = avqc.build_example()
    assert channels.set_distance(ex.channels, ex.channels) == 0.0
    prev = np.inf
    for lam in (0.9, 0.99, 0.999):
        d = channels.set_distance(avqc.build_interpolated_family(lam, 0.5).channels, ex.channels, starts=8)
        assert d < prev
        prev = d
    assert prev < 1e-2


def test_set_distance_symmetry_and_triangle():
    rng = np.random.default_rng(10)
    sets = [[channels.random_channel(2, 2, rng) for _ in range(2)] for _ in range(3)]
    dab = channels.set_distance(sets[0], sets[1], starts=8)
    dba = channels.set_distance(sets[1], sets[0], starts=8)
    assert dab == pytest.approx(dba, abs=1e-6)
    dbc = channels.set_distance(sets[1], sets[2], starts=8)
    dac = channels.set_distance(sets[0], sets[2], starts=8)
    assert dac <= dab + dbc + 1e-6
