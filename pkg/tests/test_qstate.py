import math

import numpy as np
import pytest

from cqinfo import qstate as qs
from cqinfo.errors import CapabilityError, ConstructionError, ContractError, LabelError


def test_partial_trace_epr_maximally_mixed():
    rho = qs.epr_pair("A", "B").density()
    assert np.allclose(rho.partial_trace({"A"}).mat, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_product():
    sigma = qs.random_density({"A": 2}, np.random.default_rng(0))
    tau = qs.random_density({"B": 3}, np.random.default_rng(1))
    joint = sigma.tensor(tau)
    assert np.allclose(joint.partial_trace({"A"}).mat, sigma.mat, atol=1e-12)


def test_partial_trace_bell01():
    rho = qs.bell_state(0, 1).density()
    assert np.allclose(rho.partial_trace({"B"}).mat, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_unknown_label():
    rho = qs.epr_pair("A", "B").density()
    with pytest.raises(LabelError):
        rho.partial_trace({"Q"})


def test_cond_entropy_epr():
    rho = qs.epr_pair("A", "B").density()
    assert qs.cond_entropy(rho, "A", "B") == pytest.approx(-1.0, abs=1e-10)


def test_entropy_maximally_mixed():
    assert qs.entropy(qs.DensityMatrix({"A": 2}, np.eye(2) / 2)) == pytest.approx(1.0)


def test_entropy_cq_seven_eighths():
    m = np.zeros((4, 4))
    m[0, 0] = 7 / 8
    m[3, 3] = 1 / 8
    rho = qs.DensityMatrix({"Z": 2, "B": 2}, m)
    want = 3 - (7 / 8) * math.log2(7)
    assert qs.entropy(rho.partial_trace({"Z"})) == pytest.approx(want, abs=1e-12)


def test_entropy_additive_on_products():
    rng = np.random.default_rng(2)
    a = qs.random_density({"A": 2}, rng)
    b = qs.random_density({"B": 3}, rng)
    assert qs.entropy(a.tensor(b)) == pytest.approx(qs.entropy(a) + qs.entropy(b), abs=1e-9)


def test_cond_entropy_bounds():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rho = qs.random_density({"A": 2, "B": 2}, rng)
        h = qs.cond_entropy(rho, "A", "B")
        assert -1.0 - 1e-9 <= h <= 1.0 + 1e-9


def test_trace_distance_and_fidelity_same_state():
    rho = qs.random_density({"A": 2}, np.random.default_rng(4))
    assert qs.trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert qs.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)


def test_trace_distance_zero_plus():
    zero = qs.basis_state({"Q": 2}, 0)
    plus = qs.from_amplitudes({"Q": 2}, [1, 1])
    assert qs.trace_distance(zero, plus) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert qs.fidelity(zero, plus) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_orthogonal_pure_states():
    zero = qs.basis_state({"Q": 2}, 0)
    one = qs.basis_state({"Q": 2}, 1)
    assert qs.trace_distance(zero, one) == pytest.approx(1.0)
    assert qs.fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_distance_relation():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = qs.random_pure({"A": 2, "B": 2}, rng)
        b = qs.random_pure({"A": 2, "B": 2}, rng)
        td = qs.trace_distance(a, b)
        f = qs.fidelity(a, b)
        assert td <= math.sqrt(1 - f**2) + 1e-9


def test_trace_distance_monotone_under_partial_trace():
    rng = np.random.default_rng(6)
    for _ in range(15):
        a = qs.random_density({"A": 2, "B": 2}, rng)
        b = qs.random_density({"A": 2, "B": 2}, rng)
        assert qs.trace_distance(
            a.partial_trace({"A"}), b.partial_trace({"A"})
        ) <= qs.trace_distance(a, b) + 1e-10


def test_trace_distance_monotone_under_dephasing():
    rng = np.random.default_rng(7)
    for _ in range(15):
        a = qs.random_density({"A": 2, "B": 2}, rng)
        b = qs.random_density({"A": 2, "B": 2}, rng)
        assert qs.trace_distance(qs.dephase(a, "A"), qs.dephase(b, "A")) <= qs.trace_distance(a, b) + 1e-10


def test_weyl_observables():
    X, Z = qs.weyl_observables(2)
    assert np.allclose(X, [[0, 1], [1, 0]])
    assert np.allclose(Z, [[1, 0], [0, -1]])
    X3, Z3 = qs.weyl_observables(3)
    assert np.allclose(np.linalg.matrix_power(X3, 3), np.eye(3))
    assert np.allclose(np.linalg.matrix_power(Z3, 3), np.eye(3))
    X4, Z4 = qs.weyl_observables(4)
    assert np.allclose(Z4 @ X4, np.exp(1j * np.pi / 2) * X4 @ Z4)


def test_p_guess_epr_perfect():
    rho = qs.epr_pair("A", "B").density()
    povm = qs.projective_povm("B", 2)
    assert qs.p_guess(rho, "A", povm) == pytest.approx(1.0, abs=1e-10)


def test_p_guess_product_blind():
    rho = qs.DensityMatrix({"A": 2}, np.eye(2) / 2).tensor(
        qs.random_density({"B": 2}, np.random.default_rng(8))
    )
    povm = qs.projective_povm("B", 2)
    assert qs.p_guess(rho, "A", povm) == pytest.approx(0.5, abs=1e-10)


def test_p_guess_guessing_game_state():
    psi = qs.from_amplitudes({"A": 2}, [math.cos(math.pi / 8), math.sin(math.pi / 8)])
    pz = qs.measure_probs(psi, "A")
    px = qs.measure_probs(psi, "A", qs.fourier_basis(2))
    assert 0.5 * (pz.max() + px.max()) == pytest.approx(0.5 + 0.5 / math.sqrt(2), abs=1e-12)


def test_p_guess_povm_size_mismatch():
    rho = qs.epr_pair("A", "B").density()
    povm = qs.Povm({"B": 2}, [np.eye(2)])
    with pytest.raises(Exception):
        qs.p_guess(rho, "A", povm)


def test_p_secure_cases():
    uncorr = qs.DensityMatrix({"A": 2}, np.eye(2) / 2).tensor(
        qs.DensityMatrix({"E": 2}, np.diag([0.2, 0.8]))
    )
    assert qs.p_secure(uncorr, "A") == pytest.approx(1.0, abs=1e-10)
    copied = qs.DensityMatrix({"A": 2, "E": 2}, np.diag([0.5, 0, 0, 0.5]))
    assert qs.p_secure(copied, "A") == pytest.approx(0.5, abs=1e-10)
    measured = qs.dephase(qs.epr_pair("A", "E").density(), "A")
    assert qs.p_secure(measured, "A") == pytest.approx(0.5, abs=1e-10)


def test_p_secure_rejects_non_cq():
    rho = qs.epr_pair("A", "E").density()
    with pytest.raises(ContractError):
        qs.p_secure(rho, "A")


def test_p_secure_bounds_guessing_advantage():
    rng = np.random.default_rng(9)
    for _ in range(15):
        # random CQ state on A ⊗ E
        p = rng.uniform(0.3, 0.7)
        e0 = qs.random_density({"E": 2}, rng)
        e1 = qs.random_density({"E": 2}, rng)
        m = np.zeros((4, 4), dtype=complex)
        m[:2, :2] = p * e0.mat
        m[2:, 2:] = (1 - p) * e1.mat
        rho = qs.DensityMatrix({"A": 2, "E": 2}, m)
        eps = 1.0 - qs.p_secure(rho, "A")
        for _ in range(10):
            basis = np.linalg.qr(
                rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            )[0]
            povm = qs.projective_povm("E", 2, basis)
            assert qs.p_guess(rho, "A", povm) <= 0.5 + 2 * eps + 1e-9


def test_pgm_orthogonal_projectors():
    e0 = np.diag([1.0, 0.0])
    e1 = np.diag([0.0, 1.0])
    els = qs.pgm([(0.5, e0), (0.5, e1)])
    assert np.allclose(els[0], e0, atol=1e-10)
    assert np.allclose(els[1], e1, atol=1e-10)


def test_pgm_sums_to_identity():
    rng = np.random.default_rng(10)
    for _ in range(20):
        k = int(rng.integers(2, 5))
        probs = rng.dirichlet(np.ones(k))
        mats = [qs.random_density({"B": 2}, rng, rank=int(rng.integers(1, 3))).mat for _ in range(k)]
        els = qs.pgm(list(zip(probs, mats)))
        assert np.max(np.abs(sum(els) - np.eye(2))) < 1e-9


def test_helstrom_zero_plus():
    e0 = np.diag([1.0, 0.0])
    plus = np.full((2, 2), 0.5)
    _, succ = qs.helstrom(0.5, e0, plus)
    assert succ == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-12)


def test_barnum_knill_factor_two():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = rng.uniform(0.2, 0.8)
        a = qs.random_density({"B": 2}, rng).mat
        b = qs.random_density({"B": 2}, rng).mat
        _, h_succ = qs.helstrom(p, a, b)
        els = qs.pgm([(p, a), (1 - p, b)])
        pgm_succ = p * np.trace(els[0] @ a).real + (1 - p) * np.trace(els[1] @ b).real
        assert 1 - pgm_succ <= 2 * (1 - h_succ) + 1e-9


def test_purify_pure_state():
    psi = qs.random_pure({"A": 2}, np.random.default_rng(12))
    pur = qs.purify(psi.density(), "R")
    red = pur.density().partial_trace({"A"})
    assert np.allclose(red.mat, psi.density().mat, atol=1e-10)


def test_purify_marginal():
    rho = qs.random_density({"A": 2, "B": 2}, np.random.default_rng(13))
    pur = qs.purify(rho, "R")
    assert np.allclose(pur.density().partial_trace({"A", "B"}).mat, rho.mat, atol=1e-10)


def test_uhlmann_same_state_unit_overlap():
    rho = qs.random_density({"A": 2}, np.random.default_rng(14))
    p1 = qs.purify(rho, "R")
    p2 = qs.purify(rho, "S")
    W, pur_in, pur_out = qs.uhlmann_isometry(rho, rho, p1, p2)
    out = p1.apply_isometry(W, pur_in, {n: p2.labels[n] for n in pur_out})
    assert abs(out.inner(p2)) == pytest.approx(1.0, abs=1e-9)


def test_uhlmann_achieves_fidelity():
    rng = np.random.default_rng(15)
    for _ in range(10):
        r1 = qs.random_density({"A": 2, "B": 2}, rng)
        r2 = qs.random_density({"A": 2, "B": 2}, rng)
        p1 = qs.purify(r1, "R")
        p2 = qs.purify(r2, "S")
        W, pur_in, pur_out = qs.uhlmann_isometry(r1, r2, p1, p2)
        out = p1.apply_isometry(W, pur_in, {n: p2.labels[n] for n in pur_out})
        assert abs(out.inner(p2)) == pytest.approx(qs.fidelity(r1, r2), abs=1e-8)


def test_dim_cap_enforced():
    with pytest.raises(CapabilityError):
        qs.basis_state({"A": 2**13}, 0)


def test_state_norm_validated():
    with pytest.raises(ConstructionError):
        qs.StateVector({"A": 2}, [1.0, 1.0])


def test_density_validation():
    with pytest.raises(ConstructionError):
        qs.DensityMatrix({"A": 2}, np.array([[1.0, 0.5], [0.4, 0.0]]))


def test_serialization_roundtrip():
    phi = qs.epr_pair("A", "B")
    back = qs.from_json(qs.to_json(phi))
    assert np.allclose(back.amps, phi.amps)
    rho = qs.random_density({"A": 2, "B": 2}, np.random.default_rng(16))
    back2 = qs.from_json(qs.to_json(rho))
    assert np.allclose(back2.mat, rho.mat)


def test_label_canonicalization():
    # amplitudes given in (B, A) order describe the same state as (A, B)
    rng = np.random.default_rng(17)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    a /= np.linalg.norm(a)
    s1 = qs.StateVector({"A": 2, "B": 2}, a, given_order=["B", "A"])
    s2 = qs.StateVector({"A": 2, "B": 2}, a.reshape(2, 2).T.reshape(-1), given_order=["A", "B"])
    assert np.allclose(s1.amps, s2.amps)
