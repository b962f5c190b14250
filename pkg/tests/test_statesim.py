import numpy as np
import pytest
from scipy.stats import unitary_group

from lhmip.bitvec_pauli import PauliWord, to_matrix
from lhmip.statesim import (
    BinaryObservable,
    ProjectiveMeasurement,
    StateVector,
    TargetError,
    apply_dense,
    apply_pauli,
    consistency,
    distance,
    eigsign_observable,
    expect_product,
    expectation,
    joint_distribution,
    observable_distance,
    psd_sqrt,
)

BELL = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
PLUS = StateVector(np.array([1, 1]) / np.sqrt(2))


def test_apply_pauli_examples():
    out = apply_pauli(StateVector.basis("0"), PauliWord.parse("X"), [0])
    np.testing.assert_allclose(out.amplitudes, [0, 1])
    out = apply_pauli(PLUS, PauliWord.parse("Z"), [0])
    np.testing.assert_allclose(out.amplitudes, np.array([1, -1]) / np.sqrt(2))


def test_apply_pauli_matches_dense_oracle(rng):
    for n in range(1, 9):
        psi = StateVector.random(n, rng)
        for _ in range(5):
            k = int(rng.integers(1, n + 1))
            targets = sorted(rng.choice(n, size=k, replace=False).tolist())
            w = PauliWord(k, int(rng.integers(1 << k)), int(rng.integers(1 << k)))
            got = apply_pauli(psi, w, targets).amplitudes
            # dense oracle: build the full operator by kron over qubits
            letters = ["I"] * n
            for pos, t in enumerate(targets):
                letters[t] = w.letter(pos)
            full = to_matrix(PauliWord.parse("".join(letters)))
            np.testing.assert_allclose(got, full @ psi.amplitudes, atol=1e-12)


def test_apply_pauli_rejects_bad_targets():
    with pytest.raises(TargetError):
        apply_pauli(BELL, PauliWord.parse("XX"), [0, 0])
    with pytest.raises(TargetError):
        apply_pauli(BELL, PauliWord.parse("X"), [2])


def test_expectation_examples():
    z = BinaryObservable.pauli(PauliWord.parse("Z"), [0])
    x = BinaryObservable.pauli(PauliWord.parse("X"), [0])
    assert expectation(StateVector.basis("0"), z) == pytest.approx(1)
    assert expectation(StateVector.basis("0"), x) == pytest.approx(0)
    xx = BinaryObservable.pauli(PauliWord.parse("XX"), [0, 1])
    assert expectation(BELL, xx) == pytest.approx(1)


def test_expectation_rejects_non_hermitian():
    w = BinaryObservable.pauli(PauliWord.parse("W"), [0])
    with pytest.raises(ValueError):
        expectation(PLUS, w)


def test_expect_product_dense_and_pauli_agree(rng):
    psi = StateVector.random(3, rng)
    a = BinaryObservable.pauli(PauliWord.parse("XZ"), [0, 2])
    b = BinaryObservable.pauli(PauliWord.parse("Z"), [1])
    dense_a = BinaryObservable.dense(a.to_matrix(), [0, 2])
    assert expect_product(psi, [a, b]) == pytest.approx(expect_product(psi, [dense_a, b]), abs=1e-12)


def test_eigsign_examples(rng):
    m = eigsign_observable(to_matrix(PauliWord.parse("Z")), rng)
    np.testing.assert_allclose(m.projectors[0], [[1, 0], [0, 0]], atol=1e-12)
    h = (to_matrix(PauliWord.parse("X")) + to_matrix(PauliWord.parse("Z"))) / np.sqrt(2)
    m = eigsign_observable(h, rng)
    # oracle: spectral projectors of a 2x2 observable are (I ± h)/2
    np.testing.assert_allclose(m.projectors[0], (np.eye(2) + h) / 2, atol=1e-12)


def test_eigsign_degenerate_split():
    a = (to_matrix(PauliWord.parse("XI")) + to_matrix(PauliWord.parse("IZ"))) / np.sqrt(2)
    vals, vecs = np.linalg.eigh(a)
    zero = vecs[:, np.abs(vals) < 1e-9]
    counts = []
    for seed in range(400):
        m = eigsign_observable(a, np.random.default_rng(seed))
        counts.append(np.trace(zero.conj().T @ m.projectors[0] @ zero).real)
    # each of the two zero eigenvectors goes to + with probability 1/2
    assert np.mean(counts) == pytest.approx(1.0, abs=0.15)
    with pytest.raises(ValueError):
        eigsign_observable(np.array([[0, 1], [0, 0]]), np.random.default_rng(0))


def test_joint_distribution_examples():
    z0 = ProjectiveMeasurement.from_observables(BinaryObservable.pauli(PauliWord.parse("Z"), [0]))
    z1 = ProjectiveMeasurement.from_observables(BinaryObservable.pauli(PauliWord.parse("Z"), [1]))
    dist = joint_distribution(BELL, [z0, z1])
    assert dist[(0, 0)] == pytest.approx(0.5) and dist[(1, 1)] == pytest.approx(0.5)
    assert dist[(0, 1)] == pytest.approx(0) and dist[(1, 0)] == pytest.approx(0)
    assert joint_distribution(BELL, [z0]) == pytest.approx({(0,): 0.5, (1,): 0.5})
    ident = ProjectiveMeasurement((0,), (np.eye(2), np.zeros((2, 2))))
    assert joint_distribution(BELL, [ident]) == pytest.approx({(0,): 1.0, (1,): 0.0})
    with pytest.raises(TargetError):
        joint_distribution(BELL, [z0, z0])


def _random_projective(k, dim, rng):
    u = unitary_group.rvs(dim, random_state=rng)
    cuts = np.sort(rng.choice(np.arange(1, dim), size=k - 1, replace=False)) if k > 1 else []
    blocks = np.split(np.arange(dim), cuts)
    return [u[:, b] @ u[:, b].conj().T for b in blocks]


def test_joint_distribution_marginals(rng):
    for _ in range(20):
        psi = StateVector.random(3, rng)
        parts = [ProjectiveMeasurement((q,), tuple(_random_projective(2, 2, rng))) for q in range(3)]
        full = joint_distribution(psi, parts)
        assert sum(full.values()) == pytest.approx(1, abs=1e-9)
        drop = joint_distribution(psi, parts[:2])
        for key, val in drop.items():
            assert val == pytest.approx(full[key + (0,)] + full[key + (1,)], abs=1e-12)


def test_distance_examples():
    z, x = to_matrix(PauliWord.parse("Z")), to_matrix(PauliWord.parse("X"))
    zero = StateVector.basis("0")
    mz = [(np.eye(2) + z) / 2, (np.eye(2) - z) / 2]
    mx = [(np.eye(2) + x) / 2, (np.eye(2) - x) / 2]
    assert distance(zero, mz, mz) == pytest.approx(0)
    assert observable_distance(zero, z, x) == pytest.approx(1)
    assert distance(zero, mz, mx) == pytest.approx(1)
    assert 0 <= distance(zero, mz, mx) <= 2
    with pytest.raises(ValueError):
        distance(zero, mz, mz[:1])


def test_consistency_examples():
    z = to_matrix(PauliWord.parse("Z"))
    x = to_matrix(PauliWord.parse("X"))
    mz = [(np.eye(2) + z) / 2, (np.eye(2) - z) / 2]
    assert consistency(PLUS, mz, mz) == pytest.approx(1)
    z_first = [np.kron(p, np.eye(2)) for p in mz]
    z_second = [np.kron(np.eye(2), p) for p in mz]
    assert consistency(BELL, z_first, z_second) == pytest.approx(1)
    mx_second = [np.kron(np.eye(2), (np.eye(2) + s * x) / 2) for s in (1, -1)]
    zz = StateVector.basis("00")
    assert consistency(zz, z_first, mx_second) == pytest.approx(0.5)


def test_commuting_projective_identity(rng):
    # d^2 = 2 - 2 CON exactly for projective measurements on disjoint halves
    gaps = []
    for _ in range(200):
        k = int(rng.integers(2, 4))
        psi = StateVector.random(4, rng)
        ma = _random_projective(k, 4, rng)
        nb = _random_projective(k, 4, rng)
        m = [np.kron(p, np.eye(4)) for p in ma]
        n = [np.kron(np.eye(4), p) for p in nb]
        con = consistency(psi, m, n)
        d = distance(psi, m, n)
        assert d == pytest.approx(np.sqrt(2 * (1 - con)), abs=1e-9)
        gaps.append(d - np.sqrt(max(1 - con, 0)))
    # the sharper constant sqrt(delta) is reported, not asserted
    assert max(gaps) >= 0


def _random_povm(k, dim, rng):
    gs = []
    for _ in range(k):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gs.append(a @ a.conj().T)
    s = sum(gs)
    vals, vecs = np.linalg.eigh(s)
    inv = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return [inv @ g @ inv for g in gs]


def test_approx_lemma_bound(rng):
    for _ in range(200):
        dim = int(rng.choice([2, 4, 8, 16]))
        k = int(rng.integers(2, 5))
        psi = StateVector.random(int(np.log2(dim)), rng).amplitudes
        m, n = _random_povm(k, dim, rng), _random_povm(k, dim, rng)
        cs = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(k)]
        big_k = np.linalg.norm(sum(c @ c.conj().T for c in cs), 2)
        lhs = abs(sum(np.vdot(psi, c @ (psd_sqrt(ma) - psd_sqrt(na)) @ psi) for c, ma, na in zip(cs, m, n)))
        assert lhs <= np.sqrt(big_k) * distance(psi, m, n) + 1e-9


def test_projective_measurement_validation():
    with pytest.raises(ValueError):
        ProjectiveMeasurement((0,), (np.eye(2), np.eye(2)))


def test_state_json_round_trip(rng):
    psi = StateVector.random(2, rng)
    back = StateVector.from_json(psi.to_json())
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)


def test_state_norm_enforced():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))


def test_apply_dense_matches_kron(rng):
    psi = StateVector.random(3, rng)
    op = unitary_group.rvs(2, random_state=rng)
    got = apply_dense(psi.amplitudes, op, [1], 3)
    want = np.kron(np.kron(np.eye(2), op), np.eye(2)) @ psi.amplitudes
    np.testing.assert_allclose(got, want, atol=1e-12)
