import json
from functools import reduce

import numpy as np
import pytest

from lhmip.bitvec_pauli import PauliWord
from lhmip.hamiltonians import (
    AmplificationSpec,
    BudgetExceeded,
    XZHamiltonian,
    amplified_min,
    amplified_spectrum_oracle,
    energy_rule_value,
    energy_value,
    expand_amplified,
    ground,
    load_hamiltonian,
    save_hamiltonian,
    validate,
)
from lhmip.statesim import StateVector


def random_h(rng, n, m):
    terms = []
    for _ in range(m):
        x = int(rng.integers(1 << n))
        z = int(rng.integers(1 << n)) & ~x
        terms.append((float(rng.uniform(-1, 1)), PauliWord(n, x, z)))
    return XZHamiltonian(n, tuple(terms))


def test_ground_examples(h_z, h_xxzz):
    lam, psi = ground(h_z)
    assert lam == pytest.approx(-1)
    assert abs(abs(psi.amplitudes[1]) - 1) < 1e-12
    lam, psi = ground(h_xxzz)
    assert lam == pytest.approx(-1)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert abs(abs(np.vdot(singlet, psi.amplitudes)) - 1) < 1e-12
    lam, _ = ground(XZHamiltonian.parse(2, [(1.0, "II")]))
    assert lam == pytest.approx(1)


def test_ground_residual_and_variational(rng):
    for _ in range(10):
        h = random_h(rng, 3, 4)
        lam, psi = ground(h)
        m = h.to_matrix()
        assert np.linalg.norm(m @ psi.amplitudes - lam * psi.amplitudes) <= 1e-9
        for _ in range(100):
            v = StateVector.random(3, rng)
            assert h.expectation(v) >= lam - 1e-9


def test_ground_limit():
    with pytest.raises(BudgetExceeded):
        ground(XZHamiltonian.parse(13, [(1.0, "Z" * 13)]))


def test_energy_value_examples(h_z, h_xxzz):
    assert energy_value(h_z, StateVector.basis("1")) == pytest.approx(0.75, abs=1e-12)
    singlet = StateVector(np.array([0, 1, -1, 0]) / np.sqrt(2))
    assert energy_value(h_xxzz, singlet) == pytest.approx(0.75, abs=1e-12)
    zero = XZHamiltonian.parse(1, [(0.0, "Z"), (0.0, "X")])
    assert energy_value(zero, StateVector.basis("0")) == pytest.approx(1.0)


def test_energy_value_identity(rng):
    for _ in range(20):
        h = random_h(rng, 2, 3)
        lam, psi = ground(h)
        mean_abs = sum(abs(a) for a, _ in h.terms) / h.m
        assert energy_value(h, psi) == pytest.approx(1 - (0.25 * lam + 0.5 * mean_abs), abs=1e-12)


def test_energy_rule_value_per_term(rng):
    # the sign rule accepts term l with 1 - (|a| + a<P>)/2; averaged over l
    h = random_h(rng, 2, 3)
    psi = StateVector.random(2, rng)
    per_term = [1 - (abs(a) + a * psi.expect_pauli(w).real) / 2 for a, w in h.terms]
    assert energy_rule_value(h, psi) == pytest.approx(np.mean(per_term), abs=1e-12)


def test_amplified_min_golden():
    spec = AmplificationSpec(4, 2)
    assert spec.a == 4
    assert amplified_min(0.25, spec) == pytest.approx(0.0, abs=1e-15)
    assert amplified_min(0.5, spec) == 175 / 256
    for a in (1, 2, 3, 5):
        s = AmplificationSpec.from_power(a)
        assert s.a == a
        assert amplified_min(1 / a, s) == pytest.approx(0.0, abs=1e-15)


def test_amplification_rounding():
    spec = AmplificationSpec(5, 2)
    assert spec.a_exact == pytest.approx(10 / 3)
    assert spec.a == 4
    with pytest.raises(ValueError):
        AmplificationSpec(1, 2)


def _dense_oracle(h, a):
    g = (1 + 1 / a) * np.eye(1 << h.n) - h.to_matrix()
    power = reduce(np.kron, [g] * a)
    return np.linalg.eigvalsh(np.eye(power.shape[0]) - power)


def test_expand_a1_is_shift(h_z):
    ex = expand_amplified(h_z, AmplificationSpec.from_power(1))
    np.testing.assert_allclose(ex.hamiltonian.to_matrix() * ex.scale, h_z.to_matrix() - np.eye(2), atol=1e-12)


def test_expand_z_a2(h_z):
    spec = AmplificationSpec.from_power(2)
    ex = expand_amplified(h_z, spec)
    dense = np.linalg.eigvalsh(ex.hamiltonian.to_matrix())[0] * ex.scale
    assert dense == pytest.approx(amplified_min(-1.0, spec), abs=1e-9)
    assert max(abs(a) for a, _ in ex.hamiltonian.terms) == pytest.approx(1.0)


def test_expand_budget(h_z):
    with pytest.raises(BudgetExceeded):
        expand_amplified(h_z, AmplificationSpec(4, 2))
    with pytest.raises(BudgetExceeded):
        expand_amplified(h_z, AmplificationSpec.from_power(3), term_budget=4)


def test_expand_spectrum_random(rng):
    for _ in range(12):
        n = int(rng.integers(1, 3))
        h = random_h(rng, n, int(rng.integers(1, 4)))
        for a in (1, 2, 3):
            ex = expand_amplified(h, AmplificationSpec.from_power(a))
            got = np.sort(np.linalg.eigvalsh(ex.hamiltonian.to_matrix()) * ex.scale)
            np.testing.assert_allclose(got, _dense_oracle(h, a), atol=1e-9)
            np.testing.assert_allclose(got, amplified_spectrum_oracle(h, a), atol=1e-9)
            assert got[0] == pytest.approx(amplified_min(ground(h)[0], AmplificationSpec.from_power(a)), abs=1e-9)


def test_validate_examples(h_z):
    assert all(c.passed for c in validate(h_z))
    bad = XZHamiltonian(1, ((1.0, PauliWord.parse("W")),))
    assert not {c.name: c.passed for c in validate(bad)}["xz_disjoint"]
    big = XZHamiltonian.parse(1, [(1.5, "Z")])
    assert not {c.name: c.passed for c in validate(big)}["alpha_magnitude"]


def test_json_round_trip(tmp_path, rng):
    h = random_h(rng, 3, 4)
    path = tmp_path / "h.json"
    save_hamiltonian(h, path)
    back = load_hamiltonian(path)
    assert back == h
    raw = json.loads(path.read_text())
    assert all(len(t["x"]) == 3 for t in raw["terms"])
