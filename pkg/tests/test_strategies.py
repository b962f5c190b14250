import itertools

import numpy as np
import pytest

from lhmip.bitvec_pauli import BitString
from lhmip.evaluator import correlator, exact_value
from lhmip.hamiltonians import ground
from lhmip.protocol import ProtocolParams, Query, energy_measurement_question
from lhmip.strategies import bitflip_code, build_strategy, classical_linear, corrupted, honest


def bs(s):
    return BitString.from_str(s)


def test_slots_commute_and_square_to_identity(code, h_xxzz):
    s = honest(h_xxzz, code)
    for q in (Query.pair("X", bs("01"), bs("11")), Query("XZ", bs("10"), bs("01")),
              Query("W", bs("11"), bs("01"), "X'"), Query("W", bs("10"), bs("01"), "Z'")):
        meas = s.measurement_for(3, q)
        total = sum(meas.projectors)
        assert np.allclose(total, np.eye(total.shape[0]))


def test_tie_uses_one_observable(code, h_z):
    s = honest(h_z, code)
    obs = s.observables(2, Query.pair("Z", bs("1"), bs("1")))
    assert obs[0] is obs[1]


def test_energy_product_is_logical_expectation(code, h_xxzz):
    s = honest(h_xxzz, code)
    _, gs = ground(h_xxzz)
    for ell, (alpha, word) in enumerate(h_xxzz.terms):
        q = energy_measurement_question(code, h_xxzz, 1, ell)
        want = np.sign(alpha) * gs.expect_pauli(word).real
        assert correlator(s, q) * q.check.target == pytest.approx(want, abs=1e-12)


def _chsh_bound():
    # classical value of the odd branch: four constraints on two W answers
    # and two composite answers; the (Z', Z) setting wants disagreement
    best = 0
    for wx, wz, x, z in itertools.product((1, -1), repeat=4):
        best = max(best, (wx * x == 1) + (wz * x == 1) + (wx * z == 1) + (wz * z == -1))
    return best / 4


def test_classical_linear_bound(code, h_z):
    odd = _chsh_bound()
    assert odd == 0.75
    bound = 1 - 0.25 * (1 - odd)  # a·b is odd with probability 1/4 at n = 1
    params = ProtocolParams(0.0, code, h_z)
    for sx, sz, w in itertools.product("01", "01", ("x", "z", "plus")):
        r = exact_value(classical_linear(bs(sx), bs(sz), 7, w), params, ("Anticommutation", "Linearity"))
        assert r.value("Anticommutation") <= bound + 1e-12
        assert r.value("Linearity") == pytest.approx(1.0)


def test_corruptions_lower_some_test(code, h_z):
    params = ProtocolParams(0.5, code, h_z)
    base = honest(h_z, code)
    ref = exact_value(base, params)
    for kind in (("sign_flip", 1, "X"), ("sign_flip", 4, "Z"), "wrong_code", "product_ground"):
        r = exact_value(corrupted(base, kind), params)
        gap = max(ref.value(t) - r.value(t) for t in r.per_test)
        assert gap >= 0.01, kind


def test_corrupted_list_and_errors(code, h_z):
    base = honest(h_z, code)
    assert corrupted(base, []) is base
    both = corrupted(base, [("sign_flip", 1, "X"), ("sign_flip", 1, "Z")])
    assert both.flips[1] == {"X", "Z"}
    with pytest.raises(ValueError):
        corrupted(base, ("sign_flip", 9, "X"))
    with pytest.raises(ValueError):
        corrupted(base, "nonsense")


def test_bitflip_code_is_not_steane(code):
    bad = bitflip_code(7)
    assert len(bad.generators) == 6
    assert all(g.is_z_type() for g in bad.generators)


def test_build_strategy(code, h_z):
    assert build_strategy("honest", h_z, code).label == "honest"
    s = build_strategy("classical_linear", h_z, code, {"seed_x": "1", "w_rule": "z"})
    assert s.w_rule == "z" and s.seed_x == bs("1")
    s = build_strategy("corrupted", h_z, code, {"kinds": [["sign_flip", 2, "Z"]]})
    assert s.flips == {2: {"Z"}}
    with pytest.raises(ValueError):
        build_strategy("oracle", h_z, code)
