"""Prover strategies: a shared state plus, for every (prover, query), one
observable per answer slot.  Slots of one query commute, so the joint
projective measurement is their common eigenbasis."""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .bitvec_pauli import BitString, PauliWord, commute_sign, dot_parity, to_matrix
from .css_code import StabilizerCode, encode
from .hamiltonians import XZHamiltonian, ground
from .protocol import Query
from .statesim import BinaryObservable, ProjectiveMeasurement, StateVector, eigsign_observable

_RT2 = 1.0 / math.sqrt(2.0)


def bitflip_code(r: int = 7) -> StabilizerCode:
    """Repetition code ``Z_k Z_{k+1}``; fine as a stabilizer code, not CSS-symmetric."""
    gens = tuple(PauliWord(r, z=(0b11 << (r - 2 - k))) for k in range(r - 1))
    return StabilizerCode(r, gens, PauliWord(r, x=(1 << r) - 1), PauliWord(r, z=1 << (r - 1)),
                          name="bitflip")


def _query_rng(q: Query, i: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{i}:{q}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class Strategy:
    """Base class.  ``registers[i - 1]`` are the qubits of prover ``i``."""

    def __init__(self, state: StateVector, registers, n: int, label: str):
        self.state = state
        self.registers = tuple(tuple(reg) for reg in registers)
        self.n = n
        self.label = label
        used = [q for reg in self.registers for q in reg]
        if len(set(used)) != len(used):
            raise ValueError("prover registers overlap")

    @property
    def r(self) -> int:
        return len(self.registers)

    def observables(self, i: int, q: Query, rng=None) -> tuple[BinaryObservable, ...]:
        obs = self._slots(i, q, rng)
        if len(obs) != q.arity:
            raise ValueError(f"{len(obs)} observables for a {q.kind}-query")
        if q.kind in ("X", "Z") and q.a == q.b:
            obs = (obs[0], obs[0])
        return obs

    def measurement_for(self, i: int, q: Query, rng=None) -> ProjectiveMeasurement:
        obs = self.observables(i, q, rng)
        return ProjectiveMeasurement.from_observables(*obs)

    def _slots(self, i: int, q: Query, rng) -> tuple[BinaryObservable, ...]:
        raise NotImplementedError


class PauliStrategy(Strategy):
    """Each prover measures X(a), Z(b) on its own register.

    ``flips`` maps a prover to the bases whose observables it negates.
    """

    def __init__(self, state, registers, n, label, flips=None, hamiltonian=None, code=None):
        super().__init__(state, registers, n, label)
        self.flips = {k: frozenset(v) for k, v in (flips or {}).items()}
        self.hamiltonian = hamiltonian
        self.code = code

    def _sign(self, i: int, basis: str) -> float:
        return -1.0 if basis in self.flips.get(i, ()) else 1.0

    def _slots(self, i, q, rng):
        reg = self.registers[i - 1]
        sx, sz = self._sign(i, "X"), self._sign(i, "Z")
        xa, za = PauliWord.X(q.a), PauliWord.Z(q.a)
        xb, zb = PauliWord.X(q.b), PauliWord.Z(q.b)
        if q.kind == "X":
            return (BinaryObservable.pauli(xa, reg, sx), BinaryObservable.pauli(xb, reg, sx))
        if q.kind == "Z":
            return (BinaryObservable.pauli(za, reg, sz), BinaryObservable.pauli(zb, reg, sz))
        if q.kind == "XZ":
            if commute_sign(xa, zb) < 0:
                raise ValueError("XZ query with overlapping supports")
            return (BinaryObservable.pauli(xa, reg, sx), BinaryObservable.pauli(zb, reg, sz))
        zsign = sz if q.basis == "X'" else -sz
        if dot_parity(q.a, q.b):
            return (BinaryObservable.pauli_sum([(sx * _RT2, xa), (zsign * _RT2, zb)], reg),)
        # X(a), Z(b) commute: split the zero eigenspace at random
        mat = _RT2 * (sx * to_matrix(xa) + zsign * to_matrix(zb))
        meas = eigsign_observable(mat, rng if rng is not None else _query_rng(q, i), reg)
        plus, minus = meas.projectors
        return (BinaryObservable.dense(plus - minus, reg),)


def honest(H: XZHamiltonian, code: StabilizerCode) -> PauliStrategy:
    _, gs = ground(H)
    state = encode(gs, code)
    regs = [state.prover_qubits(i) for i in range(code.r)]
    return PauliStrategy(state, regs, H.n, "honest", hamiltonian=H, code=code)


class ClassicalLinear(Strategy):
    """Unentangled deterministic provers: answers are linear functions of the strings.

    The X-answer for string ``s`` is ``(-1)^{seed_x·s}`` and the Z-answer
    ``(-1)^{seed_z·s}``.  W-queries follow ``w_rule``: ``"x"`` answers the
    X-value of ``a``, ``"z"`` the Z-value of ``b``, ``"plus"`` always +1.
    """

    def __init__(self, seed_x: BitString, seed_z: BitString, r: int = 7, w_rule: str = "x"):
        if w_rule not in ("x", "z", "plus"):
            raise ValueError(f"unknown W rule {w_rule!r}")
        n = seed_x.n
        state = StateVector.basis("0" * (n * r))
        regs = [tuple(range(i * n, (i + 1) * n)) for i in range(r)]
        super().__init__(state, regs, n, f"classical_linear(w={w_rule})")
        self.seed_x, self.seed_z, self.w_rule = seed_x, seed_z, w_rule

    def _value(self, basis: str, s: BitString) -> float:
        seed = self.seed_x if basis == "X" else self.seed_z
        return -1.0 if dot_parity(seed, s) else 1.0

    def _slots(self, i, q, rng):
        reg = self.registers[i - 1]
        if q.kind in ("X", "Z"):
            vals = (self._value(q.kind, q.a), self._value(q.kind, q.b))
        elif q.kind == "XZ":
            vals = (self._value("X", q.a), self._value("Z", q.b))
        elif self.w_rule == "x":
            vals = (self._value("X", q.a),)
        elif self.w_rule == "z":
            vals = (self._value("Z", q.b),)
        else:
            vals = (1.0,)
        return tuple(BinaryObservable.scalar(v, reg) for v in vals)


def classical_linear(seed_x: BitString, seed_z: BitString, r: int = 7, w_rule: str = "x") -> ClassicalLinear:
    return ClassicalLinear(seed_x, seed_z, r, w_rule)


def _parse_kind(kind):
    if isinstance(kind, str):
        return kind, ()
    return kind[0], tuple(kind[1:])


def corrupted(base: PauliStrategy, kind) -> Strategy:
    """Apply one corruption, or a list of them in order (empty list: unchanged).

    Kinds: ``("sign_flip", prover, basis)``, ``"wrong_code"``, ``"product_ground"``.
    """
    if isinstance(kind, list):
        out = base
        for k in kind:
            out = corrupted(out, k)
        return out
    name, args = _parse_kind(kind)
    if not isinstance(base, PauliStrategy):
        raise ValueError("corruptions apply to Pauli-measurement strategies")
    if name == "sign_flip":
        prover, basis = args
        if basis not in ("X", "Z") or not 1 <= prover <= base.r:
            raise ValueError(f"bad sign_flip arguments {args}")
        flips = {k: set(v) for k, v in base.flips.items()}
        flips.setdefault(prover, set()).add(basis)
        return PauliStrategy(base.state, base.registers, base.n, f"{base.label}+sign_flip({prover},{basis})",
                             flips, base.hamiltonian, base.code)
    if base.hamiltonian is None or base.code is None:
        raise ValueError(f"{name} needs a strategy built from a Hamiltonian and a code")
    if name == "wrong_code":
        bad = bitflip_code(base.code.r)
        _, gs = ground(base.hamiltonian)
        state = encode(gs, bad)
        regs = [state.prover_qubits(i) for i in range(bad.r)]
        return PauliStrategy(state, regs, base.n, f"{base.label}+wrong_code", base.flips,
                             base.hamiltonian, base.code)
    if name == "product_ground":
        _, gs = ground(base.hamiltonian)
        n, r = base.n, base.r
        amps = gs.amplitudes
        for _ in range(r - 1):
            amps = np.kron(amps, gs.amplitudes)
        state = StateVector(amps, n * r)
        regs = [tuple(range(i * n, (i + 1) * n)) for i in range(r)]
        return PauliStrategy(state, regs, n, f"{base.label}+product_ground", base.flips,
                             base.hamiltonian, base.code)
    raise ValueError(f"unknown corruption {name!r}")


def build_strategy(name: str, H: XZHamiltonian, code: StabilizerCode, params: dict | None = None) -> Strategy:
    """Strategy by name, as selected from a CLI config."""
    params = dict(params or {})
    if name == "honest":
        return honest(H, code)
    if name == "classical_linear":
        n = H.n
        sx = BitString.from_str(params.get("seed_x", "0" * n))
        sz = BitString.from_str(params.get("seed_z", "0" * n))
        return classical_linear(sx, sz, code.r, params.get("w_rule", "x"))
    if name == "corrupted":
        kinds = params.get("kinds", [])
        parsed = [k if isinstance(k, str) else tuple(k) for k in kinds]
        return corrupted(honest(H, code), parsed)
    raise ValueError(f"unknown strategy {name!r}")
