"""Dense statevector engine.

Qubit ``q`` of an ``N``-qubit state is tensor factor ``q`` counted from the
left, i.e. bit ``N - 1 - q`` of the basis index.  Observables and
measurements act on an ordered tuple of target qubits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bitvec_pauli import (
    PauliWord,
    apply_to_vector,
    multiply,
    to_matrix,
)

SIM_LIMIT = 21
NORM_TOL = 1e-12
HERM_TOL = 1e-9


class SimulationLimitExceeded(ValueError):
    pass


class TargetError(ValueError):
    pass


def _check_targets(targets, num_qubits: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise TargetError(f"repeated target qubits {targets}")
    if any(t < 0 or t >= num_qubits for t in targets):
        raise TargetError(f"targets {targets} out of range for {num_qubits} qubits")
    return targets


def embed_word(word: PauliWord, targets, num_qubits: int) -> PauliWord:
    """Lift a word on ``targets`` to the full ``num_qubits`` system."""
    targets = _check_targets(targets, num_qubits)
    if len(targets) != word.n:
        raise TargetError(f"{word.n}-qubit word on {len(targets)} targets")
    x = z = 0
    for k, q in enumerate(targets):
        src = 1 << (word.n - 1 - k)
        dst = 1 << (num_qubits - 1 - q)
        if word.x & src:
            x |= dst
        if word.z & src:
            z |= dst
    return PauliWord(num_qubits, x, z, word.sign)


def apply_dense(vec: np.ndarray, op: np.ndarray, targets, num_qubits: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix on ``targets``; ``vec`` may carry columns."""
    targets = _check_targets(targets, num_qubits)
    k = len(targets)
    if op.shape != (1 << k, 1 << k):
        raise TargetError(f"operator of shape {op.shape} on {k} targets")
    extra = vec.shape[1:]
    t = vec.reshape((2,) * num_qubits + extra)
    t = np.moveaxis(t, targets, range(k))
    front = t.shape
    t = (op @ t.reshape(1 << k, -1)).reshape(front)
    t = np.moveaxis(t, range(k), targets)
    return t.reshape(vec.shape)


class StateVector:
    """Immutable pure state on ``num_qubits`` qubits."""

    def __init__(self, amplitudes, num_qubits: int | None = None, *, check: bool = True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if num_qubits is None:
            num_qubits = int(amps.size).bit_length() - 1
        if amps.size != 1 << num_qubits:
            raise ValueError(f"{amps.size} amplitudes for {num_qubits} qubits")
        if num_qubits > SIM_LIMIT:
            raise SimulationLimitExceeded(f"{num_qubits} qubits exceeds limit {SIM_LIMIT}")
        if check and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL * max(1, amps.size) ** 0.5:
            raise ValueError("state is not unit norm")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.num_qubits = num_qubits
        self._pauli_cache: dict[tuple[int, int], complex] = {}

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps, len(bits))

    @classmethod
    def random(cls, num_qubits: int, rng: np.random.Generator) -> "StateVector":
        v = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
        return cls(v / np.linalg.norm(v), num_qubits)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def expect_pauli(self, word: PauliWord) -> complex:
        """``<psi| word |psi>`` (complex for non-Hermitian words); cached by mask."""
        if word.n != self.num_qubits:
            raise TargetError(f"{word.n}-qubit word on {self.num_qubits}-qubit state")
        key = (word.x, word.z)
        val = self._pauli_cache.get(key)
        if val is None:
            val = self._pauli_value(word.x, word.z)
            self._pauli_cache[key] = val
        return word.sign * val

    def _pauli_value(self, x: int, z: int) -> complex:
        psi = self.amplitudes
        moved = apply_to_vector(PauliWord(self.num_qubits, x, z), psi)
        return complex(np.vdot(psi, moved))

    def to_json(self) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]

    @classmethod
    def from_json(cls, data) -> "StateVector":
        return cls(np.array([complex(re, im) for re, im in data]))


def apply_pauli(state: StateVector, word: PauliWord, targets) -> StateVector:
    full = embed_word(word, targets, state.num_qubits)
    return StateVector(apply_to_vector(full, state.amplitudes), state.num_qubits)


@dataclass(frozen=True)
class BinaryObservable:
    """Observable on ``targets``: a real combination of Pauli words or a dense matrix.

    Exactly one of ``terms`` / ``matrix`` is set.  Pauli terms keep the
    honest strategy cheap; dense matrices cover everything else.
    """

    targets: tuple[int, ...]
    terms: tuple[tuple[float, PauliWord], ...] | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def pauli(cls, word: PauliWord, targets, coef: float = 1.0) -> "BinaryObservable":
        return cls(tuple(targets), terms=((coef, word),))

    @classmethod
    def pauli_sum(cls, terms, targets) -> "BinaryObservable":
        return cls(tuple(targets), terms=tuple((float(c), w) for c, w in terms))

    @classmethod
    def dense(cls, matrix, targets) -> "BinaryObservable":
        m = np.asarray(matrix, dtype=complex)
        return cls(tuple(targets), matrix=m)

    @classmethod
    def scalar(cls, value: float, targets) -> "BinaryObservable":
        return cls.pauli(PauliWord.identity(len(targets)), targets, value)

    @property
    def is_pauli(self) -> bool:
        return self.terms is not None

    def to_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        dim = 1 << len(self.targets)
        out = np.zeros((dim, dim), dtype=complex)
        for c, w in self.terms:
            out += c * to_matrix(w)
        return out

    def __neg__(self) -> "BinaryObservable":
        if self.terms is not None:
            return BinaryObservable(self.targets, terms=tuple((-c, w) for c, w in self.terms))
        return BinaryObservable(self.targets, matrix=-self.matrix)

    def __matmul__(self, other: "BinaryObservable") -> "BinaryObservable":
        """Operator product on identical targets (used for commuting answer slots)."""
        if self.targets != other.targets:
            raise TargetError("product of observables on different targets")
        if self.is_pauli and other.is_pauli:
            merged: dict[tuple[int, int], float] = {}
            for c1, w1 in self.terms:
                for c2, w2 in other.terms:
                    w = multiply(w1, w2)
                    merged[(w.x, w.z)] = merged.get((w.x, w.z), 0.0) + c1 * c2 * w.sign
            n = len(self.targets)
            terms = tuple((c, PauliWord(n, x, z)) for (x, z), c in merged.items() if c != 0)
            return BinaryObservable(self.targets, terms=terms)
        return BinaryObservable.dense(self.to_matrix() @ other.to_matrix(), self.targets)

    def check(self, tol: float = HERM_TOL) -> None:
        m = self.to_matrix()
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("observable is not Hermitian")
        if np.abs(m @ m - np.eye(m.shape[0])).max() > tol:
            raise ValueError("observable does not square to identity")


def expect_product(state: StateVector, observables) -> float:
    """``<psi| O_1 O_2 ... |psi>`` for observables on equal-or-disjoint targets.

    Observables sharing targets must commute (they are multiplied in the
    given order); observables on disjoint targets commute automatically.
    """
    groups: dict[tuple[int, ...], BinaryObservable] = {}
    seen: set[int] = set()
    for obs in observables:
        if obs.targets in groups:
            groups[obs.targets] = groups[obs.targets] @ obs
            continue
        if seen & set(obs.targets):
            raise TargetError("observables overlap without identical targets")
        seen |= set(obs.targets)
        groups[obs.targets] = obs
    nq = state.num_qubits
    if all(g.is_pauli for g in groups.values()):
        total = [(1.0, PauliWord.identity(nq))]
        for g in groups.values():
            lifted = [(c, embed_word(w, g.targets, nq)) for c, w in g.terms]
            total = [(c1 * c2, multiply(w1, w2)) for c1, w1 in total for c2, w2 in lifted]
        val = sum(c * state.expect_pauli(w) for c, w in total)
    else:
        vec = state.amplitudes
        for g in groups.values():
            vec = apply_observable(vec, g, nq)
        val = np.vdot(state.amplitudes, vec)
    if abs(np.imag(val)) > HERM_TOL:
        raise ValueError(f"product expectation has imaginary part {np.imag(val):.3e}")
    return float(np.real(val))


def apply_observable(vec: np.ndarray, obs: BinaryObservable, num_qubits: int) -> np.ndarray:
    """``obs`` applied to a full state vector (or a stack of column vectors)."""
    if obs.is_pauli:
        acc = np.zeros_like(vec, dtype=complex)
        for c, w in obs.terms:
            acc = acc + c * apply_to_vector(embed_word(w, obs.targets, num_qubits), vec)
        return acc
    return apply_dense(vec, obs.matrix, obs.targets, num_qubits)


def expectation(state: StateVector, obs: BinaryObservable) -> float:
    if obs.is_pauli:
        if not all(w.is_hermitian() for _, w in obs.terms):
            raise ValueError("observable has a non-Hermitian Pauli term")
    elif np.abs(obs.matrix - obs.matrix.conj().T).max() > HERM_TOL:
        raise ValueError("observable is not Hermitian")
    return expect_product(state, [obs])


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Outcome-indexed orthogonal projectors on ``targets``."""

    targets: tuple[int, ...]
    projectors: tuple[np.ndarray, ...] = field(compare=False)

    def __post_init__(self):
        dim = 1 << len(self.targets)
        total = np.zeros((dim, dim), dtype=complex)
        for i, p in enumerate(self.projectors):
            if p.shape != (dim, dim):
                raise ValueError("projector dimension does not match targets")
            for j, q in enumerate(self.projectors):
                want = p if i == j else 0
                if np.abs(p @ q - want).max() > HERM_TOL:
                    raise ValueError("projectors are not orthogonal idempotents")
            total = total + p
        if np.abs(total - np.eye(dim)).max() > HERM_TOL:
            raise ValueError("projectors do not sum to identity")

    @classmethod
    def from_observables(cls, obs1: BinaryObservable, obs2: BinaryObservable | None = None):
        """Joint measurement of commuting observables; outcomes ordered (+,+),(+,-),(-,+),(-,-)."""
        a = obs1.to_matrix()
        eye = np.eye(a.shape[0])
        if obs2 is None:
            return cls(obs1.targets, ((eye + a) / 2, (eye - a) / 2))
        if obs2.targets != obs1.targets:
            raise TargetError("joint measurement needs identical targets")
        b = obs2.to_matrix()
        projs = tuple((eye + s * a) @ (eye + t * b) / 4 for s in (1, -1) for t in (1, -1))
        return cls(obs1.targets, projs)

    def full(self, num_qubits: int) -> list[np.ndarray]:
        """Projectors lifted to the whole ``num_qubits`` space."""
        dim = 1 << num_qubits
        cols = np.eye(dim, dtype=complex)
        return [apply_dense(cols, p, self.targets, num_qubits) for p in self.projectors]


def eigsign_observable(a: np.ndarray, rng: np.random.Generator, targets=None) -> ProjectiveMeasurement:
    """Two-outcome measurement onto the positive/negative spectrum of ``a``.

    Zero-eigenvalue eigenvectors go to either outcome with probability 1/2
    each, drawn from ``rng``.
    """
    a = np.asarray(a, dtype=complex)
    if np.abs(a - a.conj().T).max() > HERM_TOL:
        raise ValueError("eigsign needs a Hermitian operator")
    if targets is None:
        targets = tuple(range(int(a.shape[0]).bit_length() - 1))
    vals, vecs = np.linalg.eigh(a)
    plus = np.zeros_like(a)
    for lam, v in zip(vals, vecs.T):
        if abs(lam) <= HERM_TOL:
            goes_plus = rng.random() < 0.5
        else:
            goes_plus = lam > 0
        if goes_plus:
            plus += np.outer(v, v.conj())
    return ProjectiveMeasurement(tuple(targets), (plus, np.eye(a.shape[0]) - plus))


def joint_distribution(state: StateVector, parts) -> dict[tuple[int, ...], float]:
    """Born probabilities of simultaneous measurements on disjoint targets."""
    used: set[int] = set()
    for m in parts:
        if used & set(m.targets):
            raise TargetError("joint measurement parts overlap")
        used |= set(m.targets)
    nq = state.num_qubits
    out = {}
    for outcome in itertools.product(*[range(len(m.projectors)) for m in parts]):
        vec = state.amplitudes
        for m, o in zip(parts, outcome):
            vec = apply_dense(vec, m.projectors[o], m.targets, nq)
        out[outcome] = float(np.vdot(vec, vec).real)
    return out


def psd_sqrt(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals.min() < -tol * max(1.0, abs(vals).max()) - tol:
        raise ValueError("matrix is not positive semidefinite")
    vals = np.where(vals < tol, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _as_vec(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


def distance(psi, m, n) -> float:
    """State-dependent distance between two POVMs given as full-space matrices."""
    if len(m) != len(n):
        raise ValueError("outcome-count mismatch")
    v = _as_vec(psi)
    d2 = 0.0
    for ma, na in zip(m, n):
        diff = (psd_sqrt(ma) - psd_sqrt(na)) @ v
        d2 += float(np.vdot(diff, diff).real)
    return d2 ** 0.5


def consistency(psi, m, n) -> float:
    if len(m) != len(n):
        raise ValueError("outcome-count mismatch")
    v = _as_vec(psi)
    return float(sum(np.vdot(v, ma @ (na @ v)) for ma, na in zip(m, n)).real)


def observable_distance(psi, a: np.ndarray, b: np.ndarray) -> float:
    """``sqrt(½<psi|(A - B)^2|psi>)``, the binary-observable form of :func:`distance`."""
    v = _as_vec(psi)
    diff = (a - b) @ v
    return (0.5 * float(np.vdot(diff, diff).real)) ** 0.5
