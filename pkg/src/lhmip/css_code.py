"""CSS stabilizer codes: the Steane code, its stabilizer group, complementary
operators and qubit-by-qubit encoding of logical states."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .bitvec_pauli import (
    DENSE_LIMIT,
    PauliWord,
    apply_to_vector,
    commute_sign,
    multiply,
)
from .statesim import SIM_LIMIT, SimulationLimitExceeded, StateVector

MAX_GENERATORS = 20


class InvalidCode(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class StabilizerCode:
    r: int
    generators: tuple[PauliWord, ...]
    logical_x: PauliWord
    logical_z: PauliWord
    name: str = "custom"

    def __post_init__(self):
        for w in (*self.generators, self.logical_x, self.logical_z):
            if w.n != self.r:
                raise InvalidCode(f"word {w} is not on {self.r} qubits")

    @cached_property
    def group(self) -> dict[tuple[int, int], PauliWord]:
        """Stabilizer group keyed by ``(x_mask, z_mask)``."""
        return {(w.x, w.z): w for w in stabilizer_group(self)}

    @cached_property
    def _codewords(self) -> tuple[np.ndarray, np.ndarray]:
        return codewords(self)

    @cached_property
    def _logical_classes(self):
        """``(L, logical_x_power, logical_z_power)`` for the four logical cosets."""
        eye = PauliWord.identity(self.r)
        out = []
        for lx in (0, 1):
            for lz in (0, 1):
                w = eye
                if lx:
                    w = multiply(w, self.logical_x)
                if lz:
                    w = multiply(w, self.logical_z)
                out.append((w, lx, lz))
        return tuple(out)

    def has_independent_generators(self) -> bool:
        return len(self.group) == 1 << len(self.generators)

    def decompose(self, word: PauliWord) -> tuple[int, int, int] | None:
        """Write ``word = c · S · X_L^lx Z_L^lz`` with ``S`` in the group.

        Returns ``(c, lx, lz)`` or ``None`` when ``word`` is outside the
        normalizer (its codespace expectation then vanishes).
        """
        for gen in self.generators:
            if commute_sign(gen, word) < 0:
                return None
        for logical, lx, lz in self._logical_classes:
            s = self.group.get((word.x ^ logical.x, word.z ^ logical.z))
            if s is None:
                continue
            prod = multiply(s, logical)
            return (word.sign * prod.sign, lx, lz)
        return None

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "generators": [str(g) for g in self.generators],
            "logical_x": str(self.logical_x),
            "logical_z": str(self.logical_z),
        }

    @classmethod
    def from_json(cls, data: dict, name: str = "custom") -> "StabilizerCode":
        try:
            r = int(data["r"])
            gens = tuple(PauliWord.parse(g) for g in data["generators"])
            lx = PauliWord.parse(data["logical_x"])
            lz = PauliWord.parse(data["logical_z"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidCode(f"malformed code description: {exc}") from exc
        return cls(r, gens, lx, lz, name)


def load_code(path) -> StabilizerCode:
    path = Path(path)
    with open(path) as fh:
        return StabilizerCode.from_json(json.load(fh), name=path.stem)


def steane() -> StabilizerCode:
    text = resources.files("lhmip.data").joinpath("steane.json").read_text()
    return StabilizerCode.from_json(json.loads(text), name="steane")


def stabilizer_group(code: StabilizerCode) -> list[PauliWord]:
    gens = code.generators
    if len(gens) > MAX_GENERATORS:
        raise InvalidCode(f"{len(gens)} generators exceeds {MAX_GENERATORS}")
    elems = {(0, 0): PauliWord.identity(code.r)}
    for g in gens:
        for w in list(elems.values()):
            p = multiply(w, g)
            elems.setdefault((p.x, p.z), p)
    return sorted(elems.values(), key=lambda w: (w.x, w.z))


def complementary(code: StabilizerCode, i: int, basis: str) -> tuple[PauliWord, PauliWord]:
    """Canonical ``(S, P̄)`` for position ``i`` (1-based) and basis ``"X"``/``"Z"``.

    ``S`` is the same-type group element with the basis letter at ``i`` whose
    support, read as a binary number with position 1 most significant, is
    smallest.  ``P̄`` is ``S`` with position ``i`` removed.
    """
    if not 1 <= i <= code.r:
        raise ValueError(f"position {i} outside 1..{code.r}")
    if basis not in ("X", "Z"):
        raise ValueError(f"basis must be X or Z, got {basis!r}")
    cache = code.__dict__.setdefault("_complementary_cache", {})
    hit = cache.get((i, basis))
    if hit is not None:
        return hit
    bit = 1 << (code.r - i)
    best = None
    for w in code.group.values():
        pure = w.is_x_type() if basis == "X" else w.is_z_type()
        mask = w.x if basis == "X" else w.z
        if pure and mask & bit and w.sign > 0 and (best is None or mask < best):
            best = mask
    if best is None:
        raise InvariantViolation(f"no {basis}-type stabilizer with support at position {i}")
    full = PauliWord(code.r, x=best) if basis == "X" else PauliWord(code.r, z=best)
    cache[(i, basis)] = (full, restrict(full, i))
    return cache[(i, basis)]


def restrict(word: PauliWord, i: int) -> PauliWord:
    """Drop 1-based position ``i`` from ``word``."""
    low = (1 << (word.n - i)) - 1

    def cut(m: int) -> int:
        return ((m >> (word.n - i + 1)) << (word.n - i)) | (m & low)

    return PauliWord(word.n - 1, cut(word.x), cut(word.z), word.sign)


def codewords(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray]:
    if code.r > DENSE_LIMIT:
        raise InvalidCode(f"r={code.r} exceeds dense limit")
    v = np.zeros(1 << code.r, dtype=complex)
    v[0] = 1.0
    for g in (*code.generators, code.logical_z):
        v = (v + apply_to_vector(g, v)) / 2
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise InvalidCode("projection onto the code space vanished")
    v = v / norm
    lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
    v = v * (abs(lead) / lead)
    one = apply_to_vector(code.logical_x, v)
    return v, one


class EncodedState(StateVector):
    """Block-major encoding of an ``n``-qubit logical state.

    Physical qubit ``(j, i)`` (block ``j``, position ``i``, both 0-based) is
    qubit ``j * r + i``.  Pauli expectations are evaluated on the logical
    state whenever the code's generators are independent.
    """

    def __init__(self, amplitudes, logical: StateVector, code: StabilizerCode):
        self.logical = logical
        self.code = code
        self.n = logical.num_qubits
        self.r = code.r
        self._fast = code.has_independent_generators() and len(code.generators) == code.r - 1
        super().__init__(amplitudes, self.n * self.r)

    def prover_qubits(self, i: int) -> tuple[int, ...]:
        """Qubits held by prover ``i`` (0-based): one per logical block."""
        return tuple(j * self.r + i for j in range(self.n))

    def _pauli_value(self, x: int, z: int) -> complex:
        if not self._fast:
            return super()._pauli_value(x, z)
        r, n = self.r, self.n
        block = (1 << r) - 1
        coef = 1
        lxs = lzs = 0
        for j in range(n):
            shift = (n - 1 - j) * r
            part = self.code.decompose(PauliWord(r, (x >> shift) & block, (z >> shift) & block))
            if part is None:
                return 0j
            c, lx, lz = part
            coef *= c
            lxs = (lxs << 1) | lx
            lzs = (lzs << 1) | lz
        return coef * self.logical.expect_pauli(PauliWord(n, lxs, lzs))


def encode(psi_logical, code: StabilizerCode) -> EncodedState:
    logical = psi_logical if isinstance(psi_logical, StateVector) else StateVector(psi_logical)
    n = logical.num_qubits
    if n * code.r > SIM_LIMIT:
        raise SimulationLimitExceeded(f"rn = {n * code.r} exceeds {SIM_LIMIT}")
    c0, c1 = code._codewords
    enc = np.stack([c0, c1], axis=1)
    t = logical.amplitudes.reshape((2,) * n) if n else logical.amplitudes
    for _ in range(n):
        # contract the leading logical axis; encoded blocks accumulate at the back
        t = np.tensordot(t, enc, axes=([0], [1]))
    return EncodedState(t.reshape(-1), logical, code)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def validate_css(code: StabilizerCode) -> list[CheckResult]:
    checks = []
    bad = [str(g) for g in code.generators if not (g.is_x_type() or g.is_z_type())]
    checks.append(CheckResult("pure_type_generators", not bad, ", ".join(bad)))

    clashes = [
        f"{a}~{b}"
        for k, a in enumerate(code.generators)
        for b in code.generators[k + 1:]
        if commute_sign(a, b) < 0
    ]
    checks.append(CheckResult("generators_commute", not clashes, ", ".join(clashes)))

    lclash = [
        f"{g}~{name}"
        for g in code.generators
        for name, lw in (("logical_x", code.logical_x), ("logical_z", code.logical_z))
        if commute_sign(g, lw) < 0
    ]
    checks.append(CheckResult("logicals_commute_with_generators", not lclash, ", ".join(lclash)))

    checks.append(CheckResult(
        "logicals_anticommute", commute_sign(code.logical_x, code.logical_z) < 0))

    missing = []
    if not clashes:
        group = code.group
        for i in range(1, code.r + 1):
            bit = 1 << (code.r - i)
            ok = any(
                w.is_x_type() and w.x & bit and (0, w.x) in group
                for w in group.values()
            )
            if not ok:
                missing.append(str(i))
    else:
        missing.append("group undefined")
    checks.append(CheckResult("css_symmetry", not missing, ", ".join(missing)))
    return checks
