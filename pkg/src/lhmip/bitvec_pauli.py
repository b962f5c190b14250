"""Bit strings over F2 and signed I/X/Z Pauli words.

Qubit 1 is the leftmost character of every text form and the most
significant tensor factor of every matrix.  Internally a length-n string is
an ``int`` whose bit ``n - 1 - k`` holds position ``k`` (0-based), so the
integer value read in binary is the string itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

DENSE_LIMIT = 14

_I2 = np.eye(2, dtype=complex)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
_XZ2 = _X2 @ _Z2


class LengthMismatch(ValueError):
    pass


class DenseLimitExceeded(ValueError):
    pass


def _check_len(n1: int, n2: int) -> None:
    if n1 != n2:
        raise LengthMismatch(f"length mismatch: {n1} != {n2}")


def parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True, order=True)
class BitString:
    n: int
    value: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("bit strings have length >= 1")
        if not 0 <= self.value < (1 << self.n):
            raise ValueError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return cls(len(s), int(s, 2))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(n, 0)

    @classmethod
    def from_bits(cls, bits) -> "BitString":
        bits = list(bits)
        return cls(len(bits), reduce(lambda acc, b: (acc << 1) | (int(b) & 1), bits, 0))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> (self.n - 1 - k)) & 1 for k in range(self.n))

    def __getitem__(self, k: int) -> int:
        """Bit at 0-based position ``k`` (position ``k + 1`` in 1-based terms)."""
        if not 0 <= k < self.n:
            raise IndexError(k)
        return (self.value >> (self.n - 1 - k)) & 1

    def weight(self) -> int:
        return self.value.bit_count()

    def __str__(self) -> str:
        return format(self.value, f"0{self.n}b")

    def __xor__(self, other: "BitString") -> "BitString":
        return xor(self, other)

    def __and__(self, other: "BitString") -> "BitString":
        _check_len(self.n, other.n)
        return BitString(self.n, self.value & other.value)


def xor(a: BitString, b: BitString) -> BitString:
    _check_len(a.n, b.n)
    return BitString(a.n, a.value ^ b.value)


def dot_parity(a: BitString, b: BitString) -> int:
    _check_len(a.n, b.n)
    return parity(a.value & b.value)


def all_bitstrings(n: int) -> list[BitString]:
    return [BitString(n, v) for v in range(1 << n)]


@dataclass(frozen=True)
class PauliWord:
    """``sign * X(x) Z(z)`` on ``n`` qubits; masks are ints in string order."""

    n: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative qubit count")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask wider than word")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def identity(cls, n: int) -> "PauliWord":
        return cls(n)

    @classmethod
    def X(cls, a: BitString) -> "PauliWord":
        return cls(a.n, x=a.value)

    @classmethod
    def Z(cls, b: BitString) -> "PauliWord":
        return cls(b.n, z=b.value)

    @classmethod
    def XZ(cls, a: BitString, b: BitString) -> "PauliWord":
        _check_len(a.n, b.n)
        return cls(a.n, x=a.value, z=b.value)

    @classmethod
    def parse(cls, text: str) -> "PauliWord":
        sign = 1
        body = text.strip()
        if body.startswith("-"):
            sign, body = -1, body[1:]
        elif body.startswith("+"):
            body = body[1:]
        x = z = 0
        for ch in body:
            if ch not in "IXZW":
                raise ValueError(f"bad Pauli character {ch!r} in {text!r}")
            x = (x << 1) | (ch in "XW")
            z = (z << 1) | (ch in "ZW")
        return cls(len(body), x, z, sign)

    @property
    def x_mask(self) -> BitString:
        return BitString(self.n, self.x)

    @property
    def z_mask(self) -> BitString:
        return BitString(self.n, self.z)

    @property
    def support(self) -> int:
        return self.x | self.z

    def is_x_type(self) -> bool:
        return self.z == 0

    def is_z_type(self) -> bool:
        return self.x == 0

    def is_hermitian(self) -> bool:
        return parity(self.x & self.z) == 0

    def letter(self, k: int) -> str:
        """Character at 0-based position ``k``."""
        bit = 1 << (self.n - 1 - k)
        return "IXZW"[bool(self.x & bit) + 2 * bool(self.z & bit)]

    def __str__(self) -> str:
        body = "".join(self.letter(k) for k in range(self.n))
        return ("-" if self.sign < 0 else "") + body

    def __neg__(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, -self.sign)

    def __mul__(self, other: "PauliWord") -> "PauliWord":
        return multiply(self, other)

    def unsigned(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, 1)

    def tensor(self, other: "PauliWord") -> "PauliWord":
        """``self ⊗ other`` with ``self`` on the leading qubits."""
        return PauliWord(
            self.n + other.n,
            (self.x << other.n) | other.x,
            (self.z << other.n) | other.z,
            self.sign * other.sign,
        )


def multiply(p: PauliWord, q: PauliWord) -> PauliWord:
    """Product ``p·q``; moving Z(p.z) past X(q.x) costs (-1)^{p.z·q.x}."""
    _check_len(p.n, q.n)
    sign = p.sign * q.sign * (-1 if parity(p.z & q.x) else 1)
    return PauliWord(p.n, p.x ^ q.x, p.z ^ q.z, sign)


def commute_sign(p: PauliWord, q: PauliWord) -> int:
    _check_len(p.n, q.n)
    return -1 if parity((p.x & q.z) ^ (p.z & q.x)) else 1


def to_matrix(p: PauliWord, limit: int = DENSE_LIMIT) -> np.ndarray:
    if p.n > limit:
        raise DenseLimitExceeded(f"{p.n} qubits exceeds dense limit {limit}")
    factors = {"I": _I2, "X": _X2, "Z": _Z2, "W": _XZ2}
    out = np.ones((1, 1), dtype=complex)
    for k in range(p.n):
        out = np.kron(out, factors[p.letter(k)])
    return p.sign * out


_INDEX_CACHE: dict[int, np.ndarray] = {}


def basis_indices(num_qubits: int) -> np.ndarray:
    idx = _INDEX_CACHE.get(num_qubits)
    if idx is None:
        idx = np.arange(1 << num_qubits, dtype=np.int64)
        idx.setflags(write=False)
        _INDEX_CACHE[num_qubits] = idx
    return idx


def apply_to_vector(p: PauliWord, vec: np.ndarray) -> np.ndarray:
    """``p @ vec`` without materializing the matrix.

    ``(X(x) Z(z) v)[k] = (-1)^{|(k ^ x) & z|} v[k ^ x]``.  ``vec`` may carry
    trailing columns.
    """
    idx = basis_indices(p.n)
    if vec.shape[0] != idx.size:
        raise LengthMismatch(f"vector of length {vec.shape[0]} for a {p.n}-qubit word")
    out = vec
    if p.z:
        phase = 1.0 - 2.0 * (np.bitwise_count(idx & p.z) & 1)
        out = out * (phase if out.ndim == 1 else phase[:, None])
    if p.x:
        out = out[idx ^ p.x]
    return out * p.sign if p.sign < 0 else out
