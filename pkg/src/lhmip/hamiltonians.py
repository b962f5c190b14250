"""XZ-form Hamiltonians ``H = (1/m) Σ α_ℓ P_ℓ`` and gap amplification."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bitvec_pauli import BitString, PauliWord, to_matrix
from .css_code import CheckResult
from .serialization import dumps
from .statesim import StateVector

GROUND_LIMIT = 12
TERM_BUDGET = 4096
MAX_POWER = 3


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class XZHamiltonian:
    n: int
    terms: tuple[tuple[float, PauliWord], ...]

    @property
    def m(self) -> int:
        return len(self.terms)

    @classmethod
    def from_terms(cls, n: int, terms) -> "XZHamiltonian":
        return cls(n, tuple((float(a), w) for a, w in terms))

    @classmethod
    def parse(cls, n: int, spec: list[tuple[float, str]]) -> "XZHamiltonian":
        """Shorthand: ``[(alpha, "XIZ"), ...]``."""
        return cls.from_terms(n, [(a, PauliWord.parse(t)) for a, t in spec])

    def to_matrix(self) -> np.ndarray:
        if self.n > GROUND_LIMIT:
            raise BudgetExceeded(f"n={self.n} exceeds dense limit {GROUND_LIMIT}")
        out = np.zeros((1 << self.n, 1 << self.n), dtype=complex)
        for a, w in self.terms:
            out += a * to_matrix(w)
        return out / self.m

    def abs_alpha_mean(self) -> float:
        return sum(abs(a) for a, _ in self.terms) / self.m

    def expectation(self, psi: StateVector) -> float:
        if psi.num_qubits != self.n:
            raise ValueError(f"{psi.num_qubits}-qubit state for a {self.n}-qubit Hamiltonian")
        return sum(a * psi.expect_pauli(w).real for a, w in self.terms) / self.m

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"alpha": a, "x": str(BitString(self.n, w.x)), "z": str(BitString(self.n, w.z))}
                for a, w in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "XZHamiltonian":
        n = int(data["n"])
        terms = []
        for t in data["terms"]:
            x, z = BitString.from_str(t["x"]), BitString.from_str(t["z"])
            if x.n != n or z.n != n:
                raise ValueError(f"term strings must have length {n}")
            terms.append((float(t["alpha"]), PauliWord.XZ(x, z)))
        return cls(n, tuple(terms))


def load_hamiltonian(path) -> XZHamiltonian:
    with open(Path(path)) as fh:
        return XZHamiltonian.from_json(json.load(fh))


def save_hamiltonian(h: XZHamiltonian, path) -> None:
    Path(path).write_text(dumps(h.to_json()) + "\n")


def validate(h: XZHamiltonian) -> list[CheckResult]:
    big = [f"term {k}: alpha={a}" for k, (a, _) in enumerate(h.terms) if abs(a) > 1]
    overlap = [f"term {k}: {w}" for k, (_, w) in enumerate(h.terms) if w.x & w.z]
    sized = [f"term {k}" for k, (_, w) in enumerate(h.terms) if w.n != h.n]
    signed = [f"term {k}" for k, (_, w) in enumerate(h.terms) if w.sign != 1]
    return [
        CheckResult("has_terms", h.m >= 1),
        CheckResult("alpha_magnitude", not big, "; ".join(big)),
        CheckResult("xz_disjoint", not overlap, "; ".join(overlap)),
        CheckResult("word_length", not sized, "; ".join(sized)),
        CheckResult("unsigned_words", not signed, "; ".join(signed)),
    ]


def ground(h: XZHamiltonian, limit: int = GROUND_LIMIT) -> tuple[float, StateVector]:
    if h.n > limit:
        raise BudgetExceeded(f"n={h.n} exceeds dense limit {limit}")
    vals, vecs = np.linalg.eigh(h.to_matrix())
    v = vecs[:, 0]
    lead = v[np.argmax(np.abs(v))]
    v = v * (abs(lead) / lead)
    return float(vals[0]), StateVector(v / np.linalg.norm(v), h.n)


def energy_value(h: XZHamiltonian, psi: StateVector) -> float:
    """Closed-form honest energy-measurement acceptance ``1 - (<H>/4 + Σ|α|/2m)``."""
    return 1.0 - (0.25 * h.expectation(psi) + 0.5 * h.abs_alpha_mean())


def energy_rule_value(h: XZHamiltonian, psi: StateVector) -> float:
    """Acceptance produced by the sign-comparison rule with |α| rejection.

    Per term the rule accepts with ``1 - (|α| + α<P>)/2``; averaging gives
    ``1 - <H>/2 - Σ|α|/2m``.
    """
    return 1.0 - (0.5 * h.expectation(psi) + 0.5 * h.abs_alpha_mean())


@dataclass(frozen=True)
class AmplificationSpec:
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0 and self.p > self.q):
            raise ValueError("need p > q > 0")

    @classmethod
    def from_power(cls, a: int) -> "AmplificationSpec":
        return cls(2.0 * a, 2.0 * a / 3.0)

    @property
    def a_exact(self) -> float:
        return 1.0 / (1.0 / self.q - 1.0 / self.p)

    @property
    def a(self) -> int:
        return max(1, math.ceil(self.a_exact - 1e-9))


def amplified_min(lam: float, spec: AmplificationSpec) -> float:
    a = spec.a
    return 1.0 - (1.0 - (lam - 1.0 / a)) ** a


@dataclass(frozen=True)
class Amplified:
    """``H' = scale * hamiltonian`` over ``a * n`` qubits."""

    hamiltonian: XZHamiltonian
    scale: float
    a: int
    a_exact: float


def expand_amplified(
    h: XZHamiltonian,
    spec: AmplificationSpec,
    term_budget: int = TERM_BUDGET,
    qubit_limit: int = GROUND_LIMIT,
) -> Amplified:
    """Pauli expansion of ``I - ((1 + 1/a) I - H)^{⊗a}``."""
    a = spec.a
    if a > MAX_POWER:
        raise BudgetExceeded(f"tensor power a={a} exceeds {MAX_POWER}")
    if (h.m + 1) ** a > term_budget:
        raise BudgetExceeded(f"(m+1)^a = {(h.m + 1) ** a} terms exceeds budget {term_budget}")
    if h.n * a > qubit_limit:
        raise BudgetExceeded(f"a*n = {a * h.n} qubits exceeds {qubit_limit}")

    g: dict[tuple[int, int], float] = {(0, 0): 1.0 + 1.0 / a}
    for alpha, w in h.terms:
        key = (w.x, w.z)
        g[key] = g.get(key, 0.0) - alpha * w.sign / h.m
    g_terms = [(c, PauliWord(h.n, x, z)) for (x, z), c in g.items() if c != 0]

    total: dict[tuple[int, int], float] = {(0, 0): 1.0}
    n_big = h.n * a
    for combo in itertools.product(g_terms, repeat=a):
        coef = 1.0
        word = PauliWord(0)
        for c, w in combo:
            coef *= c
            word = word.tensor(w)
        key = (word.x, word.z)
        total[key] = total.get(key, 0.0) - coef * word.sign
    terms = [(c, PauliWord(n_big, x, z)) for (x, z), c in sorted(total.items()) if abs(c) > 1e-15]
    if not terms:
        terms = [(0.0, PauliWord.identity(n_big))]
    biggest = max(abs(c) for c, _ in terms) or 1.0
    m_new = len(terms)
    scaled = XZHamiltonian(n_big, tuple((c / biggest, w) for c, w in terms))
    return Amplified(scaled, biggest * m_new, a, spec.a_exact)


def amplified_spectrum_oracle(h: XZHamiltonian, a: int) -> np.ndarray:
    """Sorted multiset ``{1 - Π_k (1 + 1/a - λ_{i_k})}`` over all a-tuples of eigenvalues."""
    vals = np.linalg.eigvalsh(h.to_matrix())
    shifted = 1.0 + 1.0 / a - vals
    prods = np.ones(1)
    for _ in range(a):
        prods = np.multiply.outer(prods, shifted).reshape(-1)
    return np.sort(1.0 - prods)

