"""The verifier: query types, question sampling, acceptance rules and exact
enumeration of the question distribution.

Every acceptance rule reduces to at most one parity check on answer bits:
the listed ``(prover, slot)`` answers must multiply to ``target``.  An energy
measurement check is the exception in meaning only: agreement triggers a
rejection coin of bias ``|alpha|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bitvec_pauli import BitString, PauliWord, dot_parity, xor
from .css_code import InvariantViolation, StabilizerCode, complementary
from .hamiltonians import XZHamiltonian

TESTS = ("Linearity", "Anticommutation", "Stabilizer", "EnergyMeasurement", "EnergyConsistency")
ENCODING_TESTS = TESTS[:3]
ENUM_LIMIT = 3


class ArityMismatch(ValueError):
    pass


class EnumerationBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Query:
    """One prover's query.

    ``kind`` is ``"X"``, ``"Z"``, ``"XZ"`` or ``"W"``.  X/Z pairs are kept in
    lexicographic order; use :meth:`pair` to build them.  For W-queries
    ``basis`` is ``"X'"`` or ``"Z'"``.
    """

    kind: str
    a: BitString
    b: BitString
    basis: str = ""

    def __post_init__(self):
        if self.kind not in ("X", "Z", "XZ", "W"):
            raise ValueError(f"unknown query kind {self.kind!r}")
        if self.a.n != self.b.n:
            raise ValueError("query strings differ in length")
        if self.kind in ("X", "Z") and self.a.value > self.b.value:
            raise ValueError("X/Z query strings must be stored in lexicographic order")
        if self.kind == "XZ" and self.a.value & self.b.value:
            raise ValueError("XZ query needs disjoint supports")
        if self.kind == "W" and self.basis not in ("X'", "Z'"):
            raise ValueError("W query needs basis X' or Z'")

    @classmethod
    def pair(cls, kind: str, s: BitString, t: BitString) -> "Query":
        lo, hi = (s, t) if s.value <= t.value else (t, s)
        return cls(kind, lo, hi)

    @property
    def arity(self) -> int:
        return 1 if self.kind == "W" else 2

    def slot_of(self, s: BitString) -> int:
        """Answer slot holding string ``s`` of an X/Z query."""
        if s == self.a:
            return 0
        if s == self.b:
            return 1
        raise KeyError(f"{s} is not part of {self}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "a": str(self.a), "b": str(self.b)}
        if self.basis:
            out["basis"] = self.basis
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Query":
        return cls(data["kind"], BitString.from_str(data["a"]), BitString.from_str(data["b"]),
                   data.get("basis", ""))

    def __str__(self) -> str:
        head = self.basis if self.kind == "W" else self.kind
        return f"({head},{self.a},{self.b})"


@dataclass(frozen=True)
class Check:
    """Accept iff the product of the listed answers equals ``target``."""

    factors: tuple[tuple[int, int], ...]  # (prover 1-based, slot)
    target: int


@dataclass(frozen=True)
class Question:
    test: str
    special: int
    queries: tuple[Query | None, ...]
    padded: frozenset[int]
    check: Check | None
    alpha: float | None = None
    meta: tuple[tuple[str, object], ...] = ()

    @property
    def r(self) -> int:
        return len(self.queries)

    @property
    def auto_accept(self) -> bool:
        return self.check is None

    def key(self) -> tuple:
        """Identifies the question up to padding strings."""
        live = tuple(None if j + 1 in self.padded else q for j, q in enumerate(self.queries))
        return (self.test, self.special, live, self.check, self.alpha)

    def to_json(self) -> dict:
        out = {
            "test": self.test,
            "special": self.special,
            "queries": [None if q is None else q.to_json() for q in self.queries],
            "padded": sorted(self.padded),
            "check": None if self.check is None else {
                "factors": [list(f) for f in self.check.factors],
                "target": self.check.target,
            },
            "meta": {k: v for k, v in self.meta},
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


@dataclass(frozen=True)
class ProtocolParams:
    p: float
    code: StabilizerCode
    H: XZHamiltonian

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def r(self) -> int:
        return self.code.r


def _random_string(n: int, rng) -> BitString:
    return BitString(n, int(rng.integers(0, 1 << n)))


def complementary_query(code: StabilizerCode, i: int, q: Query, rng=None):
    """Queries for the composite prover built from the canonical stabilizer.

    Returns ``(queries, padded)``: a tuple indexed by prover (entry ``i - 1``
    is ``None``) and the 1-based padded provers.  Padding queries are drawn
    from ``rng`` when given and left as ``None`` otherwise.
    """
    if q.kind not in ("X", "Z"):
        raise ValueError(f"complementary query needs an X- or Z-query, got {q.kind}")
    full, _ = complementary(code, i, q.kind)
    mask = full.x if q.kind == "X" else full.z
    queries: list[Query | None] = []
    padded = set()
    for j in range(1, code.r + 1):
        if j == i:
            queries.append(None)
        elif mask >> (code.r - j) & 1:
            queries.append(q)
        else:
            padded.add(j)
            if rng is None:
                queries.append(None)
            else:
                n = q.a.n
                queries.append(Query.pair(q.kind, _random_string(n, rng), _random_string(n, rng)))
    return tuple(queries), frozenset(padded)


def _composite_factors(queries, padded, special, q: Query, s: BitString):
    slot = q.slot_of(s)
    return tuple((j + 1, slot) for j in range(len(queries)) if j + 1 != special and j + 1 not in padded)


def _with_special(queries, i: int, q: Query) -> tuple:
    out = list(queries)
    out[i - 1] = q
    return tuple(out)


# --- question builders shared by sampling and enumeration ---------------------

def linearity_question(code, i, basis, a, b, c, which, rng=None) -> Question:
    special_q = Query.pair(basis, a, b)
    shared = (a, b, xor(a, b))[which]
    comp_q = Query.pair(basis, shared, c)
    queries, padded = complementary_query(code, i, comp_q, rng)
    factors = _composite_factors(queries, padded, i, comp_q, shared)
    if which < 2:
        factors += ((i, special_q.slot_of(shared)),)
    else:
        factors += ((i, special_q.slot_of(a)), (i, special_q.slot_of(b)))
    meta = (("basis", basis), ("shared", ("a", "b", "a+b")[which]))
    return Question("Linearity", i, _with_special(queries, i, special_q), padded,
                    Check(factors, 1), meta=meta)


def stabilizer_question(code, i, basis, a, b, c, rng=None) -> Question:
    special_q = Query.pair(basis, a, b)
    comp_q = Query.pair(basis, a, c)
    queries, padded = complementary_query(code, i, comp_q, rng)
    factors = _composite_factors(queries, padded, i, comp_q, a) + ((i, special_q.slot_of(a)),)
    return Question("Stabilizer", i, _with_special(queries, i, special_q), padded,
                    Check(factors, 1), meta=(("basis", basis),))


def anticommutation_question(code, i, basis, wbasis, a, b, c, rng=None) -> Question:
    special_q = Query("W", a, b, wbasis)
    shared = a if basis == "X" else b
    comp_q = Query.pair(basis, shared, c)
    queries, padded = complementary_query(code, i, comp_q, rng)
    meta = (("basis", basis), ("w_basis", wbasis))
    check = None
    if dot_parity(a, b):
        target = -1 if (wbasis, basis) == ("Z'", "Z") else 1
        factors = _composite_factors(queries, padded, i, comp_q, shared) + ((i, 0),)
        check = Check(factors, target)
    return Question("Anticommutation", i, _with_special(queries, i, special_q), padded,
                    check, meta=meta)


def term_shares(code: StabilizerCode, word: PauliWord):
    """Per-prover ``(a_i, b_i)`` and the sign relating their product to the logical term."""
    lx, lz = code.logical_x, code.logical_z
    if not (lx.is_x_type() and lz.is_z_type()):
        raise InvariantViolation("energy test needs pure X-type / Z-type logical operators")
    n = word.n
    shares = []
    for i in range(1, code.r + 1):
        bit = 1 << (code.r - i)
        a = word.x if lx.x & bit else 0
        b = word.z if lz.z & bit else 0
        shares.append((BitString(n, a), BitString(n, b)))
    sign = word.sign
    if lx.sign < 0 and word.x.bit_count() % 2:
        sign = -sign
    if lz.sign < 0 and word.z.bit_count() % 2:
        sign = -sign
    return shares, sign


def energy_measurement_question(code, H, i, ell) -> Question:
    alpha, word = H.terms[ell]
    shares, sign = term_shares(code, word)
    queries = tuple(Query("XZ", a, b) for a, b in shares)
    factors = tuple((j, s) for j in range(1, code.r + 1) for s in (0, 1))
    target = (1 if alpha >= 0 else -1) * sign
    return Question("EnergyMeasurement", i, queries, frozenset(), Check(factors, target),
                    alpha=alpha, meta=(("term", ell),))


def energy_consistency_question(code, H, i, ell, variant, sub, c, d, rng=None) -> Question:
    _, word = H.terms[ell]
    shares, _ = term_shares(code, word)
    a_i, b_i = shares[i - 1]
    shift = a_i if variant == "X" else b_i
    c2 = xor(c, shift)
    comp_q = Query.pair(variant, c, c2)
    queries, padded = complementary_query(code, i, comp_q, rng)
    if sub == 0:
        special_q = Query("XZ", a_i, b_i)
        slot = 0 if variant == "X" else 1
        factors = (_composite_factors(queries, padded, i, comp_q, c)
                   + _composite_factors(queries, padded, i, comp_q, c2) + ((i, slot),))
    else:
        s = c if sub == 1 else c2
        special_q = Query.pair(variant, s, d)
        factors = _composite_factors(queries, padded, i, comp_q, s) + ((i, special_q.slot_of(s)),)
    meta = (("term", ell), ("variant", variant), ("sub", sub))
    return Question("EnergyConsistency", i, _with_special(queries, i, special_q), padded,
                    Check(factors, 1), meta=meta)


# --- sampling -----------------------------------------------------------------

def mixture_weights(p: float) -> dict[str, float]:
    enc = (1.0 - p) / 3.0
    return {
        "Linearity": enc,
        "Anticommutation": enc,
        "Stabilizer": enc,
        "EnergyMeasurement": p / 2.0,
        "EnergyConsistency": p / 2.0,
    }


def sample_test_question(params: ProtocolParams, test: str, rng: np.random.Generator,
                         pad: bool = True) -> Question:
    """Draw a question of one given test (special prover uniform over r)."""
    code, H, n, r = params.code, params.H, params.n, params.r
    prng = rng if pad else None
    i = int(rng.integers(1, r + 1))
    if test == "EnergyMeasurement":
        return energy_measurement_question(code, H, i, int(rng.integers(0, H.m)))
    if test == "EnergyConsistency":
        ell = int(rng.integers(0, H.m))
        variant = "X" if rng.random() < 0.5 else "Z"
        v = rng.random()
        sub = 0 if v < 0.5 else (1 if v < 0.75 else 2)
        c, d = _random_string(n, rng), _random_string(n, rng)
        return energy_consistency_question(code, H, i, ell, variant, sub, c, d, prng)
    basis = "X" if rng.random() < 0.5 else "Z"
    a, b, c = (_random_string(n, rng) for _ in range(3))
    if test == "Linearity":
        return linearity_question(code, i, basis, a, b, c, int(rng.integers(0, 3)), prng)
    if test == "Anticommutation":
        wbasis = "X'" if rng.random() < 0.5 else "Z'"
        return anticommutation_question(code, i, basis, wbasis, a, b, c, prng)
    if test == "Stabilizer":
        return stabilizer_question(code, i, basis, a, b, c, prng)
    raise ValueError(f"unknown test {test!r}")


def sample_question(params: ProtocolParams, rng: np.random.Generator, pad: bool = True) -> Question:
    """Draw from the full mixture: energy tests w.p. p, each encoding test w.p. (1-p)/3."""
    u = rng.random()
    if u < params.p:
        test = "EnergyMeasurement" if rng.random() < 0.5 else "EnergyConsistency"
    else:
        test = ENCODING_TESTS[int(rng.integers(0, 3))]
    return sample_test_question(params, test, rng, pad)


# --- acceptance ---------------------------------------------------------------

def _read(answers, prover: int, slot: int) -> int:
    ans = answers[prover - 1]
    if ans is None or ans[slot] is None:
        raise ArityMismatch(f"answer of prover {prover} slot {slot} is missing")
    return ans[slot]


def check_arity(question: Question, answers) -> None:
    if len(answers) != question.r:
        raise ArityMismatch(f"{len(answers)} answers for {question.r} provers")
    for j, (q, ans) in enumerate(zip(question.queries, answers), start=1):
        if j in question.padded and ans is None:
            continue
        if ans is None:
            raise ArityMismatch(f"prover {j} did not answer")
        if q is not None and len(ans) != q.arity:
            raise ArityMismatch(f"prover {j}: {len(ans)} bits for a {q.kind}-query")
        for bit in ans:
            if bit not in (1, -1, None):
                raise ArityMismatch(f"prover {j}: answer bit {bit!r} is not ±1")


def accept(question: Question, answers, rng: np.random.Generator | None = None) -> bool:
    """Apply the verifier's decision to ``answers``.

    ``answers[j]`` is the ±1 tuple of prover ``j + 1``; padded provers may
    answer ``None`` and slots the rule does not read may be ``None``.
    """
    check_arity(question, answers)
    if question.check is None:
        return True
    prod = 1
    for prover, slot in question.check.factors:
        prod *= _read(answers, prover, slot)
    agree = prod == question.check.target
    if question.alpha is None:
        return agree
    if not agree:
        return True
    if rng is None:
        raise ValueError("energy measurement rejection needs an rng")
    return bool(rng.random() >= abs(question.alpha))


def acceptance_from_correlator(question: Question, corr: float) -> float:
    """Exact acceptance given ``corr = <product of the check's answers>``."""
    if question.check is None:
        return 1.0
    agree = 0.5 * (1.0 + question.check.target * corr)
    if question.alpha is None:
        return agree
    return 1.0 - abs(question.alpha) * agree


# --- exact enumeration --------------------------------------------------------

def enumerate_questions(params: ProtocolParams, tests=TESTS, limit: int = ENUM_LIMIT):
    """Support of the question distribution with exact weights.

    Padding strings are left out (their provers are never read); their
    queries are ``None``.  Only the requested ``tests`` are listed, each with
    its mixture weight.
    """
    code, H, n, r = params.code, params.H, params.n, params.r
    if n > limit:
        raise EnumerationBudgetExceeded(f"n={n} exceeds enumeration limit {limit}")
    weights = mixture_weights(params.p)
    strings = [BitString(n, v) for v in range(1 << n)]
    s1 = 1.0 / len(strings)
    out: list[tuple[Question, float]] = []
    for test in tests:
        w_test = weights[test]
        if w_test == 0:
            continue
        for i in range(1, r + 1):
            w = w_test / r
            if test == "Linearity":
                for basis, a, b, c, which in itertools.product("XZ", strings, strings, strings, range(3)):
                    out.append((linearity_question(code, i, basis, a, b, c, which),
                                w * 0.5 * s1 ** 3 / 3.0))
            elif test == "Stabilizer":
                for basis, a, b, c in itertools.product("XZ", strings, strings, strings):
                    out.append((stabilizer_question(code, i, basis, a, b, c), w * 0.5 * s1 ** 3))
            elif test == "Anticommutation":
                for basis, wb, a, b, c in itertools.product("XZ", ("X'", "Z'"), strings, strings, strings):
                    out.append((anticommutation_question(code, i, basis, wb, a, b, c),
                                w * 0.25 * s1 ** 3))
            elif test == "EnergyMeasurement":
                for ell in range(H.m):
                    out.append((energy_measurement_question(code, H, i, ell), w / H.m))
            elif test == "EnergyConsistency":
                for ell, variant in itertools.product(range(H.m), "XZ"):
                    base = w * 0.5 / H.m
                    zero = strings[0]
                    for c in strings:
                        out.append((energy_consistency_question(code, H, i, ell, variant, 0, c, zero),
                                    base * 0.5 * s1))
                    for sub in (1, 2):
                        for c, d in itertools.product(strings, strings):
                            out.append((energy_consistency_question(code, H, i, ell, variant, sub, c, d),
                                        base * 0.25 * s1 * s1))
            else:
                raise ValueError(f"unknown test {test!r}")
    return out


def weight_total(questions) -> float:
    return math.fsum(w for _, w in questions)


@dataclass
class TranscriptRecord:
    seed: int
    chunk: int
    index: int
    question: Question
    answers: tuple
    accepted: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "chunk": self.chunk,
            "index": self.index,
            "question": self.question.to_json(),
            "answers": [None if a is None else list(a) for a in self.answers],
            "accept": self.accepted,
        }
