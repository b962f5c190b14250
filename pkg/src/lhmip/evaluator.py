"""Acceptance probabilities of a strategy: exact enumeration and seeded Monte Carlo."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import energy_rule_value, energy_value, ground
from .protocol import (
    TESTS,
    ProtocolParams,
    Question,
    TranscriptRecord,
    accept,
    acceptance_from_correlator,
    enumerate_questions,
    sample_question,
    sample_test_question,
)
from .serialization import dumps
from .statesim import apply_observable, expect_product

THREADS_ENV = "LHMIP_THREADS"
CHUNK = 4096
OMEGA_AC_PAPER = 0.75 + math.sqrt(2.0) / 8.0


def thread_budget(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def omega_ac_finite(n: int) -> float:
    """Honest anticommutation acceptance at n qubits: CHSH value on the a·b odd branch."""
    odd = (1.0 - 2.0 ** -n) / 2.0
    return 1.0 - odd * (0.5 - math.sqrt(2.0) / 4.0)


def omega_encode(omega_ac: float) -> float:
    return 2.0 / 3.0 + omega_ac / 3.0


def constants(n: int) -> dict:
    fin = omega_ac_finite(n)
    return {
        "omega_ac_paper": OMEGA_AC_PAPER,
        "omega_ac_finite_n": fin,
        "omega_encode_paper": omega_encode(OMEGA_AC_PAPER),
        "omega_encode_finite_n": omega_encode(fin),
    }


def bias(p_suc: float) -> float:
    return 16.0 * p_suc - 12.0


@dataclass
class EvaluationReport:
    mode: str
    total: float
    per_test: dict
    n: int
    p: float
    strategy: str
    seed: int | None = None
    samples: int | None = None
    total_stderr: float | None = None
    workers: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def beta(self) -> float | None:
        entry = self.per_test.get("Anticommutation")
        if entry is None or entry["value"] is None:
            return None
        return bias(entry["value"])

    def value(self, test: str) -> float:
        return self.per_test[test]["value"]

    def to_json(self) -> dict:
        out = {"mode": self.mode}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.samples is not None:
            out["samples"] = self.samples
        out["total"] = self.total
        if self.total_stderr is not None:
            out["total_stderr"] = self.total_stderr
        out["per_test"] = self.per_test
        out["beta"] = self.beta
        out["constants"] = constants(self.n)
        out["n"] = self.n
        out["p"] = self.p
        out["strategy"] = self.strategy
        out.update(self.extra)
        return out

    def dumps(self) -> str:
        return dumps(self.to_json())


def correlator(strategy, question: Question) -> float:
    """``<product of the check's answer observables>`` on the shared state."""
    obs = []
    for prover, slot in question.check.factors:
        obs.append(strategy.observables(prover, question.queries[prover - 1])[slot])
    return expect_product(strategy.state, obs)


def question_acceptance(strategy, question: Question) -> float:
    if question.check is None:
        return 1.0
    return acceptance_from_correlator(question, correlator(strategy, question))


def _check_shape(strategy, params: ProtocolParams) -> None:
    if strategy.r != params.r:
        raise ValueError(f"strategy has {strategy.r} provers, protocol needs {params.r}")
    if strategy.n != params.n:
        raise ValueError(f"strategy registers hold {strategy.n} qubits, protocol needs {params.n}")


def exact_value(strategy, params: ProtocolParams, tests=TESTS, workers: int | None = None) -> EvaluationReport:
    """Weighted sum of exact per-question acceptance over the enumerated support.

    Sums use ``math.fsum`` so the result does not depend on evaluation order
    or worker count.
    """
    _check_shape(strategy, params)
    questions = enumerate_questions(params, tests)
    workers = thread_budget(workers)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            accs = list(pool.map(lambda qw: question_acceptance(strategy, qw[0]), questions))
    else:
        accs = [question_acceptance(strategy, q) for q, _ in questions]
    weights: dict[str, list[float]] = {t: [] for t in tests}
    masses: dict[str, list[float]] = {t: [] for t in tests}
    for (q, w), acc in zip(questions, accs):
        weights[q.test].append(w)
        masses[q.test].append(w * acc)
    per_test = {}
    for t in tests:
        wt = math.fsum(weights[t])
        per_test[t] = {"weight": wt, "value": (math.fsum(masses[t]) / wt) if wt > 0 else None}
    total = math.fsum(m for t in tests for m in masses[t])
    return EvaluationReport("exact", total, per_test, params.n, params.p, strategy.label)


PRUNE_TOL = 1e-14
BRANCH_QUBITS = 14


def _fwht(vec: np.ndarray) -> np.ndarray:
    v = vec.copy()
    h = 1
    while h < v.size:
        v = v.reshape(-1, 2, h)
        v = np.stack([v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]], axis=1).reshape(-1)
        h *= 2
    return v


def _law_by_branching(state, obs) -> np.ndarray:
    # project onto (1 ± O_j)/2 bit by bit, dropping branches of negligible weight
    nq = state.num_qubits
    branches = [(0, state.amplitudes.astype(complex))]
    for j, o in enumerate(obs):
        nxt = []
        for idx, vec in branches:
            ov = apply_observable(vec, o, nq)
            for sign, bit in ((1, 0), (-1, 1)):
                part = 0.5 * (vec + sign * ov)
                if np.vdot(part, part).real > PRUNE_TOL:
                    nxt.append((idx | bit << j, part))
        branches = nxt
    probs = np.zeros(1 << len(obs))
    for idx, vec in branches:
        probs[idx] = np.vdot(vec, vec).real
    return probs


def _law_by_correlators(state, obs) -> np.ndarray:
    # Walsh-Hadamard transform of all subset correlators <Π_{j∈T} O_j>
    k = len(obs)
    corr = np.empty(1 << k)
    for mask in range(1 << k):
        chosen = [obs[j] for j in range(k) if mask >> j & 1]
        corr[mask] = expect_product(state, chosen) if chosen else 1.0
    return np.clip(_fwht(corr) / (1 << k), 0.0, None)


def read_distribution(strategy, question: Question):
    """Joint law of the answer bits the check reads.

    Returns ``(bits, probs)`` where ``bits`` lists ``(prover, slot)`` and
    ``probs[k]`` is the probability that bit ``j`` equals ``(-1)^{(k >> j) & 1}``.
    The read observables commute.  Small states are projected bit by bit;
    larger ones (where dense vector work is costly but Pauli correlators
    are cheap) go through the Walsh-Hadamard transform of subset correlators.
    """
    bits = list(dict.fromkeys(question.check.factors))
    obs = [strategy.observables(p, question.queries[p - 1])[s] for p, s in bits]
    if len(bits) > 16:
        raise ValueError(f"{len(bits)} read bits is beyond the sampling budget")
    if strategy.state.num_qubits <= BRANCH_QUBITS:
        probs = _law_by_branching(strategy.state, obs)
    else:
        probs = _law_by_correlators(strategy.state, obs)
    return bits, probs / probs.sum()


def _run_chunk(strategy, params, test, seed, chunk, count, cache, records):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    tally: dict[str, list[int]] = {}
    for idx in range(count):
        if test is None:
            q = sample_question(params, rng)
        else:
            q = sample_test_question(params, test, rng)
        answers = [
            None if q.queries[j] is None or (j + 1) in q.padded else [None] * q.queries[j].arity
            for j in range(q.r)
        ]
        if q.check is not None:
            key = q.key()
            law = cache.get(key)
            if law is None:
                bits, probs = read_distribution(strategy, q)
                law = (bits, np.cumsum(probs))
                cache[key] = law
            bits, cdf = law
            outcome = min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)
            for pos, (prover, slot) in enumerate(bits):
                answers[prover - 1][slot] = -1 if outcome >> pos & 1 else 1
        answers = tuple(None if a is None else tuple(a) for a in answers)
        ok = accept(q, answers, rng)
        t = tally.setdefault(q.test, [0, 0])
        t[0] += 1
        t[1] += int(ok)
        if records is not None:
            records.append(TranscriptRecord(seed, chunk, chunk * CHUNK + idx, q, tuple(answers), ok))
    return tally


def _stderr(k: int, n: int) -> float:
    if n < 2:
        return 0.0
    p = k / n
    return math.sqrt(p * (1.0 - p) / (n - 1))


def mc_estimate(strategy, params: ProtocolParams, samples: int, seed: int, test: str | None = None,
                workers: int | None = None, transcript=None) -> EvaluationReport:
    """Plain Monte Carlo over protocol runs.

    Samples are split into fixed chunks of ``CHUNK`` runs; chunk ``k`` draws
    from ``SeedSequence(seed, spawn_key=(k,))``, so the report depends only on
    ``seed`` and ``samples``.  ``test`` restricts the draw to one sub-test.
    ``transcript`` (a path) receives one JSON line per run.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    _check_shape(strategy, params)
    workers = thread_budget(workers)
    chunks = [(k, min(CHUNK, samples - k * CHUNK)) for k in range((samples + CHUNK - 1) // CHUNK)]
    cache: dict = {}
    keep = transcript is not None
    recs: list[list] = [[] if keep else None for _ in chunks]

    def job(item):
        k, count = item
        return _run_chunk(strategy, params, test, seed, k, count, cache, recs[k])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            tallies = list(pool.map(job, chunks))
    else:
        tallies = [job(c) for c in chunks]
    totals: dict[str, list[int]] = {}
    for tally in tallies:
        for t, (cnt, acc) in tally.items():
            agg = totals.setdefault(t, [0, 0])
            agg[0] += cnt
            agg[1] += acc
    per_test = {}
    for t in TESTS:
        if t not in totals:
            continue
        cnt, acc = totals[t]
        per_test[t] = {"weight": cnt / samples, "value": acc / cnt, "stderr": _stderr(acc, cnt)}
    hits = sum(a for _, a in totals.values())
    if keep:
        with open(transcript, "w") as fh:
            for chunk in recs:
                for rec in chunk:
                    fh.write(dumps(rec.to_json(), indent=None) + "\n")
    return EvaluationReport("mc", hits / samples, per_test, params.n, params.p, strategy.label,
                            seed=seed, samples=samples, total_stderr=_stderr(hits, samples),
                            workers=workers)


def completeness_formula(H, params: ProtocolParams, at_n: int | None = None, energy: str = "lemma") -> dict:
    """Honest value ``(1-p) ω_encode + p ω_energy`` with both anticommutation constants.

    ``energy="lemma"`` uses the closed form ``1 - <H>/4 - Σ|α|/2m`` for the
    measurement sub-test; ``energy="rule"`` uses the value the sign rule
    actually produces.  The energy test averages it with consistency (value 1).
    """
    n = H.n if at_n is None else at_n
    lam, gs = ground(H)
    meas = energy_value(H, gs) if energy == "lemma" else energy_rule_value(H, gs)
    w_energy = 0.5 + 0.5 * meas
    p = params.p
    fin, pap = omega_ac_finite(n), OMEGA_AC_PAPER
    return {
        "finite_n": (1 - p) * omega_encode(fin) + p * w_energy,
        "paper": (1 - p) * omega_encode(pap) + p * w_energy,
        "omega_energy": w_energy,
        "lambda_min": lam,
    }
