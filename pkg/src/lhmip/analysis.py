"""Numerical versions of the soundness-analysis objects: marginal observables,
exactly linear observables extracted by Fourier analysis plus a Naimark
dilation, (anti)commutation residuals and the swap isometry.

Operators act on a tensor-product space described by ``dims``; a family
records which factors (``axes``) its members act on.  States are flat
vectors over the whole space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .bitvec_pauli import BitString, PauliWord, to_matrix
from .protocol import Query
from .statesim import psd_sqrt

ANALYSIS_LIMIT = 2
PARSEVAL_TOL = 1e-9
STATE_LIMIT = 1 << 21


class BudgetExceeded(ValueError):
    pass


def apply_local(op: np.ndarray, vec: np.ndarray, dims, axes) -> np.ndarray:
    """Apply ``op`` (acting on the listed tensor factors, in that order) to ``vec``."""
    if dims is None:
        return op @ vec
    t = vec.reshape(dims)
    t = np.moveaxis(t, axes, range(len(axes)))
    head = t.shape[: len(axes)]
    t = (op @ t.reshape(math.prod(head), -1)).reshape(t.shape)
    return np.moveaxis(t, range(len(axes)), axes).reshape(-1)


@dataclass
class ObservableFamily:
    """``ops[a.value]`` for every ``a`` in ``{0,1}^n``."""

    n: int
    label: str
    ops: tuple
    dims: tuple | None = None
    axes: tuple | None = None
    info: dict = field(default_factory=dict)

    def __getitem__(self, a) -> np.ndarray:
        return self.ops[a.value if isinstance(a, BitString) else a]

    def apply(self, a, vec: np.ndarray) -> np.ndarray:
        return apply_local(self[a], vec, self.dims, self.axes)

    def is_observable(self, tol: float = 1e-9) -> bool:
        for m in self.ops:
            if np.abs(m - m.conj().T).max() > tol or np.abs(m @ m - np.eye(m.shape[0])).max() > tol:
                return False
        return True

    def place(self, dims, axes) -> "ObservableFamily":
        return ObservableFamily(self.n, self.label, self.ops, tuple(dims), tuple(axes), dict(self.info))


def pauli_family(n: int, basis: str) -> ObservableFamily:
    """The true Paulis ``X(a)`` or ``Z(a)`` on n qubits."""
    make = PauliWord.X if basis == "X" else PauliWord.Z
    ops = tuple(to_matrix(make(BitString(n, v))) for v in range(1 << n))
    return ObservableFamily(n, f"{basis}pauli", ops)


# --- marginals and dilation ---------------------------------------------------

def _slot_matrices(strategy, i: int, basis: str):
    """``out[a][b]`` = matrix of the a-slot answer to query ``(basis, a, b)`` on prover i's register."""
    n = strategy.n
    strings = [BitString(n, v) for v in range(1 << n)]
    out = []
    for a in strings:
        row = []
        for b in strings:
            q = Query.pair(basis, a, b)
            obs = strategy.observables(i, q)[q.slot_of(a)]
            row.append(obs.to_matrix())
        out.append(row)
    return out


def marginal_observables(strategy, i: int, basis: str) -> ObservableFamily:
    """``X̂(a) = E_b (N^{+1}_{a|ab} - N^{-1}_{a|ab})`` on prover ``i``'s register."""
    if strategy.n > ANALYSIS_LIMIT + 1:
        raise BudgetExceeded(f"n={strategy.n} beyond analysis limit")
    mats = _slot_matrices(strategy, i, basis)
    ops = tuple(sum(row) / len(row) for row in mats)
    fam = ObservableFamily(strategy.n, f"{basis}hat", ops)
    fam.info["observable"] = fam.is_observable()
    return fam


def dilated_family(strategy, i: int, basis: str) -> ObservableFamily:
    """``Y_a = Σ_b O_{a|ab} ⊗ |b><b|`` on register ⊗ string register.

    On ``ψ ⊗ |+>^n`` its expectations equal those of the marginal ``X̂(a)``,
    and every ``Y_a`` is an observable.
    """
    mats = _slot_matrices(strategy, i, basis)
    nb = len(mats)
    ops = []
    for row in mats:
        d = row[0].shape[0]
        y = np.zeros((d * nb, d * nb), dtype=complex)
        for b, m in enumerate(row):
            proj = np.zeros((nb, nb))
            proj[b, b] = 1.0
            y += np.kron(m, proj)
        ops.append(y)
    return ObservableFamily(strategy.n, f"{basis}dil", tuple(ops))


def fourier(family: ObservableFamily) -> list[np.ndarray]:
    """``Ŷ_u = E_a (-1)^{a·u} Y_a`` for every ``u``."""
    n = family.n
    size = 1 << n
    out = []
    for u in range(size):
        acc = sum((-1.0 if (a & u).bit_count() & 1 else 1.0) * family.ops[a] for a in range(size))
        out.append(acc / size)
    return out


def extract_linear(family: ObservableFamily) -> ObservableFamily:
    """Exactly linear ``C_a`` from ``B^u = Ŷ_u²`` via a Naimark dilation.

    The isometry ``Vφ = Σ_u √B^u φ ⊗ |u>`` is completed to a unitary ``U``
    on ``space ⊗ C^{2^n}`` (the extra columns are an SVD basis of the
    complement of ``range V``); then ``C_a = U† (I ⊗ Z(a)) U``.  The dilated
    state is the input state tensored with ``|0...0>`` on the ancilla.
    Members act on the family's own factors followed by the new ancilla.
    """
    n = family.n
    size = 1 << n
    hats = fourier(family)
    b_ops = [h @ h for h in hats]
    d = b_ops[0].shape[0]
    parseval = float(np.abs(sum(b_ops) - np.eye(d)).max())
    if parseval > 1e-6:
        raise ValueError(f"Parseval check failed: residual {parseval:.3e}")
    v = np.zeros((d * size, d), dtype=complex)
    for u, b in enumerate(b_ops):
        v[u::size, :] = psd_sqrt(b)
    # columns (k, u) with u = 0 are V e_k; the rest complete the basis
    rest = null_space(v.conj().T)
    unitary = np.zeros((d * size, d * size), dtype=complex)
    cols_zero = np.arange(d) * size
    unitary[:, cols_zero] = v
    others = np.setdiff1d(np.arange(d * size), cols_zero)
    unitary[:, others] = rest
    zdiag = np.array([[1.0 - 2.0 * ((a & u).bit_count() & 1) for u in range(size)] for a in range(size)])
    ops = tuple(unitary.conj().T @ (np.tile(zdiag[a], d)[:, None] * unitary) for a in range(size))
    out = ObservableFamily(n, family.label.replace("dil", "lin").replace("hat", "lin"), ops)
    out.info.update(parseval=parseval, fourier=hats, povm=b_ops, ancilla_dim=size)
    return out


def linearity_residual(family: ObservableFamily) -> float:
    size = 1 << family.n
    worst = 0.0
    for a in range(size):
        for b in range(size):
            diff = family.ops[a] @ family.ops[b] - family.ops[a ^ b]
            worst = max(worst, float(np.abs(diff).max()))
    return worst


# --- residual report -----------------------------------------------------------

@dataclass
class ResidualReport:
    entries: dict
    averaging: dict

    def to_json(self) -> dict:
        return {"entries": self.entries, "averaging": self.averaging}


def reduced_purification(state, targets) -> np.ndarray:
    """``sqrt(ρ)`` of the register ``targets``, flattened as register ⊗ environment."""
    nq = state.num_qubits
    t = state.amplitudes.reshape((2,) * nq)
    rest = [q for q in range(nq) if q not in targets]
    m = np.transpose(t, list(targets) + rest).reshape(1 << len(targets), -1)
    rho = m @ m.conj().T
    return psd_sqrt(rho).reshape(-1)


class _Setup:
    """Dilated space ``reg ⊗ Bx ⊗ Kx ⊗ Bz ⊗ Kz ⊗ env`` for one prover."""

    def __init__(self, strategy, i: int):
        n = strategy.n
        if n > ANALYSIS_LIMIT:
            raise BudgetExceeded(f"n={n} exceeds analysis limit {ANALYSIS_LIMIT}")
        d = 1 << n
        self.n, self.d = n, d
        self.dims = (d, d, d, d, d, d)
        base = reduced_purification(strategy.state, strategy.registers[i - 1]).reshape(d, d)
        plus = np.full(d, 1.0 / math.sqrt(d))
        zero = np.zeros(d)
        zero[0] = 1.0
        psi = np.einsum("re,x,k,y,l->rxkyle", base, plus, zero, plus, zero)
        self.psi = psi.reshape(-1)
        self.xhat = marginal_observables(strategy, i, "X").place(self.dims, (0,))
        self.zhat = marginal_observables(strategy, i, "Z").place(self.dims, (0,))
        self.xdil = dilated_family(strategy, i, "X").place(self.dims, (0, 1))
        self.zdil = dilated_family(strategy, i, "Z").place(self.dims, (0, 3))
        self.xlin = extract_linear(dilated_family(strategy, i, "X")).place(self.dims, (0, 1, 2))
        self.zlin = extract_linear(dilated_family(strategy, i, "Z")).place(self.dims, (0, 3, 4))


def _commutation_terms(xlin, zlin, psi, n):
    size = 1 << n
    odd, even = [], []
    for a in range(size):
        for b in range(size):
            s = -1.0 if (a & b).bit_count() & 1 else 1.0
            lhs = xlin.apply(a, zlin.apply(b, psi))
            rhs = zlin.apply(b, xlin.apply(a, psi))
            diff = lhs - s * rhs
            val = float(np.vdot(diff, diff).real)
            (odd if s < 0 else even).append(val)
    return odd, even


def _closeness(lin, hat, psi, n):
    vals = []
    for a in range(1 << n):
        diff = lin.apply(a, psi) - hat.apply(a, psi)
        vals.append(float(np.vdot(diff, diff).real))
    return math.fsum(vals) / len(vals)


def linear_consistency(dil: ObservableFamily, lin: ObservableFamily, psi, n) -> float:
    """``E_a CON(Y_a, C_a) = E_a (1 + <Y_a C_a>)/2`` for binary measurements."""
    vals = [0.5 * (1.0 + float(np.vdot(psi, dil.apply(a, lin.apply(a, psi))).real))
            for a in range(1 << n)]
    return math.fsum(vals) / len(vals)


def quantum_linearity_report(strategy, i: int, setup: _Setup | None = None) -> ResidualReport:
    s = setup if setup is not None else _Setup(strategy, i)
    odd, even = _commutation_terms(s.xlin, s.zlin, s.psi, s.n)
    both = odd + even
    entries = {
        "anticommutation_all": math.fsum(both) / len(both),
        "anticommutation_odd": math.fsum(odd) / len(odd) if odd else 0.0,
        "commutation_even": math.fsum(even) / len(even),
        "closeness_x": _closeness(s.xlin, s.xhat, s.psi, s.n),
        "closeness_z": _closeness(s.zlin, s.zhat, s.psi, s.n),
        "consistency_x": linear_consistency(s.xdil, s.xlin, s.psi, s.n),
        "consistency_z": linear_consistency(s.zdil, s.zlin, s.psi, s.n),
        "linearity_x": linearity_residual(s.xlin),
        "linearity_z": linearity_residual(s.zlin),
        "parseval_x": s.xlin.info["parseval"],
        "parseval_z": s.zlin.info["parseval"],
    }
    averaging = {
        "anticommutation_all": "uniform over all (a, b)",
        "anticommutation_odd": "uniform over (a, b) with a·b = 1",
        "commutation_even": "uniform over (a, b) with a·b = 0",
        "closeness_x": "uniform over a",
        "closeness_z": "uniform over a",
        "consistency_x": "uniform over a",
        "consistency_z": "uniform over a",
        "linearity_x": "max over (a, b)",
        "linearity_z": "max over (a, b)",
        "parseval_x": "max entry",
        "parseval_z": "max entry",
    }
    return ResidualReport(entries, averaging)


# --- swap isometry -------------------------------------------------------------

@dataclass
class SwapResult:
    phi0: np.ndarray
    norm: float
    n: int


def swap_isometry(xlin: ObservableFamily, zlin: ObservableFamily, psi) -> SwapResult:
    """``φ₀ = 2^{-3n/2} Σ_{z,y,w} (-1)^{y·(z+w)} X(w) Z(y) X(z) ψ ⊗ |w>|z>``, normalized.

    The ancilla is appended after the families' space as two n-qubit
    registers, ``w`` first.
    """
    n = xlin.n
    size = 1 << n
    vec = psi.amplitudes if hasattr(psi, "amplitudes") else np.asarray(psi, dtype=complex)
    if vec.size * size * size > STATE_LIMIT:
        raise BudgetExceeded("dilated state exceeds the simulation limit")
    out = np.zeros((vec.size, size, size), dtype=complex)
    for z in range(size):
        xz = xlin.apply(z, vec)
        for y in range(size):
            zy = zlin.apply(y, xz)
            for w in range(size):
                sign = -1.0 if (y & (z ^ w)).bit_count() & 1 else 1.0
                out[:, w, z] += sign * xlin.apply(w, zy)
    out = out.reshape(-1) / size ** 1.5
    norm = float(np.linalg.norm(out))
    return SwapResult(out / norm, norm, n)


def isometry_deviation(swap: SwapResult, psi, xlin: ObservableFamily, zlin: ObservableFamily) -> ResidualReport:
    """``|<φ₀| X(a)Z(b) |φ₀> - <ψ| Xlin(a) Zlin(b) |ψ>|`` for every (a, b), Paulis on the w register."""
    n = swap.n
    size = 1 << n
    vec = psi.amplitudes if hasattr(psi, "amplitudes") else np.asarray(psi, dtype=complex)
    dim = vec.size
    devs = {}
    for a in range(size):
        for b in range(size):
            p = to_matrix(PauliWord(n, a, b))
            moved = apply_local(p, swap.phi0, (dim, size, size), (1,))
            lhs = np.vdot(swap.phi0, moved)
            rhs = np.vdot(vec, xlin.apply(a, zlin.apply(b, vec)))
            devs[f"{BitString(n, a)},{BitString(n, b)}"] = float(abs(lhs - rhs))
    vals = list(devs.values())
    entries = {"max": max(vals), "mean": math.fsum(vals) / len(vals), "norm": swap.norm, "per_pair": devs}
    return ResidualReport(entries, {"per_pair": "every (a, b)", "mean": "uniform over (a, b)"})


def diagnose(strategy, i: int = 1) -> dict:
    """Linearity residuals plus the swap-isometry deviation for prover ``i``."""
    s = _Setup(strategy, i)
    lin = quantum_linearity_report(strategy, i, s)
    swap = swap_isometry(s.xlin, s.zlin, s.psi)
    dev = isometry_deviation(swap, s.psi, s.xlin, s.zlin)
    return {"prover": i, "strategy": strategy.label, "n": strategy.n,
            "linearity": lin.to_json(), "isometry": dev.to_json()}

