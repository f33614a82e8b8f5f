"""Statevector simulation of QAOA and hardware-efficient circuits.

States are complex numpy vectors of length ``2**n``. Qubit ``q`` is bit ``q``
of the basis index (qubit 0 is the least significant bit), the same
convention the models use for variables, so basis index ``z`` of a state is
the assignment ``index_to_bits(z, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .exceptions import DimensionError, SizeError, ValidationError
from .model import _Model

MAX_QUBITS = 26


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    """Energies of every computational basis state."""

    n: int
    energies: np.ndarray

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        if energies.shape != (1 << self.n,):
            raise DimensionError(f"need {1 << self.n} energies for {self.n} qubits")
        if not np.all(np.isfinite(energies)):
            raise ValidationError("energies must be finite")
        object.__setattr__(self, "energies", energies)

    @cached_property
    def levels(self) -> tuple[np.ndarray, np.ndarray | None]:
        """Distinct energies and the level index of each basis state.

        The index is ``None`` when there are too many distinct energies for
        the lookup to pay off.
        """
        levels, inverse = np.unique(self.energies, return_inverse=True)
        if levels.size > self.energies.size // 4:
            return self.energies, None
        return levels, inverse.reshape(-1)

    @classmethod
    def from_model(cls, model: _Model, max_qubits: int = MAX_QUBITS) -> DiagonalHamiltonian:
        if model.num_vars > max_qubits:
            raise SizeError(f"{model.num_vars} qubits exceeds the simulator cap of {max_qubits}")
        return cls(model.num_vars, model.energy_table(max_vars=max_qubits))


@dataclass(frozen=True)
class QaoaParams:
    gamma: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        if len(gamma) != len(beta) or not gamma:
            raise DimensionError("gamma and beta need the same length p >= 1")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return len(self.gamma)

    @classmethod
    def zeros(cls, p: int) -> QaoaParams:
        return cls((0.0,) * p, (0.0,) * p)

    def extended(self, extra_layers: int = 1) -> QaoaParams:
        """Same circuit with identity (zero-angle) layers appended."""
        return QaoaParams(self.gamma + (0.0,) * extra_layers, self.beta + (0.0,) * extra_layers)


@dataclass(frozen=True, eq=False)
class HeaParams:
    """One y-rotation angle per qubit per layer, shape ``(L, n)``."""

    angles: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.ndim != 2 or angles.shape[0] < 1 or angles.shape[1] < 1:
            raise DimensionError("HEA angles must have shape (L, n) with L, n >= 1")
        object.__setattr__(self, "angles", angles)

    @property
    def L(self) -> int:
        return self.angles.shape[0]

    @property
    def n(self) -> int:
        return self.angles.shape[1]


@dataclass
class SampleSet:
    """Multiset of measured basis states.

    ``states`` are sorted unique basis indices and ``counts`` their
    multiplicities. Bitstrings list variables in index order, character ``i``
    being bit ``i``.
    """

    n: int
    states: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if states.shape != counts.shape or states.ndim != 1:
            raise DimensionError("states and counts must be matching 1-d arrays")
        if np.any(counts <= 0):
            raise ValidationError("counts must be positive")
        order = np.argsort(states, kind="stable")
        states, counts = states[order], counts[order]
        if states.size and np.any(np.diff(states) == 0):
            uniq, inverse = np.unique(states, return_inverse=True)
            counts = np.bincount(inverse, weights=counts).astype(np.int64)
            states = uniq
        self.states, self.counts = states, counts

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    def __len__(self):
        return self.shots

    def bits(self) -> np.ndarray:
        """Unique states as a ``(len(states), n)`` binary matrix."""
        return ((self.states[:, None] >> np.arange(self.n, dtype=np.int64)) & 1).astype(np.int8)

    def expanded(self) -> np.ndarray:
        """Every draw as a basis index, in state order."""
        return np.repeat(self.states, self.counts)

    def to_dict(self) -> dict[str, int]:
        return {_bitstring(z, self.n): int(c) for z, c in zip(self.states, self.counts)}

    @classmethod
    def from_dict(cls, counts: Mapping[str, int]) -> SampleSet:
        widths = {len(k) for k in counts}
        if len(widths) > 1:
            raise DimensionError("bitstrings of mixed width")
        n = widths.pop() if widths else 0
        states = [int(k[::-1], 2) if k else 0 for k in counts]
        return cls(n, np.array(states, dtype=np.int64), np.array(list(counts.values()), dtype=np.int64))

    @classmethod
    def from_states(cls, n: int, draws) -> SampleSet:
        uniq, counts = np.unique(np.asarray(draws, dtype=np.int64), return_counts=True)
        return cls(n, uniq, counts)


def _bitstring(z: int, n: int) -> str:
    return "".join(str((int(z) >> i) & 1) for i in range(n))


# ---------------------------------------------------------------------------
# gates


def _check_n(n: int):
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count {n} outside 1..{MAX_QUBITS}")


def _num_qubits(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or 1 << n != state.shape[0]:
        raise DimensionError("state length must be a power of two")
    return n


def init_plus(n: int) -> np.ndarray:
    """Uniform superposition, i.e. Hadamards on ``|0...0>``."""
    _check_n(n)
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)


def init_zero(n: int) -> np.ndarray:
    _check_n(n)
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    return state


def apply_phase_separator(state: np.ndarray, H: DiagonalHamiltonian, gamma: float) -> np.ndarray:
    """``exp(-i gamma H)`` for diagonal ``H``."""
    if state.shape != H.energies.shape:
        raise DimensionError(f"state of length {state.shape[0]} vs {H.energies.shape[0]} energies")
    levels, inverse = H.levels
    if inverse is None:
        return state * np.exp(-1j * gamma * H.energies)
    return state * np.exp(-1j * gamma * levels)[inverse]


def _apply_1q(state: np.ndarray, q: int, gate: np.ndarray) -> np.ndarray:
    n = _num_qubits(state)
    view = state.reshape(1 << (n - 1 - q), 2, 1 << q)
    out = np.einsum("ab,ibj->iaj", gate, view)
    return out.reshape(-1)


_MIXER_BLOCK = 6


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """``exp(-i beta X)`` on every qubit.

    Qubits are processed in blocks of up to six, each block as one dense
    product gate applied with a batched matrix multiply.
    """
    n = _num_qubits(state)
    c, s = np.cos(beta), -1j * np.sin(beta)
    gate = np.array([[c, s], [s, c]])
    out = state.astype(complex, copy=True)
    lo = 0
    while lo < n:
        k = min(_MIXER_BLOCK, n - lo)
        block = gate
        for _ in range(k - 1):
            block = np.kron(block, gate)
        view = out.reshape(1 << (n - lo - k), 1 << k, 1 << lo)
        out = np.matmul(block, view).reshape(-1)
        lo += k
    return out


def run_qaoa(H: DiagonalHamiltonian, params: QaoaParams) -> np.ndarray:
    """Uniform start, then for each layer the phase separator and the mixer."""
    state = init_plus(H.n)
    for gamma, beta in zip(params.gamma, params.beta):
        state = apply_phase_separator(state, H, gamma)
        state = apply_mixer(state, beta)
    return state


def exact_expectation(state: np.ndarray, H: DiagonalHamiltonian) -> float:
    if state.shape != H.energies.shape:
        raise DimensionError("state and Hamiltonian dimensions differ")
    return float(np.dot(np.abs(state) ** 2, H.energies))


def probabilities(state: np.ndarray) -> np.ndarray:
    probs = np.abs(state) ** 2
    return probs / probs.sum()


def sample(state: np.ndarray, shots: int, seed) -> SampleSet:
    """``shots`` independent measurements; reproducible for a given seed.

    ``seed`` may be anything :func:`numpy.random.default_rng` accepts,
    including a ``Generator``.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    n = _num_qubits(state)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probabilities(state))
    states = np.flatnonzero(counts)
    return SampleSet(n, states.astype(np.int64), counts[states])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def hea_circuit(n: int, params: HeaParams, entangler: str = "chain") -> list[tuple]:
    """Gate list ``("ry", q, theta)`` / ``("cz", q, q + 1)`` per layer."""
    if entangler != "chain":
        raise ValidationError(f"unsupported entangler {entangler!r}")
    if params.n != n:
        raise DimensionError(f"angles are for {params.n} qubits, circuit has {n}")
    gates: list[tuple] = []
    for layer in params.angles:
        gates.extend(("ry", q, float(theta)) for q, theta in enumerate(layer))
        gates.extend(("cz", q, q + 1) for q in range(n - 1))
    return gates


def _cz_signs(n: int, q: int) -> np.ndarray:
    z = np.arange(1 << n)
    both = ((z >> q) & 1) & ((z >> (q + 1)) & 1)
    return 1 - 2 * both


def run_hea(n: int, params: HeaParams, entangler: str = "chain") -> np.ndarray:
    """Hardware-efficient ansatz from ``|0...0>``: y-rotations, then a CZ chain."""
    _check_n(n)
    state = init_zero(n)
    signs = {}
    for gate in hea_circuit(n, params, entangler):
        if gate[0] == "ry":
            state = _apply_1q(state, gate[1], ry(gate[2]))
        else:
            q = gate[1]
            if q not in signs:
                signs[q] = _cz_signs(n, q)
            state = state * signs[q]
    return state


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


# ---------------------------------------------------------------------------
# dense reference


DENSE_MAX_QUBITS = 10


def _kron_all(ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def _on_qubit(op: np.ndarray, q: int, n: int) -> np.ndarray:
    # kron order runs from the most significant qubit down to qubit 0
    return _kron_all([op if k == q else np.eye(2) for k in reversed(range(n))])


def dense_oracle(model: _Model | None, params, ansatz_kind: str = "qaoa", n: int | None = None) -> np.ndarray:
    """Reference state from explicit ``2**n x 2**n`` unitaries.

    QAOA layers use :func:`scipy.linalg.expm` of the dense problem and mixer
    matrices; the hardware-efficient ansatz multiplies explicit gate
    matrices. Intended for verification at ``n <= 10``.
    """
    from scipy.linalg import expm

    if ansatz_kind == "qaoa":
        n = model.num_vars
    elif ansatz_kind == "hea":
        n = params.n if n is None else n
    else:
        raise ValidationError(f"unknown ansatz {ansatz_kind!r}")
    if n > DENSE_MAX_QUBITS:
        raise SizeError(f"dense oracle is limited to {DENSE_MAX_QUBITS} qubits")
    dim = 1 << n
    X = np.array([[0, 1], [1, 0]], dtype=complex)

    if ansatz_kind == "qaoa":
        z = np.arange(dim)
        bits = ((z[:, None] >> np.arange(n)) & 1).astype(float)
        values = 1 - 2 * bits if model.spin else bits
        energies = np.full(dim, model.offset)
        for i, c in model.linear.items():
            energies = energies + c * values[:, i]
        for (i, j), c in model.quadratic.items():
            energies = energies + c * values[:, i] * values[:, j]
        H_problem = np.diag(energies).astype(complex)
        H_mixer = sum(_on_qubit(X, q, n) for q in range(n))
        hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        U = _kron_all([hadamard] * n)
        for gamma, beta in zip(params.gamma, params.beta):
            U = expm(-1j * beta * H_mixer) @ expm(-1j * gamma * H_problem) @ U
    else:
        U = np.eye(dim, dtype=complex)
        for gate in hea_circuit(n, params):
            if gate[0] == "ry":
                G = _on_qubit(ry(gate[2]), gate[1], n)
            else:
                q = gate[1]
                P1 = np.diag([0, 1]).astype(complex)
                both = _kron_all([P1 if k in (q, q + 1) else np.eye(2) for k in reversed(range(n))])
                G = np.eye(dim) - 2 * both
            U = G @ U
    state0 = np.zeros(dim, dtype=complex)
    state0[0] = 1.0
    return U @ state0
