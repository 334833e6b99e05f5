"""Dense state-vector and density-matrix simulation for small registers.

Conventions used across the package:

* ``R_j(theta) = exp(-i theta sigma_j / 2)``, so
  ``RY(theta) = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]``
  and ``RZ(theta) = diag(exp(-i theta/2), exp(i theta/2))``.
* Big-endian register order: qubit 0 is the most significant bit of a basis
  index, i.e. qubit ``q`` is bit ``n - 1 - q``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

MAX_QUBITS = 3
GATE_KINDS = ("RY", "RZ", "CRY")
KIND_CODES = {"RY": 0, "RZ": 1, "CRY": 2}


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    angle: float = 0.0
    control: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "CRY":
            if self.control is None:
                raise ValueError("CRY needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")

    @property
    def qubits(self):
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


def _check_qubits(gate, n_qubits):
    for q in gate.qubits:
        if not 0 <= q < n_qubits:
            raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.ndim != 1 or amps.size != 2**n or not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"expected 2**n amplitudes with 1 <= n <= {MAX_QUBITS}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self):
        return int(np.log2(self.amplitudes.size))

    @classmethod
    def zero(cls, n_qubits):
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=np.complex128)
        dim = rho.shape[0] if rho.ndim == 2 else 0
        if rho.ndim != 2 or rho.shape != (dim, dim) or dim not in (2, 4, 8):
            raise ValueError("density matrix must be 2**n x 2**n with 1 <= n <= 3")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def n_qubits(self):
        return int(np.log2(self.entries.shape[0]))

    @classmethod
    def from_state(cls, state):
        amps = state.amplitudes
        return cls(np.outer(amps, amps.conj()))

    def expectation_z(self, qubit):
        if not 0 <= qubit < self.n_qubits:
            raise IndexError(f"qubit {qubit} out of range")
        probs = np.real(np.diag(self.entries))
        return float(probs @ z_signs(self.n_qubits)[:, qubit])


def z_signs(n_qubits):
    """(2**n, n) table of +1/-1: the sigma_z eigenvalue of each qubit per basis state."""
    idx = np.arange(2**n_qubits)
    bits = (idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1
    return 1.0 - 2.0 * bits


def single_qubit_matrix(kind, angle):
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]])
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def embed(op, qubits, n_qubits):
    """Lift an operator on ``qubits`` (in that order) to the full register."""
    rest = [q for q in range(n_qubits) if q not in qubits]
    full = np.kron(op, np.eye(2 ** len(rest)))
    # full acts on (qubits..., rest...); permute axes back to register order
    order = list(qubits) + rest
    perm = np.argsort(order)
    t = full.reshape((2,) * (2 * n_qubits))
    t = t.transpose(list(perm) + [n_qubits + p for p in perm])
    return t.reshape(2**n_qubits, 2**n_qubits)


def gate_unitary(gate, n_qubits):
    """Full 2**n x 2**n unitary of ``gate``."""
    _check_qubits(gate, n_qubits)
    m = single_qubit_matrix("RY" if gate.kind == "CRY" else gate.kind, gate.angle)
    if gate.control is None:
        return embed(m, (gate.target,), n_qubits)
    controlled = np.eye(4, dtype=np.complex128)
    controlled[2:, 2:] = m
    return embed(controlled, (gate.control, gate.target), n_qubits)


def apply_gate(state, gate):
    """Return ``gate`` applied to ``state``; the input is left untouched."""
    n = state.n_qubits
    _check_qubits(gate, n)
    assert abs(state.norm() - 1.0) < 1e-8, "state is not normalized"
    m = single_qubit_matrix("RY" if gate.kind == "CRY" else gate.kind, gate.angle)
    psi = np.array(state.amplitudes).reshape((2,) * n)
    if gate.control is None:
        psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [gate.target])), 0, gate.target)
    else:
        sub = [slice(None)] * n
        sub[gate.control] = 1
        sub = tuple(sub)
        axis = gate.target - (1 if gate.target > gate.control else 0)
        block = np.moveaxis(np.tensordot(m, psi[sub], axes=([1], [axis])), 0, axis)
        psi[sub] = block
    return StateVector(psi.reshape(-1))


def run_circuit(gates, n_qubits):
    state = StateVector.zero(n_qubits)
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expectation_z(state, qubit):
    """<psi| sigma_z on ``qubit`` |psi>."""
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range")
    return float(measure_distribution(state) @ z_signs(state.n_qubits)[:, qubit])


def measure_distribution(state):
    """Born-rule outcome probabilities in basis-index order."""
    return np.abs(state.amplitudes) ** 2


def estimate_expectations_shots(distribution, n_shots, rng):
    """Per-qubit sigma_z estimates from ``n_shots`` multinomial draws.

    ``distribution`` may also be a (batch, 2**n) array, in which case one
    estimate row per distribution is returned.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    p = np.asarray(distribution, dtype=np.float64)
    p = np.clip(p, 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    n_qubits = int(round(np.log2(p.shape[-1])))
    counts = rng.multinomial(n_shots, p)
    return counts @ z_signs(n_qubits) / n_shots


def evolve_density(dm, gate, noise=None):
    """Conjugate ``dm`` by the gate unitary, then apply the gate's noise channels."""
    n = dm.n_qubits
    u = gate_unitary(gate, n)
    rho = u @ dm.entries @ u.conj().T
    if noise is not None:
        rho = noise.after_gate(rho, gate)
    return DensityMatrix(rho)
