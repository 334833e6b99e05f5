import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state_amplitudes(rng, n_qubits):
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return v / np.linalg.norm(v)


def dense_z(qubit, n_qubits):
    """sigma_z on ``qubit`` as a dense kron product, qubit 0 leftmost."""
    ops = [np.eye(2)] * n_qubits
    ops[qubit] = np.diag([1.0, -1.0])
    out = np.array([[1.0]])
    for op in ops:
        out = np.kron(out, op)
    return out


def random_gates(rng, n_qubits, count):
    from styleqgan.simulator import GateOp

    gates = []
    for _ in range(count):
        kind = rng.choice(["RY", "RZ", "CRY"] if n_qubits > 1 else ["RY", "RZ"])
        angle = rng.uniform(-2 * np.pi, 2 * np.pi)
        target = int(rng.integers(n_qubits))
        if kind == "CRY":
            control = int(rng.choice([q for q in range(n_qubits) if q != target]))
            gates.append(GateOp("CRY", target, angle, control))
        else:
            gates.append(GateOp(str(kind), target, angle))
    return gates
