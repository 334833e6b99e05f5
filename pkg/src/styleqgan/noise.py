"""Device noise model: readout confusion, thermal relaxation and gate depolarizing.

Placement per gate: ideal unitary, then depolarizing on the gate's qubits,
then relaxation of every qubit over the gate duration (acted qubits only
when ``idle_relaxation`` is off). Readout confusion is applied to the final
outcome distribution before shots are drawn.

Calibration files are JSON::

    {"qubits": [{"p10": .., "p01": .., "t1_s": .., "t2_s": ..}, ...],
     "gates":  [{"kind": "RY", "qubits": [0], "error_prob": .., "duration_s": ..}, ...],
     "idle_relaxation": true}

``p10`` is P(read 1 | state 0), ``p01`` is P(read 0 | state 1). A null
``t1_s`` means no energy decay; a null ``t2_s`` means T1-limited coherence
(T2 = 2 T1, infinite when T1 is). Gate entries without ``qubits`` apply to
every gate of that kind; qubit-specific entries take precedence.
"""
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .simulator import DensityMatrix, embed, estimate_expectations_shots

PAULIS = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be a probability, got {p}")


@dataclass(frozen=True)
class QubitNoise:
    p10: float = 0.0
    p01: float = 0.0
    t1: float = math.inf
    t2: float = math.inf

    def __post_init__(self):
        _check_prob("p10", self.p10)
        _check_prob("p01", self.p01)
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("t1 and t2 must be positive")
        if self.t2 > 2 * self.t1:
            raise ValueError(f"t2 ({self.t2}) must not exceed 2*t1 ({2 * self.t1})")


@dataclass(frozen=True)
class GateNoise:
    kind: str
    error_prob: float = 0.0
    duration: float = 0.0
    qubits: Optional[tuple] = None

    def __post_init__(self):
        _check_prob("error_prob", self.error_prob)
        if self.duration < 0:
            raise ValueError("gate duration must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    qubits: tuple
    gates: tuple = ()
    idle_relaxation: bool = True
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_qubits(self):
        return len(self.qubits)

    @classmethod
    def zero(cls, n_qubits):
        return cls(tuple(QubitNoise() for _ in range(n_qubits)))

    def gate_noise(self, kind, qubits):
        generic = None
        for entry in self.gates:
            if entry.kind != kind:
                continue
            if entry.qubits is not None and tuple(entry.qubits) == tuple(qubits):
                return entry
            if entry.qubits is None and generic is None:
                generic = entry
        return generic or GateNoise(kind)

    def superoperator(self, kind, qubits):
        """Row-major superoperator of the noise that follows a gate."""
        key = (kind, tuple(qubits))
        if key not in self._cache:
            n = self.n_qubits
            entry = self.gate_noise(kind, qubits)
            sop = _superop(depolarizing_kraus(qubits, entry.error_prob, n))
            relaxing = range(n) if self.idle_relaxation else qubits
            for q in relaxing:
                qn = self.qubits[q]
                sop = _superop(relaxation_kraus(q, qn.t1, qn.t2, entry.duration, n)) @ sop
            self._cache[key] = sop
        return self._cache[key]

    def after_gate(self, rho, gate):
        """Apply the post-gate channels to ``rho`` (shape (..., d, d))."""
        if max(gate.qubits) >= self.n_qubits:
            raise ValueError("noise model has fewer qubits than the gate needs")
        return _apply_superop(self.superoperator(gate.kind, gate.qubits), rho)

    def confusion_matrices(self):
        return [np.array([[1 - q.p10, q.p01], [q.p10, 1 - q.p01]]) for q in self.qubits]

    def to_dict(self):
        def t(x):
            return None if math.isinf(x) else x

        return {
            "qubits": [{"p10": q.p10, "p01": q.p01, "t1_s": t(q.t1), "t2_s": t(q.t2)} for q in self.qubits],
            "gates": [
                {
                    "kind": g.kind,
                    "qubits": None if g.qubits is None else list(g.qubits),
                    "error_prob": g.error_prob,
                    "duration_s": g.duration,
                }
                for g in self.gates
            ],
            "idle_relaxation": self.idle_relaxation,
        }

    @classmethod
    def from_dict(cls, d):
        def t(x):
            return math.inf if x is None else float(x)

        def t2(q):
            # no dephasing beyond what T1 implies
            return 2 * t(q.get("t1_s")) if q.get("t2_s") is None else float(q["t2_s"])

        try:
            qubits = tuple(
                QubitNoise(float(q.get("p10", 0.0)), float(q.get("p01", 0.0)), t(q.get("t1_s")), t2(q))
                for q in d["qubits"]
            )
            gates = tuple(
                GateNoise(
                    g["kind"],
                    float(g.get("error_prob", 0.0)),
                    float(g.get("duration_s", 0.0)),
                    None if g.get("qubits") is None else tuple(int(x) for x in g["qubits"]),
                )
                for g in d.get("gates", [])
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed calibration: {exc}") from exc
        return cls(qubits, gates, bool(d.get("idle_relaxation", True)))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _superop(kraus):
    return sum(np.kron(k, k.conj()) for k in kraus)


def _apply_superop(sop, rho):
    rho = np.asarray(rho)
    d = rho.shape[-1]
    flat = rho.reshape(rho.shape[:-2] + (d * d,))
    return (flat @ sop.T).reshape(rho.shape)


def _apply_kraus(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def relaxation_kraus(qubit, t1, t2, duration, n_qubits):
    """Amplitude damping toward |0> followed by the pure dephasing that
    completes a total coherence decay of exp(-duration/t2)."""
    if not (t1 > 0 and t2 > 0) or duration < 0:
        raise ValueError("relaxation needs t1, t2 > 0 and duration >= 0")
    if t2 > 2 * t1:
        raise ValueError("t2 must not exceed 2*t1")
    gamma = -math.expm1(-duration / t1)
    ad = [np.array([[1, 0], [0, math.sqrt(1 - gamma)]]), np.array([[0, math.sqrt(gamma)], [0, 0]])]
    # coherence after damping alone is exp(-duration / (2 t1))
    rate = 1.0 / t2 - 0.5 / t1
    f = math.exp(-duration * max(rate, 0.0))
    pd = [math.sqrt((1 + f) / 2) * PAULIS[0], math.sqrt((1 - f) / 2) * PAULIS[3]]
    ops = [p @ a for p in pd for a in ad]
    return [embed(k.astype(np.complex128), (qubit,), n_qubits) for k in ops]


def depolarizing_kraus(qubits, p, n_qubits):
    _check_prob("depolarizing probability", p)
    k = len(qubits)
    ops = []
    for idx in itertools.product(range(4), repeat=k):
        op = np.array([[1.0]], dtype=np.complex128)
        for i in idx:
            op = np.kron(op, PAULIS[i])
        weight = 1 - p + p / 4**k if not any(idx) else p / 4**k
        if weight > 0:
            ops.append(math.sqrt(weight) * embed(op, tuple(qubits), n_qubits))
    return ops


def _entries(dm):
    return dm.entries if isinstance(dm, DensityMatrix) else np.asarray(dm, dtype=np.complex128)


def relaxation_channel(dm, qubit, t1, t2, duration):
    rho = _entries(dm)
    n = int(np.log2(rho.shape[-1]))
    return DensityMatrix(_apply_kraus(relaxation_kraus(qubit, t1, t2, duration, n), rho))


def depolarizing_channel(dm, qubits, p):
    """rho -> (1-p) rho + p * Tr_qubits(rho) (x) I / 2**k."""
    rho = _entries(dm)
    n = int(np.log2(rho.shape[-1]))
    if isinstance(qubits, int):
        qubits = (qubits,)
    return DensityMatrix(_apply_kraus(depolarizing_kraus(tuple(qubits), p, n), rho))


def apply_readout_error(distribution, model):
    """Push outcome probabilities through the per-qubit confusion matrices."""
    p = np.asarray(distribution, dtype=np.float64)
    n = model.n_qubits
    if p.shape[-1] != 2**n:
        raise ValueError("distribution size does not match the noise model")
    batch = p.shape[:-1]
    t = p.reshape(batch + (2,) * n)
    for q, conf in enumerate(model.confusion_matrices()):
        axis = len(batch) + q
        t = np.moveaxis(np.tensordot(conf, t, axes=([1], [axis])), 0, axis)
    out = t.reshape(p.shape)
    return out / out.sum(axis=-1, keepdims=True)


def _embed_batch(mats, target, n):
    left = np.eye(2**target)
    right = np.eye(2 ** (n - 1 - target))
    full = np.einsum("ij,bkl,mn->bikmjln", left, mats, right)
    d = 2**n
    return full.reshape(mats.shape[0], d, d)


def _batch_unitaries(kind, target, control, theta, n):
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    m = np.zeros((theta.size, 2, 2), dtype=np.complex128)
    if kind == "RZ":
        m[:, 0, 0] = c - 1j * s
        m[:, 1, 1] = c + 1j * s
    else:
        m[:, 0, 0] = c
        m[:, 0, 1] = -s
        m[:, 1, 0] = s
        m[:, 1, 1] = c
    u = _embed_batch(m, target, n)
    if control is None:
        return u
    p0 = embed(np.diag([1.0, 0.0]).astype(np.complex128), (control,), n)
    p1 = embed(np.diag([0.0, 1.0]).astype(np.complex128), (control,), n)
    return p0[None] + p1[None] @ u


def noisy_distributions(generator, params, zs, model, chunk=2048):
    """Outcome distributions after noisy density-matrix evolution (readout included)."""
    n = generator.n_qubits
    if model.n_qubits != n:
        raise ValueError(f"noise model has {model.n_qubits} qubits, circuit has {n}")
    angles = generator.angles(params, zs)
    template = generator.layout.gate_template()
    d = 2**n
    out = np.empty((angles.shape[0], d))
    for start in range(0, angles.shape[0], chunk):
        a = angles[start : start + chunk]
        rho = np.zeros((a.shape[0], d, d), dtype=np.complex128)
        rho[:, 0, 0] = 1.0
        for g, (kind, target, control) in enumerate(template):
            u = _batch_unitaries(kind, target, control, a[:, g], n)
            rho = u @ rho @ np.conj(np.swapaxes(u, -1, -2))
            qubits = (target,) if control is None else (control, target)
            rho = _apply_superop(model.superoperator(kind, qubits), rho)
        probs = np.clip(np.real(np.diagonal(rho, axis1=-2, axis2=-1)), 0.0, None)
        out[start : start + a.shape[0]] = probs / probs.sum(axis=-1, keepdims=True)
    return apply_readout_error(out, model)


def noisy_expectations(generator, params, zs, model, n_shots, rng):
    """Shot-estimated sigma_z expectations under ``model``; shape (batch, n)."""
    return estimate_expectations_shots(noisy_distributions(generator, params, zs, model), n_shots, rng)


def noisy_generate_sample(layout, params, z, model, n_shots, rng, architecture="style"):
    from .generator import QuantumGenerator

    gen = QuantumGenerator(layout, architecture)
    return -noisy_expectations(gen, params, z, model, n_shots, rng)[0]
