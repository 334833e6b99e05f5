"""Quantum generator circuits: the style-based layout and the standard baseline.

Circuit layout, in construction order::

    [encoder: RY on qubit k % n, k = 0 .. encoder_slots-1]
    for each layer:
        for each qubit: RY, RZ, RY, RZ
        CRY for each (control, target) in the entangler
    final: RY on every qubit

Every gate ``g`` reads one latent component ``m[g]`` (round-robin over the
gates in the order above unless an explicit schedule is given).

Style architecture: gate ``g`` owns a (bias, weight) pair and its angle is
``weight * z[m[g]] + bias``. The flat parameter vector interleaves them as
``[bias_0, weight_0, bias_1, weight_1, ...]``.

Standard architecture: one parameter per gate. Encoder gates rotate by
``phi * z[m[g]]``; every other gate by the plain angle ``phi``.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _core
from .simulator import KIND_CODES, GateOp, estimate_expectations_shots

STYLE = "style"
STANDARD = "standard"
ARCHITECTURES = (STYLE, STANDARD)


def chain_entangler(n_qubits):
    """Sequential CRY pairs (0,1), (1,2), ... ; empty for one qubit."""
    return tuple((q, q + 1) for q in range(n_qubits - 1))


@dataclass(frozen=True)
class CircuitLayout:
    n_qubits: int
    n_layers: int = 1
    d_latent: int = 1
    entangler: Optional[tuple] = None
    encoder_slots: int = 0
    latent_schedule: Optional[tuple] = None

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 3:
            raise ValueError("n_qubits must be in [1, 3]")
        if self.n_layers < 1 or self.d_latent < 1 or self.encoder_slots < 0:
            raise ValueError("n_layers and d_latent must be >= 1, encoder_slots >= 0")
        ent = chain_entangler(self.n_qubits) if self.entangler is None else self.entangler
        ent = tuple((int(c), int(t)) for c, t in ent)
        for c, t in ent:
            if c == t or not (0 <= c < self.n_qubits and 0 <= t < self.n_qubits):
                raise ValueError(f"invalid entangler pair {(c, t)}")
        object.__setattr__(self, "entangler", ent)
        if self.latent_schedule is not None:
            sched = tuple(int(m) for m in self.latent_schedule)
            if len(sched) != self.n_gates:
                raise ValueError(f"latent_schedule needs {self.n_gates} entries")
            if any(not 0 <= m < self.d_latent for m in sched):
                raise ValueError("latent_schedule index out of range")
            object.__setattr__(self, "latent_schedule", sched)

    @property
    def n_gates(self):
        per_layer = 4 * self.n_qubits + len(self.entangler)
        return self.encoder_slots + per_layer * self.n_layers + self.n_qubits

    def gate_template(self):
        """(kind, target, control) per gate in construction order."""
        gates = [("RY", k % self.n_qubits, None) for k in range(self.encoder_slots)]
        for _ in range(self.n_layers):
            for q in range(self.n_qubits):
                gates += [("RY", q, None), ("RZ", q, None), ("RY", q, None), ("RZ", q, None)]
            gates += [("CRY", t, c) for c, t in self.entangler]
        gates += [("RY", q, None) for q in range(self.n_qubits)]
        return gates

    def latent_indices(self):
        if self.latent_schedule is not None:
            return np.array(self.latent_schedule, dtype=np.int_)
        return np.arange(self.n_gates) % self.d_latent

    def is_encoder(self):
        mask = np.zeros(self.n_gates, dtype=bool)
        mask[: self.encoder_slots] = True
        return mask

    def to_dict(self):
        return {
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "d_latent": self.d_latent,
            "entangler": [list(p) for p in self.entangler],
            "encoder_slots": self.encoder_slots,
            "latent_schedule": None if self.latent_schedule is None else list(self.latent_schedule),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("entangler") is not None:
            d["entangler"] = tuple(tuple(p) for p in d["entangler"])
        if d.get("latent_schedule") is not None:
            d["latent_schedule"] = tuple(d["latent_schedule"])
        return cls(**d)


def n_parameters(layout, architecture=STYLE):
    """Trainable parameter count: two per gate (style) or one per gate (standard)."""
    if architecture == STYLE:
        return 2 * layout.n_gates
    if architecture == STANDARD:
        return layout.n_gates
    raise ValueError(f"unknown architecture {architecture!r}")


def standard_layout(n_qubits, n_layers, d_latent, entangler=None):
    """Baseline layout: latents enter once, through ``d_latent`` encoder rotations."""
    return CircuitLayout(n_qubits, n_layers, d_latent, entangler, encoder_slots=d_latent)


@dataclass
class QuantumGenerator:
    """Batch front-end over one layout/architecture.

    ``zs`` arguments are (batch, d_latent) arrays; single latent vectors are
    promoted to a batch of one.
    """

    layout: CircuitLayout
    architecture: str = STYLE
    _program: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.architecture == STANDARD and self.layout.encoder_slots == 0:
            raise ValueError("standard architecture needs encoder slots")
        template = self.layout.gate_template()
        self._program = (
            np.array([KIND_CODES[k] for k, _, _ in template], dtype=np.int8),
            np.array([t for _, t, _ in template], dtype=np.int_),
            np.array([-1 if c is None else c for _, _, c in template], dtype=np.int_),
        )
        self._m = self.layout.latent_indices()
        self._encoder = self.layout.is_encoder()

    @property
    def n_params(self):
        return n_parameters(self.layout, self.architecture)

    @property
    def n_qubits(self):
        return self.layout.n_qubits

    @property
    def program(self):
        return self._program

    def init_params(self, rng, scale=0.1):
        return rng.uniform(-scale, scale, self.n_params)

    def _check(self, params, zs):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ValueError("parameters must be finite")
        zs = np.atleast_2d(np.asarray(zs, dtype=np.float64))
        if zs.shape[1] != self.layout.d_latent:
            raise ValueError(f"latent vectors must have {self.layout.d_latent} components")
        return params, zs

    def _scale_offset(self, params):
        """Per-gate (scale, offset) with angle = scale * z[m] + offset."""
        if self.architecture == STYLE:
            return params[1::2], params[0::2]
        scale = np.where(self._encoder, params, 0.0)
        offset = np.where(self._encoder, 0.0, params)
        return scale, offset

    def angles(self, params, zs):
        params, zs = self._check(params, zs)
        scale, offset = self._scale_offset(params)
        return scale[None, :] * zs[:, self._m] + offset[None, :]

    def circuit(self, params, z):
        """Resolved gate list for a single latent vector."""
        angles = self.angles(params, z)
        if angles.shape[0] != 1:
            raise ValueError("circuit() takes a single latent vector")
        return [
            GateOp(kind, target, float(theta), control)
            for (kind, target, control), theta in zip(self.layout.gate_template(), angles[0])
        ]

    def states(self, params, zs):
        return _core.final_states(*self._program, self.n_qubits, self.angles(params, zs))

    def expectations(self, params, zs):
        return _core.expectations(*self._program, self.n_qubits, self.angles(params, zs))

    def samples(self, params, zs, backend="exact", n_shots=None, rng=None, noise=None):
        """Fake samples ``x_i = -<sigma_z^i>``; shape (batch, n_qubits).

        backend: ``"exact"``, ``"shots"`` (needs n_shots, rng) or ``"noisy"``
        (needs noise, n_shots, rng).
        """
        if backend == "exact":
            return -self.expectations(params, zs)
        if backend == "shots":
            if n_shots is None or rng is None:
                raise ValueError("shots backend needs n_shots and rng")
            probs = np.abs(self.states(params, zs)) ** 2
            return -estimate_expectations_shots(probs, n_shots, rng)
        if backend == "noisy":
            if noise is None or n_shots is None or rng is None:
                raise ValueError("noisy backend needs noise, n_shots and rng")
            from .noise import noisy_expectations

            return -noisy_expectations(self, params, zs, noise, n_shots, rng)
        raise ValueError(f"unknown backend {backend!r}")

    def param_vjp(self, params, zs, cotangent):
        """Gradient of ``sum(cotangent * expectations)`` w.r.t. the parameters.

        Returns ``(expectations, grad)``; the sum runs over the whole batch.
        """
        params, zs = self._check(params, zs)
        scale, offset = self._scale_offset(params)
        latent = zs[:, self._m]
        angles = scale[None, :] * latent + offset[None, :]
        exps, dtheta = _core.angle_vjp(*self._program, self.n_qubits, angles, cotangent)
        d_scale = np.sum(dtheta * latent, axis=0)
        d_offset = np.sum(dtheta, axis=0)
        if self.architecture == STYLE:
            grad = np.empty(self.n_params)
            grad[0::2] = d_offset
            grad[1::2] = d_scale
        else:
            grad = np.where(self._encoder, d_scale, d_offset)
        return exps, grad

    def jacobian(self, params, z):
        """(n_qubits, n_params) matrix of d<sigma_z^i>/d(param) at one latent vector."""
        params, zs = self._check(params, z)
        if zs.shape[0] != 1:
            raise ValueError("jacobian() takes a single latent vector")
        rows = []
        for i in range(self.n_qubits):
            cot = np.zeros((1, self.n_qubits))
            cot[0, i] = 1.0
            rows.append(self.param_vjp(params, zs, cot)[1])
        return np.array(rows)

    def with_layout(self, **changes):
        return QuantumGenerator(replace(self.layout, **changes), self.architecture)


def build_style_circuit(layout, params, z):
    return QuantumGenerator(layout, STYLE).circuit(params, z)


def build_standard_circuit(layout, params, z):
    """Baseline circuit; ``layout`` must carry encoder slots (see ``standard_layout``)."""
    return QuantumGenerator(layout, STANDARD).circuit(params, z)


def generate_sample(layout, params, z, backend="exact", architecture=STYLE, **kwargs):
    """One sample vector ``(-<sigma_z^1>, ..., -<sigma_z^n>)``."""
    gen = QuantumGenerator(layout, architecture)
    return gen.samples(params, z, backend=backend, **kwargs)[0]


def jacobian(layout, params, z, architecture=STYLE):
    return QuantumGenerator(layout, architecture).jacobian(params, z)


def embed_standard_params(layout, standard_params):
    """Style parameters reproducing a standard generator exactly.

    Encoder gates get (bias 0, weight phi); all other gates weight 0 and
    bias phi. Used with the same (encoder-carrying) layout in style mode.
    """
    standard_params = np.asarray(standard_params, dtype=np.float64)
    if standard_params.shape != (layout.n_gates,):
        raise ValueError(f"expected {layout.n_gates} standard parameters")
    encoder = layout.is_encoder()
    style = np.empty(2 * layout.n_gates)
    style[0::2] = np.where(encoder, 0.0, standard_params)
    style[1::2] = np.where(encoder, standard_params, 0.0)
    return style
