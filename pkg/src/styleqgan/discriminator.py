"""Classical discriminator, binary cross-entropy losses and ADADELTA.

The discriminator is a fully connected network with leaky-rectifier hidden
layers and a sigmoid output. All probabilities entering a logarithm are
clamped to ``[PROB_CLAMP, 1 - PROB_CLAMP]``; the gradient is zero on the
clamped side, consistent with the clamped loss.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

PROB_CLAMP = 1e-7
DEFAULT_HIDDEN = (64, 32)


@dataclass(frozen=True)
class DiscriminatorParams:
    """Layer widths plus one flat value vector holding every (W, b) in order.

    ``W`` of layer ``k`` has shape (sizes[k], sizes[k+1]).
    """

    sizes: tuple
    values: np.ndarray
    slope: float = 0.2

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise ValueError("sizes must run from the input width down to 1")
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (n_disc_params(sizes),):
            raise ValueError(f"expected {n_disc_params(sizes)} values, got {values.shape}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "values", values)

    @property
    def n_inputs(self):
        return self.sizes[0]

    def layers(self):
        out, pos = [], 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = self.values[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            b = self.values[pos : pos + fan_out]
            pos += fan_out
            out.append((w, b))
        return out

    def with_values(self, values):
        return replace(self, values=values)

    def to_dict(self):
        return {"sizes": list(self.sizes), "slope": self.slope, "activation": "leaky_relu", "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["sizes"]), np.asarray(d["values"], dtype=np.float64), float(d.get("slope", 0.2)))

    @classmethod
    def from_layers(cls, layers, slope=0.2):
        sizes = [layers[0][0].shape[0]] + [w.shape[1] for w, _ in layers]
        values = np.concatenate([np.concatenate([np.ravel(w), np.ravel(b)]) for w, b in layers])
        return cls(tuple(sizes), values, slope)


def n_disc_params(sizes):
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def init_discriminator(n_inputs, rng, hidden=DEFAULT_HIDDEN, slope=0.2):
    """Glorot-uniform weights, zero biases."""
    sizes = (n_inputs,) + tuple(hidden) + (1,)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-s, s, (fan_in, fan_out)), np.zeros(fan_out)))
    return DiscriminatorParams.from_layers(layers, slope)


def _as_batch(params, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != params.n_inputs:
        raise ValueError(f"discriminator expects {params.n_inputs} inputs, got {x.shape[1]}")
    return x, single


def _forward(params, x):
    """Logits plus the per-layer (input, pre-activation) cache."""
    cache = []
    h = x
    layers = params.layers()
    for w, b in layers[:-1]:
        a = h @ w + b
        cache.append((h, a))
        h = np.where(a > 0, a, params.slope * a)
    w, b = layers[-1]
    cache.append((h, None))
    return (h @ w + b)[:, 0], cache


def _backward(params, cache, g_logit):
    """Flat parameter gradient and input gradient for upstream d/d(logit)."""
    layers = params.layers()
    grads = []
    g = g_logit[:, None]
    for (w, _), (h, a) in zip(reversed(layers), reversed(cache)):
        if a is not None:
            g = g * np.where(a > 0, 1.0, params.slope)
        grads.append((h.T @ g, g.sum(axis=0)))
        g = g @ w.T
    grads.reverse()
    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return flat, g


def forward(params, x):
    """D(x) in (0, 1); a scalar for a single vector, else one value per row."""
    x, single = _as_batch(params, x)
    d = expit(_forward(params, x)[0])
    return float(d[0]) if single else d


def _clamped(d):
    return np.clip(d, PROB_CLAMP, 1.0 - PROB_CLAMP)


def _nonempty(batch, name):
    if np.asarray(batch).size == 0:
        raise ValueError(f"{name} batch is empty")


def loss_discriminator(params, real_batch, fake_batch):
    """mean log D(real) + mean log(1 - D(fake)); the discriminator maximizes it."""
    _nonempty(real_batch, "real")
    _nonempty(fake_batch, "fake")
    d_real = _clamped(forward(params, np.atleast_2d(real_batch)))
    d_fake = _clamped(forward(params, np.atleast_2d(fake_batch)))
    return float(np.mean(np.log(d_real)) + np.mean(np.log1p(-d_fake)))


def loss_generator(params, fake_batch):
    """-mean log D(fake); the generator minimizes it."""
    _nonempty(fake_batch, "fake")
    return float(-np.mean(np.log(_clamped(forward(params, np.atleast_2d(fake_batch))))))


def _inside(d):
    return ((d > PROB_CLAMP) & (d < 1.0 - PROB_CLAMP)).astype(np.float64)


def grads_discriminator(params, real_batch, fake_batch):
    """Gradient of ``-loss_discriminator`` w.r.t. the flat parameter vector."""
    return discriminator_loss_and_grad(params, real_batch, fake_batch)[1]


def discriminator_loss_and_grad(params, real_batch, fake_batch):
    _nonempty(real_batch, "real")
    _nonempty(fake_batch, "fake")
    real, _ = _as_batch(params, real_batch)
    fake, _ = _as_batch(params, fake_batch)
    x = np.vstack([real, fake])
    logits, cache = _forward(params, x)
    d = expit(logits)
    nr = real.shape[0]
    dr, df = d[:nr], d[nr:]
    loss = float(np.mean(np.log(_clamped(dr))) + np.mean(np.log1p(-_clamped(df))))
    # d(-L_D)/d(logit): real -(1 - D)/Nr, fake +D/Nf
    g = np.concatenate([-(1.0 - dr) * _inside(dr) / nr, df * _inside(df) / fake.shape[0]])
    return loss, _backward(params, cache, g)[0]


def generator_loss_and_input_grad(params, fake_batch):
    """L_G and dL_G/dx for every fake row."""
    fake, _ = _as_batch(params, fake_batch)
    logits, cache = _forward(params, fake)
    d = expit(logits)
    loss = float(-np.mean(np.log(_clamped(d))))
    g = -(1.0 - d) * _inside(d) / fake.shape[0]
    return loss, _backward(params, cache, g)[1]


def grad_generator_params(params_d, generator, params_g, latent_batch):
    """(L_G, dL_G/d params_g) by the chain rule through x = -<sigma_z>.

    ``generator`` is a ``QuantumGenerator``; the expectation Jacobian is
    contracted through its adjoint vector-Jacobian product.
    """
    fake = generator.samples(params_g, latent_batch)
    loss, dx = generator_loss_and_input_grad(params_d, fake)
    _, grad = generator.param_vjp(params_g, latent_batch, -dx)
    return loss, grad


@dataclass(frozen=True)
class AdadeltaState:
    accum_grad_sq: np.ndarray
    accum_update_sq: np.ndarray
    learning_rate: float = 1.0
    rho: float = 0.95
    epsilon: float = 1e-7
    steps: int = 0

    @classmethod
    def fresh(cls, n_params, learning_rate=1.0, rho=0.95, epsilon=1e-7):
        if not 0 < rho < 1 or epsilon <= 0 or learning_rate <= 0:
            raise ValueError("need 0 < rho < 1, epsilon > 0, learning_rate > 0")
        return cls(np.zeros(n_params), np.zeros(n_params), learning_rate, rho, epsilon)

    def to_dict(self):
        return {
            "accum_grad_sq": self.accum_grad_sq.tolist(),
            "accum_update_sq": self.accum_update_sq.tolist(),
            "learning_rate": self.learning_rate,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "steps": self.steps,
        }


def adadelta_step(state, params, gradient):
    """One ADADELTA update scaled by ``state.learning_rate``.

    ``delta = sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g`` with the running
    averages decayed by ``rho``; parameters move by ``-learning_rate * delta``.
    Returns ``(new_params, new_state)``; inputs are not modified.
    """
    params = np.asarray(params, dtype=np.float64)
    gradient = np.asarray(gradient, dtype=np.float64)
    if params.shape != gradient.shape or params.shape != state.accum_grad_sq.shape:
        raise ValueError("params, gradient and optimizer state shapes differ")
    rho, eps = state.rho, state.epsilon
    acc_g = rho * state.accum_grad_sq + (1 - rho) * gradient**2
    delta = np.sqrt(state.accum_update_sq + eps) / np.sqrt(acc_g + eps) * gradient
    acc_u = rho * state.accum_update_sq + (1 - rho) * delta**2
    new_state = replace(state, accum_grad_sq=acc_g, accum_update_sq=acc_u, steps=state.steps + 1)
    return params - state.learning_rate * delta, new_state
