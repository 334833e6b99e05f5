"""Adversarial training loop.

One epoch is one minibatch update pair: ``d_steps`` discriminator ADADELTA
steps on ``-L_D`` followed by one generator ADADELTA step on ``L_G``. Each
step draws its own latent batch. Fakes come from the exact expectation
backend.

Random streams: ``seed_streams(seed)`` spawns independent generators from
``numpy.random.SeedSequence(seed)`` in a fixed order (data, init, latent,
shuffle, shots, evaluation), so each stream is reproducible on its own.
"""
import csv
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .discriminator import (
    DEFAULT_HIDDEN,
    AdadeltaState,
    adadelta_step,
    discriminator_loss_and_grad,
    grad_generator_params,
    init_discriminator,
)
from .generator import STYLE, CircuitLayout, QuantumGenerator

log = logging.getLogger(__name__)

STREAMS = ("data", "init", "latent", "shuffle", "shots", "evaluation")


class TrainingError(RuntimeError):
    def __init__(self, epoch, message):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


def seed_streams(seed):
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


@dataclass
class TrainingConfig:
    layout: CircuitLayout
    epochs: int
    architecture: str = STYLE
    batch_size: int = 128
    lr_discriminator: float = 0.1
    lr_generator: float = 0.5
    seed: int = 0
    checkpoint_every: int = 0
    log_every: int = 1000
    d_steps: int = 1
    hidden: tuple = DEFAULT_HIDDEN
    init_scale: float = 0.1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.d_steps < 1:
            raise ValueError("epochs >= 0, batch_size >= 1 and d_steps >= 1 required")
        if self.lr_discriminator <= 0 or self.lr_generator <= 0:
            raise ValueError("learning rates must be positive")
        if self.checkpoint_every < 0 or self.log_every < 0:
            raise ValueError("checkpoint_every and log_every must be nonnegative")

    @property
    def d_latent(self):
        return self.layout.d_latent

    def to_dict(self):
        d = asdict(self)
        d["layout"] = self.layout.to_dict()
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    loss_generator: list = field(default_factory=list)
    loss_discriminator: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    header: dict = field(
        default_factory=lambda: {
            "update_ratio": "d_steps discriminator steps per generator step",
            "latent_policy": "fresh latent batch per step",
            "fake_backend": "exact",
        }
    )

    def append(self, epoch, lg, ld, t):
        self.epochs.append(epoch)
        self.loss_generator.append(lg)
        self.loss_discriminator.append(ld)
        self.wall_time.append(t)

    def __len__(self):
        return len(self.epochs)

    def save_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for key, value in self.header.items():
                fh.write(f"# {key}: {value}\n")
            w = csv.writer(fh)
            w.writerow(["epoch", "loss_generator", "loss_discriminator", "wall_time_s"])
            for row in zip(self.epochs, self.loss_generator, self.loss_discriminator, self.wall_time):
                w.writerow([row[0]] + [format(v, ".17g") for v in row[1:]])


@dataclass
class TrainResult:
    params_g: np.ndarray
    params_d: object
    log: TrainingLog
    generator: QuantumGenerator
    opt_g: AdadeltaState
    opt_d: AdadeltaState


def _minibatches(real, batch_size, rng):
    n = len(real)
    while True:
        order = rng.permutation(n)
        for start in range(0, n - batch_size + 1, batch_size):
            yield real[order[start : start + batch_size]]


def train(
    config,
    real_samples,
    init_params_g=None,
    on_checkpoint: Optional[Callable] = None,
    on_step: Optional[Callable] = None,
):
    """Train generator and discriminator against ``real_samples`` in [-1, 1]^n.

    ``on_checkpoint(epoch, result)`` fires every ``checkpoint_every`` epochs;
    ``on_step(kind, epoch)`` fires after every optimizer update with kind
    ``"discriminator"`` or ``"generator"``.
    """
    real = np.asarray(real_samples, dtype=np.float64)
    if real.ndim == 1:
        real = real[:, None]
    gen = QuantumGenerator(config.layout, config.architecture)
    if real.shape[1] != gen.n_qubits:
        raise ValueError(f"samples have {real.shape[1]} dims, generator has {gen.n_qubits} qubits")
    if len(real) < config.batch_size:
        raise ValueError(f"need at least batch_size={config.batch_size} samples, got {len(real)}")

    streams = seed_streams(config.seed)
    params_g = gen.init_params(streams["init"], config.init_scale)
    if init_params_g is not None:
        params_g = np.array(init_params_g, dtype=np.float64)
        if params_g.shape != (gen.n_params,):
            raise ValueError(f"initial generator parameters need length {gen.n_params}")
    params_d = init_discriminator(gen.n_qubits, streams["init"], config.hidden)
    opt_g = AdadeltaState.fresh(gen.n_params, config.lr_generator)
    opt_d = AdadeltaState.fresh(params_d.values.size, config.lr_discriminator)
    latent = streams["latent"]
    batches = _minibatches(real, config.batch_size, streams["shuffle"])
    history = TrainingLog()
    result = TrainResult(params_g, params_d, history, gen, opt_g, opt_d)
    start = time.perf_counter()

    for epoch in range(config.epochs):
        for _ in range(config.d_steps):
            z = latent.standard_normal((config.batch_size, gen.layout.d_latent))
            fake = gen.samples(params_g, z)
            loss_d, grad_d = discriminator_loss_and_grad(params_d, next(batches), fake)
            values, opt_d = adadelta_step(opt_d, params_d.values, grad_d)
            params_d = params_d.with_values(values)
            if on_step:
                on_step("discriminator", epoch)
        z = latent.standard_normal((config.batch_size, gen.layout.d_latent))
        loss_g, grad_g = grad_generator_params(params_d, gen, params_g, z)
        params_g, opt_g = adadelta_step(opt_g, params_g, grad_g)
        if on_step:
            on_step("generator", epoch)

        if not (np.isfinite(loss_g) and np.isfinite(loss_d)):
            raise TrainingError(epoch, f"non-finite loss (L_G={loss_g}, L_D={loss_d})")
        if not (np.all(np.isfinite(params_g)) and np.all(np.isfinite(params_d.values))):
            raise TrainingError(epoch, "non-finite parameters")
        history.append(epoch, loss_g, loss_d, time.perf_counter() - start)

        result = TrainResult(params_g, params_d, history, gen, opt_g, opt_d)
        if config.log_every and (epoch + 1) % config.log_every == 0:
            log.info("epoch %d  L_G %.4f  L_D %.4f", epoch + 1, loss_g, loss_d)
        if on_checkpoint and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            on_checkpoint(epoch + 1, result)
    return result


def evaluate_checkpoint(
    params_g,
    generator,
    n_samples,
    rng,
    postprocess=None,
    backend="exact",
    n_shots=None,
    noise=None,
    shots_rng=None,
    chunk=8192,
):
    """Generate ``n_samples`` from fresh latents and map them back to data space.

    ``postprocess`` is a ``Preprocessor`` (its inverse is applied) or None.
    """
    n = generator.n_qubits
    if n_samples == 0:
        out = np.empty((0, n))
    else:
        parts = []
        for start in range(0, n_samples, chunk):
            m = min(chunk, n_samples - start)
            z = rng.standard_normal((m, generator.layout.d_latent))
            parts.append(
                generator.samples(params_g, z, backend=backend, n_shots=n_shots, rng=shots_rng or rng, noise=noise)
            )
        out = np.vstack(parts)
    if postprocess is not None:
        out = postprocess.inverse_transform(out)
    return out
