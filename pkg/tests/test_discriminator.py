import math

import numpy as np
import pytest

from styleqgan.discriminator import (
    AdadeltaState,
    DiscriminatorParams,
    adadelta_step,
    discriminator_loss_and_grad,
    forward,
    grad_generator_params,
    grads_discriminator,
    init_discriminator,
    loss_discriminator,
    loss_generator,
)
from styleqgan.generator import CircuitLayout, QuantumGenerator


def _zero_net(sizes=(3, 4, 1)):
    return init_discriminator(sizes[0], np.random.default_rng(0), sizes[1:-1]).with_values(
        np.zeros(sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])))
    )


def _scalar_forward(params, x):
    """Neuron-by-neuron forward pass in plain Python floats."""
    h = [float(v) for v in x]
    layers = params.layers()
    for k, (w, b) in enumerate(layers):
        out = []
        for j in range(w.shape[1]):
            a = b[j] + sum(h[i] * w[i, j] for i in range(w.shape[0]))
            if k < len(layers) - 1:
                a = a if a > 0 else params.slope * a
            out.append(a)
        h = out
    return 1.0 / (1.0 + math.exp(-h[0]))


def _clamp(p):
    return min(max(p, 1e-7), 1 - 1e-7)


def test_zero_network_outputs_half(rng):
    params = _zero_net()
    assert forward(params, rng.normal(size=3)) == 0.5
    np.testing.assert_array_equal(forward(params, rng.normal(size=(5, 3))), 0.5)


def test_single_linear_layer():
    params = DiscriminatorParams((1, 1), np.array([1.0, 0.0]))
    assert forward(params, [0.0]) == 0.5


def test_forward_matches_scalar_oracle(rng):
    params = init_discriminator(3, rng, (6, 5))
    for x in rng.normal(size=(10, 3)):
        assert abs(forward(params, x) - _scalar_forward(params, x)) < 1e-10


def test_forward_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        forward(init_discriminator(3, rng), np.zeros(2))


def test_parameter_layout_round_trip(rng):
    params = init_discriminator(3, rng)
    assert [w.shape for w, _ in params.layers()] == [(3, 64), (64, 32), (32, 1)]
    again = DiscriminatorParams.from_dict(params.to_dict())
    np.testing.assert_array_equal(again.values, params.values)
    assert again.sizes == params.sizes


def test_constant_classifier_losses(rng):
    params = _zero_net()
    real, fake = rng.normal(size=(7, 3)), rng.normal(size=(9, 3))
    assert loss_discriminator(params, real, fake) == pytest.approx(2 * math.log(0.5), abs=1e-15)
    assert loss_generator(params, fake) == pytest.approx(math.log(2), abs=1e-15)


def test_near_perfect_classifier():
    # logit = w * x with x = +-1 chosen so that D(real) = 1 - delta, D(fake) = delta
    delta = 1e-3
    w = math.log((1 - delta) / delta)
    params = DiscriminatorParams((1, 1), np.array([w, 0.0]))
    ld = loss_discriminator(params, [[1.0]], [[-1.0]])
    assert ld == pytest.approx(2 * math.log(1 - delta), rel=1e-12)
    assert ld == pytest.approx(-0.0020, abs=1e-5)
    lg = loss_generator(params, [[1.0]])
    assert lg == pytest.approx(-math.log(1 - delta), rel=1e-12)
    assert lg == pytest.approx(0.0010, abs=1e-5)


def test_losses_match_per_sample_oracle(rng):
    params = init_discriminator(3, rng, (8,))
    real, fake = rng.normal(size=(11, 3)), rng.normal(size=(6, 3))
    ld = sum(math.log(_clamp(_scalar_forward(params, x))) for x in real) / 11
    ld += sum(math.log(1 - _clamp(_scalar_forward(params, x))) for x in fake) / 6
    lg = -sum(math.log(_clamp(_scalar_forward(params, x))) for x in fake) / 6
    assert abs(loss_discriminator(params, real, fake) - ld) < 1e-12
    assert abs(loss_generator(params, fake) - lg) < 1e-12


def test_empty_batches_rejected(rng):
    params = init_discriminator(2, rng)
    with pytest.raises(ValueError):
        loss_discriminator(params, np.zeros((0, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        loss_generator(params, np.zeros((0, 2)))


def test_discriminator_gradient_finite_differences(rng):
    h = 1e-6
    for _ in range(8):
        params = init_discriminator(3, rng, (7,))
        real, fake = rng.uniform(-1, 1, (12, 3)), rng.uniform(-1, 1, (10, 3))
        grad = grads_discriminator(params, real, fake)
        fd = np.empty_like(grad)
        for k in range(grad.size):
            up, down = params.values.copy(), params.values.copy()
            up[k] += h
            down[k] -= h
            fd[k] = -(
                loss_discriminator(params.with_values(up), real, fake)
                - loss_discriminator(params.with_values(down), real, fake)
            ) / (2 * h)
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-9)


def test_gradient_zero_for_constant_classifier(rng):
    grad = grads_discriminator(_zero_net(), rng.normal(size=(8, 3)), rng.normal(size=(8, 3)))
    np.testing.assert_array_equal(grad, 0.0)


def test_gradient_is_batch_mean(rng):
    params = init_discriminator(3, rng, (5,))
    real, fake = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
    g1 = grads_discriminator(params, real, fake)
    g2 = grads_discriminator(params, np.vstack([real, real]), np.vstack([fake, fake, fake]))
    np.testing.assert_allclose(g2, g1, atol=1e-14)


def test_gradients_finite_under_saturation(rng):
    params = init_discriminator(3, rng, (5,))
    huge = 1e6 * rng.normal(size=(4, 3))
    loss, grad = discriminator_loss_and_grad(params, huge, -huge)
    assert np.isfinite(loss) and np.all(np.isfinite(grad))
    assert np.isfinite(loss_generator(params, huge))


def test_discriminator_step_ascends(rng):
    for _ in range(20):
        params = init_discriminator(3, rng)
        real, fake = rng.uniform(-1, 1, (16, 3)), rng.uniform(-1, 1, (16, 3))
        before = loss_discriminator(params, real, fake)
        values, _ = adadelta_step(AdadeltaState.fresh(params.values.size, 1e-4), params.values, grads_discriminator(params, real, fake))
        assert loss_discriminator(params.with_values(values), real, fake) >= before


def _gen_loss(params_d, gen, params_g, z):
    return loss_generator(params_d, gen.samples(params_g, z))


def test_generator_gradient_finite_differences(rng):
    gen = QuantumGenerator(CircuitLayout(3, 1, 3))
    h = 1e-6
    for _ in range(20):
        params_d = init_discriminator(3, rng, (16, 8))
        params_g = rng.uniform(-np.pi, np.pi, gen.n_params)
        z = rng.normal(size=(4, 3))
        loss, grad = grad_generator_params(params_d, gen, params_g, z)
        assert loss == pytest.approx(_gen_loss(params_d, gen, params_g, z), abs=1e-14)
        fd = np.empty_like(grad)
        for k in range(grad.size):
            up, down = params_g.copy(), params_g.copy()
            up[k] += h
            down[k] -= h
            fd[k] = (_gen_loss(params_d, gen, up, z) - _gen_loss(params_d, gen, down, z)) / (2 * h)
        np.testing.assert_allclose(grad, fd, atol=1e-4)


def test_generator_gradient_zero_for_input_blind_discriminator(rng):
    gen = QuantumGenerator(CircuitLayout(3, 1, 3))
    params_d = init_discriminator(3, rng, (8,))
    w0, b0 = params_d.layers()[0]
    values = params_d.values.copy()
    values[: w0.size] = 0.0
    _, grad = grad_generator_params(params_d.with_values(values), gen, rng.normal(size=gen.n_params), rng.normal(size=(5, 3)))
    np.testing.assert_array_equal(grad, 0.0)


def test_generator_gradient_single_rotation_closed_form():
    # only the first RY is active, so x = -cos(theta); with logit = w x + b
    # d/dtheta [-log sigmoid(-w cos theta + b)] = -(1 - D) w sin(theta)
    gen = QuantumGenerator(CircuitLayout(1, 1, 1))
    w, b = 1.7, -0.3
    params_d = DiscriminatorParams((1, 1), np.array([w, b]))
    for theta in (0.3, 1.1, 2.5, -0.8):
        params_g = np.zeros(10)
        params_g[0] = theta
        z = np.array([[0.6]])
        d = 1 / (1 + math.exp(-(-w * math.cos(theta) + b)))
        expected = -(1 - d) * w * math.sin(theta)
        _, grad = grad_generator_params(params_d, gen, params_g, z)
        assert grad[0] == pytest.approx(expected, abs=1e-12)
        assert grad[1] == pytest.approx(0.6 * expected, abs=1e-12)


def test_adadelta_zero_gradient():
    state = AdadeltaState(np.array([0.4, 0.2]), np.array([0.1, 0.3]), 0.5)
    params = np.array([1.0, -2.0])
    new_params, new_state = adadelta_step(state, params, np.zeros(2))
    np.testing.assert_array_equal(new_params, params)
    np.testing.assert_allclose(new_state.accum_grad_sq, 0.95 * state.accum_grad_sq)
    np.testing.assert_allclose(new_state.accum_update_sq, 0.95 * state.accum_update_sq)


def test_adadelta_first_step_hand_value():
    state = AdadeltaState.fresh(1, 0.1)
    params, state = adadelta_step(state, np.zeros(1), np.ones(1))
    closed = -0.1 * math.sqrt(1e-7) / math.sqrt(0.05 * 1.0 + 1e-7)
    assert params[0] == pytest.approx(closed, rel=1e-14)
    assert params[0] == pytest.approx(-1.4142121481616534e-4, rel=1e-12)


def test_adadelta_two_step_trace():
    # scalar trace computed by hand: the update accumulator starts at zero, so
    # the second step is slightly larger than the first (ratio (2x+1)/(1.95x+1)
    # with x = eps/(1-rho)), not smaller
    state = AdadeltaState.fresh(1, 0.1)
    p1, state = adadelta_step(state, np.zeros(1), np.ones(1))
    p2, state = adadelta_step(state, p1, np.ones(1))
    step1, step2 = -p1[0], p1[0] - p2[0]
    assert step1 == pytest.approx(1.4142121481616534e-4, rel=1e-12)
    assert step2 == pytest.approx(1.4322282974893826e-4, rel=1e-12)
    assert state.accum_grad_sq[0] == pytest.approx(0.0975, rel=1e-12)
    assert state.accum_update_sq[0] == pytest.approx(1.975637048068468e-07, rel=1e-12)
    assert state.steps == 2


def test_adadelta_shape_mismatch():
    with pytest.raises(ValueError):
        adadelta_step(AdadeltaState.fresh(3, 0.1), np.zeros(3), np.zeros(2))


def test_adadelta_accumulators_nonnegative(rng):
    state = AdadeltaState.fresh(10, 0.5)
    params = np.zeros(10)
    for _ in range(50):
        params, state = adadelta_step(state, params, rng.normal(size=10) * 100)
        assert np.all(state.accum_grad_sq >= 0) and np.all(state.accum_update_sq >= 0)


def test_optimizer_trajectory_deterministic():
    def run():
        rng = np.random.default_rng(77)
        params = init_discriminator(3, rng)
        state = AdadeltaState.fresh(params.values.size, 0.1)
        for _ in range(10):
            real, fake = rng.uniform(-1, 1, (8, 3)), rng.uniform(-1, 1, (8, 3))
            values, state = adadelta_step(state, params.values, grads_discriminator(params, real, fake))
            params = params.with_values(values)
        return params.values

    np.testing.assert_array_equal(run(), run())
