import numpy as np
import pytest

from styleqgan.data import fit_minmax, sample_gamma, sample_gaussian3d
from styleqgan.generator import STANDARD, CircuitLayout, QuantumGenerator, standard_layout
from styleqgan.metrics import histogram_kl
from styleqgan.training import TrainingConfig, TrainingError, evaluate_checkpoint, seed_streams, train


def _gamma_setup(n=2000):
    raw = sample_gamma(n, np.random.default_rng(0))
    pre = fit_minmax(raw)
    return pre, pre.transform(raw.values)


def test_zero_epochs_returns_initial_state():
    _, x = _gamma_setup()
    config = TrainingConfig(CircuitLayout(1, 1, 1), epochs=0, seed=4)
    result = train(config, x)
    assert len(result.log) == 0
    expected = QuantumGenerator(config.layout).init_params(seed_streams(4)["init"], 0.1)
    np.testing.assert_array_equal(result.params_g, expected)
    assert np.all(np.abs(result.params_g) <= 0.1)


def test_explicit_initial_parameters():
    _, x = _gamma_setup()
    init = np.linspace(-1, 1, 10)
    result = train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=0), x, init_params_g=init)
    np.testing.assert_array_equal(result.params_g, init)
    with pytest.raises(ValueError):
        train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=0), x, init_params_g=np.zeros(3))


def test_training_is_deterministic():
    _, x = _gamma_setup()
    config = TrainingConfig(CircuitLayout(1, 1, 1), epochs=40, seed=9)
    a, b = train(config, x), train(config, x)
    np.testing.assert_array_equal(a.params_g, b.params_g)
    np.testing.assert_array_equal(a.params_d.values, b.params_d.values)
    assert a.log.loss_generator == b.log.loss_generator
    assert a.log.loss_discriminator == b.log.loss_discriminator
    c = train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=40, seed=10), x)
    assert c.log.loss_generator != a.log.loss_generator


@pytest.mark.parametrize("d_steps", [1, 3])
def test_alternation_order(d_steps):
    _, x = _gamma_setup()
    calls = []
    config = TrainingConfig(CircuitLayout(1, 1, 1), epochs=5, d_steps=d_steps)
    result = train(config, x, on_step=lambda kind, epoch: calls.append((kind, epoch)))
    expected = [(k, e) for e in range(5) for k in ["discriminator"] * d_steps + ["generator"]]
    assert calls == expected
    assert result.opt_d.steps == 5 * d_steps and result.opt_g.steps == 5


def test_log_records_every_epoch(tmp_path):
    _, x = _gamma_setup()
    result = train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=12), x)
    assert result.log.epochs == list(range(12))
    assert all(np.diff(result.log.wall_time) >= 0)
    path = tmp_path / "losses.csv"
    result.log.save_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# update_ratio")
    assert lines[3] == "epoch,loss_generator,loss_discriminator,wall_time_s"
    assert len(lines) == 4 + 12


def test_checkpoint_callback():
    _, x = _gamma_setup()
    seen = []
    train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=10, checkpoint_every=4), x, on_checkpoint=lambda e, r: seen.append((e, len(r.log))))
    assert seen == [(4, 4), (8, 8)]


def test_input_validation():
    _, x = _gamma_setup(100)
    with pytest.raises(ValueError, match="batch_size"):
        train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=1), x)
    with pytest.raises(ValueError, match="dims"):
        train(TrainingConfig(CircuitLayout(3, 1, 3), epochs=1, batch_size=8), x)
    with pytest.raises(ValueError):
        TrainingConfig(CircuitLayout(1, 1, 1), epochs=-1)
    with pytest.raises(ValueError):
        TrainingConfig(CircuitLayout(1, 1, 1), epochs=1, lr_generator=0)


def test_non_finite_loss_aborts():
    x = np.full((200, 1), np.nan)
    with pytest.raises(TrainingError, match="epoch 0"):
        train(TrainingConfig(CircuitLayout(1, 1, 1), epochs=3), x)


def test_short_run_improves_marginals():
    raw = sample_gaussian3d(5000, np.random.default_rng(1))
    pre = fit_minmax(raw)
    ref = sample_gaussian3d(10**4, np.random.default_rng(2)).values
    config = TrainingConfig(CircuitLayout(3, 1, 3), epochs=200, seed=1)
    before = train(TrainingConfig(CircuitLayout(3, 1, 3), epochs=0, seed=1), pre.transform(raw.values))
    after = train(config, pre.transform(raw.values))

    def kls(result):
        gen = evaluate_checkpoint(result.params_g, result.generator, 10**4, np.random.default_rng(3), pre)
        return [histogram_kl(ref[:, k], gen[:, k], 100) for k in range(3)]

    assert all(a < b for a, b in zip(kls(after), kls(before)))


def test_standard_architecture_trains():
    raw = sample_gaussian3d(1000, np.random.default_rng(1))
    pre = fit_minmax(raw)
    result = train(TrainingConfig(standard_layout(3, 1, 3), epochs=5, architecture=STANDARD), pre.transform(raw.values))
    assert result.params_g.shape == (result.generator.n_params,) == (20,)


def test_evaluate_checkpoint_edge_cases(rng):
    pre, _ = _gamma_setup()
    gen = QuantumGenerator(CircuitLayout(1, 1, 1))
    assert evaluate_checkpoint(np.zeros(10), gen, 0, rng, pre).shape == (0, 1)
    out = evaluate_checkpoint(np.zeros(10), gen, 50, rng, pre)
    np.testing.assert_allclose(out, pre.inverse_transform(np.full((1, 1), -1.0)).repeat(50, axis=0))


def test_evaluate_checkpoint_chunking_is_seamless(rng):
    gen = QuantumGenerator(CircuitLayout(3, 1, 3))
    params = rng.normal(size=gen.n_params)
    a = evaluate_checkpoint(params, gen, 1000, np.random.default_rng(8), chunk=1000)
    b = evaluate_checkpoint(params, gen, 1000, np.random.default_rng(8), chunk=128)
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_evaluate_checkpoint_shots(rng):
    gen = QuantumGenerator(CircuitLayout(1, 1, 1))
    params = rng.normal(size=10)
    out = evaluate_checkpoint(params, gen, 20, rng, backend="shots", n_shots=1000)
    levels = (np.arange(1001) * 2 - 1000) / 1000
    assert np.all(np.isin(np.round(out, 12), np.round(levels, 12)))


def test_seed_streams_independent():
    a, b = seed_streams(5), seed_streams(5)
    assert a["data"].random() == b["data"].random()
    assert seed_streams(5)["latent"].random() != seed_streams(5)["init"].random()
