import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_z, random_gates, random_state_amplitudes
from styleqgan.simulator import (
    DensityMatrix,
    GateOp,
    StateVector,
    apply_gate,
    estimate_expectations_shots,
    evolve_density,
    expectation_z,
    gate_unitary,
    measure_distribution,
    run_circuit,
)


def test_ry_pi_flips_zero():
    out = apply_gate(StateVector.zero(1), GateOp("RY", 0, np.pi))
    np.testing.assert_allclose(out.amplitudes, [0, 1], atol=1e-15)


def test_ry_zero_is_identity(rng):
    psi = StateVector(random_state_amplitudes(rng, 3))
    for q in range(3):
        np.testing.assert_array_equal(apply_gate(psi, GateOp("RY", q, 0.0)).amplitudes, psi.amplitudes)


def test_cry_inactive_control(rng):
    tail = random_state_amplitudes(rng, 2)
    psi = StateVector(np.kron([1, 0], tail))
    for theta in rng.uniform(-6, 6, 5):
        out = apply_gate(psi, GateOp("CRY", 1, theta, control=0))
        np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-15)


def test_rz_inverse_pair(rng):
    psi = StateVector(random_state_amplitudes(rng, 2))
    out = apply_gate(apply_gate(psi, GateOp("RZ", 1, np.pi / 2)), GateOp("RZ", 1, -np.pi / 2))
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-12)


def test_gate_matrices_follow_convention():
    theta = 0.7
    ry = gate_unitary(GateOp("RY", 0, theta), 1)
    np.testing.assert_allclose(ry, [[np.cos(0.35), -np.sin(0.35)], [np.sin(0.35), np.cos(0.35)]])
    rz = gate_unitary(GateOp("RZ", 0, theta), 1)
    np.testing.assert_allclose(rz, np.diag([np.exp(-0.35j), np.exp(0.35j)]))
    # control is the most significant qubit here, so the RY block sits bottom-right
    cry = gate_unitary(GateOp("CRY", 1, theta, control=0), 2)
    np.testing.assert_allclose(cry[:2, :2], np.eye(2))
    np.testing.assert_allclose(cry[2:, 2:], ry)


def test_apply_gate_does_not_mutate(rng):
    amps = random_state_amplitudes(rng, 2)
    psi = StateVector(amps)
    apply_gate(psi, GateOp("RY", 0, 1.0))
    np.testing.assert_array_equal(psi.amplitudes, amps)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0


def test_gate_validation():
    with pytest.raises(ValueError):
        GateOp("CRY", 0, 1.0)
    with pytest.raises(ValueError):
        GateOp("CRY", 0, 1.0, control=0)
    with pytest.raises(ValueError):
        GateOp("RX", 0, 1.0)
    with pytest.raises(IndexError):
        apply_gate(StateVector.zero(2), GateOp("RY", 2, 1.0))
    with pytest.raises(IndexError):
        expectation_z(StateVector.zero(2), 5)


def test_apply_gate_matches_dense_unitary(rng):
    for n in (1, 2, 3):
        psi = StateVector(random_state_amplitudes(rng, n))
        for gate in random_gates(rng, n, 20):
            out = apply_gate(psi, gate)
            np.testing.assert_allclose(out.amplitudes, gate_unitary(gate, n) @ psi.amplitudes, atol=1e-12)


def test_expectation_z_examples():
    assert expectation_z(StateVector.zero(1), 0) == 1.0
    half = apply_gate(StateVector.zero(1), GateOp("RY", 0, np.pi / 2))
    assert abs(expectation_z(half, 0)) < 1e-12


def test_expectation_z_matches_dense_oracle(rng):
    for _ in range(20):
        amps = random_state_amplitudes(rng, 3)
        psi = StateVector(amps)
        for q in range(3):
            oracle = np.real(amps.conj() @ dense_z(q, 3) @ amps)
            assert abs(expectation_z(psi, q) - oracle) < 1e-12


def test_measure_distribution():
    np.testing.assert_array_equal(measure_distribution(StateVector([0, 1])), [0, 1])
    half = apply_gate(StateVector.zero(1), GateOp("RY", 0, np.pi / 2))
    np.testing.assert_allclose(measure_distribution(half), [0.5, 0.5], atol=1e-12)


def test_big_endian_ordering():
    # flipping qubit 0 of three sets the most significant bit: |100> = index 4
    out = apply_gate(StateVector.zero(3), GateOp("RY", 0, np.pi))
    assert np.argmax(np.abs(out.amplitudes)) == 4
    assert expectation_z(out, 0) == pytest.approx(-1)
    assert expectation_z(out, 1) == pytest.approx(1)


def test_shots_deterministic_outcome(rng):
    est = estimate_expectations_shots(np.array([0.0, 1.0]), 17, rng)
    assert est[0] == -1.0


def test_shots_require_positive_count(rng):
    with pytest.raises(ValueError):
        estimate_expectations_shots(np.array([0.5, 0.5]), 0, rng)


def test_shot_estimator_spread():
    # binomial: sd of the mean of N +-1 outcomes is sqrt((1 - <z>^2) / N)
    ests = [estimate_expectations_shots(np.array([0.5, 0.5]), 1000, np.random.default_rng(s))[0] for s in range(200)]
    sd = np.std(ests, ddof=1)
    assert abs(sd - np.sqrt(1 / 1000)) < 0.2 * np.sqrt(1 / 1000)


def test_shot_estimator_large_n_converges(rng):
    psi = StateVector(random_state_amplitudes(rng, 3))
    est = estimate_expectations_shots(measure_distribution(psi), 10**6, rng)
    exact = [expectation_z(psi, q) for q in range(3)]
    np.testing.assert_allclose(est, exact, atol=0.005)


def test_shot_estimator_unbiased():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    exact = p @ np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    rng = np.random.default_rng(5)
    ests = estimate_expectations_shots(np.tile(p, (10**4, 1)), 10, rng)
    stderr = ests.std(axis=0, ddof=1) / np.sqrt(len(ests))
    assert np.all(np.abs(ests.mean(axis=0) - exact) < 3 * stderr)


def test_shots_same_seed_same_result():
    p = np.array([0.25, 0.25, 0.4, 0.1])
    a = estimate_expectations_shots(p, 1000, np.random.default_rng(9))
    b = estimate_expectations_shots(p, 1000, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_density_backend_matches_state_backend(rng):
    for n in (1, 2, 3):
        psi = StateVector(random_state_amplitudes(rng, n))
        dm = DensityMatrix.from_state(psi)
        for gate in random_gates(rng, n, 10):
            psi = apply_gate(psi, gate)
            dm = evolve_density(dm, gate)
        np.testing.assert_allclose(dm.entries, np.outer(psi.amplitudes, psi.amplitudes.conj()), atol=1e-12)
        for q in range(n):
            assert abs(dm.expectation_z(q) - expectation_z(psi, q)) < 1e-10


def test_global_phase_insensitive(rng):
    amps = random_state_amplitudes(rng, 3)
    a, b = StateVector(amps), StateVector(np.exp(0.83j) * amps)
    np.testing.assert_allclose(measure_distribution(a), measure_distribution(b), atol=1e-12)
    for q in range(3):
        assert abs(expectation_z(a, q) - expectation_z(b, q)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 50), st.integers(0, 2**32 - 1))
def test_norm_conservation(n, count, seed):
    rng = np.random.default_rng(seed)
    state = run_circuit(random_gates(rng, n, count), n)
    assert abs(state.norm() - 1.0) < 1e-9
