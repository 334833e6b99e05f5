"""Pure numpy implementation of the batch circuit kernels.

Mirrors ``styleqgan._kernels`` function for function; used when the compiled
extension is unavailable and as a cross-check in the test-suite.
"""
import numpy as np

KIND_RY, KIND_RZ, KIND_CRY = 0, 1, 2


def _matrices(kind, theta):
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    if kind == KIND_RZ:
        m[:, 0, 0] = c - 1j * s
        m[:, 1, 1] = c + 1j * s
    else:
        m[:, 0, 0] = c
        m[:, 0, 1] = -s
        m[:, 1, 0] = s
        m[:, 1, 1] = c
    return m


def _derivatives(kind, theta):
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    if kind == KIND_RZ:
        m[:, 0, 0] = -0.5 * s - 0.5j * c
        m[:, 1, 1] = -0.5 * s + 0.5j * c
    else:
        m[:, 0, 0] = -0.5 * s
        m[:, 0, 1] = -0.5 * c
        m[:, 1, 0] = 0.5 * c
        m[:, 1, 1] = -0.5 * s
    return m


def _apply_axis(psi, mats, axis):
    # psi: (B, 2, ..., 2); mats: (B, 2, 2); axis counts the batch axis
    moved = np.moveaxis(psi, axis, 1)
    shape = moved.shape
    out = mats @ moved.reshape(shape[0], 2, -1)
    return np.moveaxis(out.reshape(shape), 1, axis)


def _apply(psi, mats, target, control, zero_inactive=False):
    n = psi.ndim - 1
    if control < 0:
        return _apply_axis(psi, mats, target + 1)
    out = np.zeros_like(psi) if zero_inactive else psi.copy()
    active = [slice(None)] * (n + 1)
    active[control + 1] = 1
    active = tuple(active)
    axis = target + 1 - (1 if target > control else 0)
    out[active] = _apply_axis(psi[active], mats, axis)
    return out


def _z_signs(n_qubits):
    idx = np.arange(2**n_qubits)
    bits = (idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1
    return 1.0 - 2.0 * bits


def _run(kinds, targets, controls, n_qubits, angles):
    batch = angles.shape[0]
    psi = np.zeros((batch,) + (2,) * n_qubits, dtype=np.complex128)
    psi[(slice(None),) + (0,) * n_qubits] = 1.0
    for g in range(len(kinds)):
        psi = _apply(psi, _matrices(kinds[g], angles[:, g]), targets[g], controls[g])
    return psi


def _program(kinds, targets, controls, angles):
    return (
        np.asarray(kinds, dtype=np.int8),
        np.asarray(targets, dtype=np.int_),
        np.asarray(controls, dtype=np.int_),
        np.atleast_2d(np.asarray(angles, dtype=np.float64)),
    )


def final_states(kinds, targets, controls, n_qubits, angles):
    k, t, c, a = _program(kinds, targets, controls, angles)
    return _run(k, t, c, n_qubits, a).reshape(a.shape[0], 2**n_qubits)


def expectations(kinds, targets, controls, n_qubits, angles):
    probs = np.abs(final_states(kinds, targets, controls, n_qubits, angles)) ** 2
    return probs @ _z_signs(n_qubits)


def angle_vjp(kinds, targets, controls, n_qubits, angles, cotangent):
    k, t, c, a = _program(kinds, targets, controls, angles)
    cot = np.asarray(cotangent, dtype=np.float64)
    if cot.shape != (a.shape[0], n_qubits):
        raise ValueError("cotangent must have shape (batch, n_qubits)")
    batch = a.shape[0]
    shape = (batch,) + (2,) * n_qubits
    psi = _run(k, t, c, n_qubits, a)
    flat = psi.reshape(batch, -1)
    signs = _z_signs(n_qubits)
    exps = (np.abs(flat) ** 2) @ signs
    lam = ((cot @ signs.T) * flat).reshape(shape)
    grad = np.empty((batch, len(k)))
    for g in range(len(k) - 1, -1, -1):
        inverse = _matrices(k[g], -a[:, g])
        psi = _apply(psi, inverse, t[g], c[g])
        mu = _apply(psi, _derivatives(k[g], a[:, g]), t[g], c[g], zero_inactive=True)
        grad[:, g] = 2.0 * np.real(np.sum(np.conj(lam) * mu, axis=tuple(range(1, n_qubits + 1))))
        lam = _apply(lam, inverse, t[g], c[g])
    return exps, grad
