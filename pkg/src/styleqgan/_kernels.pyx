# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch kernels for RY/RZ/CRY programs.

Same contract as ``styleqgan._fallback``. A program is three parallel integer
arrays (kind, target, control) with ``control = -1`` for single-qubit gates;
kind codes are 0 = RY, 1 = RZ, 2 = CRY. Qubit ``q`` is bit ``n - 1 - q`` of
the basis index.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

DEF KIND_RY = 0
DEF KIND_RZ = 1
DEF KIND_CRY = 2


cdef inline void _gate_matrix(int kind, double theta, double* m) noexcept nogil:
    # m = [ar, ai, br, bi, cr, ci, dr, di] for [[a, b], [c, d]]
    cdef double c = cos(0.5 * theta)
    cdef double s = sin(0.5 * theta)
    if kind == KIND_RZ:
        m[0] = c; m[1] = -s; m[2] = 0.0; m[3] = 0.0
        m[4] = 0.0; m[5] = 0.0; m[6] = c; m[7] = s
    else:
        m[0] = c; m[1] = 0.0; m[2] = -s; m[3] = 0.0
        m[4] = s; m[5] = 0.0; m[6] = c; m[7] = 0.0


cdef inline void _gate_derivative(int kind, double theta, double* m) noexcept nogil:
    cdef double c = cos(0.5 * theta)
    cdef double s = sin(0.5 * theta)
    if kind == KIND_RZ:
        m[0] = -0.5 * s; m[1] = -0.5 * c; m[2] = 0.0; m[3] = 0.0
        m[4] = 0.0; m[5] = 0.0; m[6] = -0.5 * s; m[7] = 0.5 * c
    else:
        m[0] = -0.5 * s; m[1] = 0.0; m[2] = -0.5 * c; m[3] = 0.0
        m[4] = 0.5 * c; m[5] = 0.0; m[6] = -0.5 * s; m[7] = 0.0


cdef inline void _apply(double* re, double* im, int n, int target, int control,
                        double* m) noexcept nogil:
    cdef int dim = 1 << n
    cdef int tbit = 1 << (n - 1 - target)
    cdef int cbit = 0
    cdef int i, j
    cdef double x0r, x0i, x1r, x1i
    if control >= 0:
        cbit = 1 << (n - 1 - control)
    for i in range(dim):
        if i & tbit:
            continue
        if cbit and not (i & cbit):
            continue
        j = i | tbit
        x0r = re[i]; x0i = im[i]; x1r = re[j]; x1i = im[j]
        re[i] = m[0] * x0r - m[1] * x0i + m[2] * x1r - m[3] * x1i
        im[i] = m[0] * x0i + m[1] * x0r + m[2] * x1i + m[3] * x1r
        re[j] = m[4] * x0r - m[5] * x0i + m[6] * x1r - m[7] * x1i
        im[j] = m[4] * x0i + m[5] * x0r + m[6] * x1i + m[7] * x1r


cdef inline void _apply_derivative(double* re, double* im, double* out_re,
                                   double* out_im, int n, int target,
                                   int control, double* m) noexcept nogil:
    # out = dU psi; amplitudes outside the control subspace have zero derivative
    cdef int dim = 1 << n
    cdef int tbit = 1 << (n - 1 - target)
    cdef int cbit = 0
    cdef int i, j
    cdef double x0r, x0i, x1r, x1i
    if control >= 0:
        cbit = 1 << (n - 1 - control)
    for i in range(dim):
        out_re[i] = 0.0
        out_im[i] = 0.0
    for i in range(dim):
        if i & tbit:
            continue
        if cbit and not (i & cbit):
            continue
        j = i | tbit
        x0r = re[i]; x0i = im[i]; x1r = re[j]; x1i = im[j]
        out_re[i] = m[0] * x0r - m[1] * x0i + m[2] * x1r - m[3] * x1i
        out_im[i] = m[0] * x0i + m[1] * x0r + m[2] * x1i + m[3] * x1r
        out_re[j] = m[4] * x0r - m[5] * x0i + m[6] * x1r - m[7] * x1i
        out_im[j] = m[4] * x0i + m[5] * x0r + m[6] * x1i + m[7] * x1r


cdef void _run(const signed char[:] kinds, const long[:] targets,
               const long[:] controls, int n, const double[:] angles,
               double* re, double* im) noexcept nogil:
    cdef int dim = 1 << n
    cdef int g, i
    cdef double m[8]
    for i in range(dim):
        re[i] = 0.0
        im[i] = 0.0
    re[0] = 1.0
    for g in range(kinds.shape[0]):
        _gate_matrix(kinds[g], angles[g], m)
        _apply(re, im, n, <int>targets[g], <int>controls[g], m)


cdef inline void _z_expectations(double* re, double* im, int n, double* out) noexcept nogil:
    cdef int dim = 1 << n
    cdef int i, q
    cdef double p
    for q in range(n):
        out[q] = 0.0
    for i in range(dim):
        p = re[i] * re[i] + im[i] * im[i]
        for q in range(n):
            if (i >> (n - 1 - q)) & 1:
                out[q] -= p
            else:
                out[q] += p


def _as_program(kinds, targets, controls, angles):
    return (
        np.ascontiguousarray(kinds, dtype=np.int8),
        np.ascontiguousarray(targets, dtype=np.int_),
        np.ascontiguousarray(controls, dtype=np.int_),
        np.ascontiguousarray(angles, dtype=np.float64),
    )


def final_states(kinds, targets, controls, int n_qubits, angles):
    """Output states for a batch of angle rows, shape (batch, 2**n)."""
    k, t, c, a = _as_program(kinds, targets, controls, angles)
    cdef const signed char[:] kv = k
    cdef const long[:] tv = t
    cdef const long[:] cv = c
    cdef const double[:, :] av = a
    cdef int dim = 1 << n_qubits
    cdef Py_ssize_t b, i
    re_arr = np.empty(dim)
    im_arr = np.empty(dim)
    cdef double[:] re = re_arr
    cdef double[:] im = im_arr
    out = np.empty((a.shape[0], dim), dtype=np.complex128)
    cdef double complex[:, :] ov = out
    for b in range(a.shape[0]):
        _run(kv, tv, cv, n_qubits, av[b], &re[0], &im[0])
        for i in range(dim):
            ov[b, i] = re[i] + 1j * im[i]
    return out


def expectations(kinds, targets, controls, int n_qubits, angles):
    """Pauli-Z expectation of every qubit, shape (batch, n)."""
    k, t, c, a = _as_program(kinds, targets, controls, angles)
    cdef const signed char[:] kv = k
    cdef const long[:] tv = t
    cdef const long[:] cv = c
    cdef const double[:, :] av = a
    cdef int dim = 1 << n_qubits
    cdef Py_ssize_t b
    re_arr = np.empty(dim)
    im_arr = np.empty(dim)
    cdef double[:] re = re_arr
    cdef double[:] im = im_arr
    out = np.empty((a.shape[0], n_qubits))
    cdef double[:, :] ov = out
    with nogil:
        for b in range(av.shape[0]):
            _run(kv, tv, cv, n_qubits, av[b], &re[0], &im[0])
            _z_expectations(&re[0], &im[0], n_qubits, &ov[b, 0])
    return out


def angle_vjp(kinds, targets, controls, int n_qubits, angles, cotangent):
    """Expectations and the angle gradient of ``sum(cotangent * expectations)``.

    Adjoint sweep: one forward pass, then the state and the co-state are
    un-computed gate by gate. Returns ``(expectations, grad)`` with shapes
    (batch, n) and (batch, n_gates).
    """
    k, t, c, a = _as_program(kinds, targets, controls, angles)
    cot = np.ascontiguousarray(cotangent, dtype=np.float64)
    if cot.shape != (a.shape[0], n_qubits):
        raise ValueError("cotangent must have shape (batch, n_qubits)")
    cdef const signed char[:] kv = k
    cdef const long[:] tv = t
    cdef const long[:] cv = c
    cdef const double[:, :] av = a
    cdef const double[:, :] cotv = cot
    cdef int dim = 1 << n_qubits
    cdef int n_gates = k.shape[0]
    cdef Py_ssize_t b, i, q
    cdef int g
    cdef double w, acc
    cdef double m[8]
    buf = np.empty((6, dim))
    cdef double[:, :] bv = buf
    cdef double* re = &bv[0, 0]
    cdef double* im = &bv[1, 0]
    cdef double* lre = &bv[2, 0]
    cdef double* lim = &bv[3, 0]
    cdef double* mre = &bv[4, 0]
    cdef double* mim = &bv[5, 0]
    exps = np.empty((a.shape[0], n_qubits))
    grad = np.empty((a.shape[0], n_gates))
    cdef double[:, :] ev = exps
    cdef double[:, :] gv = grad
    with nogil:
        for b in range(av.shape[0]):
            _run(kv, tv, cv, n_qubits, av[b], re, im)
            _z_expectations(re, im, n_qubits, &ev[b, 0])
            # co-state: O psi with O = sum_q cot[q] Z_q (diagonal)
            for i in range(dim):
                w = 0.0
                for q in range(n_qubits):
                    if (i >> (n_qubits - 1 - q)) & 1:
                        w -= cotv[b, q]
                    else:
                        w += cotv[b, q]
                lre[i] = w * re[i]
                lim[i] = w * im[i]
            for g in range(n_gates - 1, -1, -1):
                _gate_matrix(kv[g], -av[b, g], m)
                _apply(re, im, n_qubits, <int>tv[g], <int>cv[g], m)
                _gate_derivative(kv[g], av[b, g], m)
                _apply_derivative(re, im, mre, mim, n_qubits, <int>tv[g],
                                  <int>cv[g], m)
                acc = 0.0
                for i in range(dim):
                    acc += lre[i] * mre[i] + lim[i] * mim[i]
                gv[b, g] = 2.0 * acc
                _gate_matrix(kv[g], -av[b, g], m)
                _apply(lre, lim, n_qubits, <int>tv[g], <int>cv[g], m)
    return exps, grad
