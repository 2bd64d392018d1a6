# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the dense-network hot loops.

Drop-in replacement for the numpy reference backend.  Narrow layers (the
low-capacity models this project sweeps) run fused typed loops, which beat
BLAS dispatch overhead; wide layers fall back to BLAS matmuls, which win
once there is real arithmetic to amortize.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

NAME = "native"

# weight matrices with fewer entries than this run the fused loops
DEF SMALL_WEIGHT_ENTRIES = 1536


cdef void _affine(const double[:, ::1] h, const double[:, ::1] w,
                  const double[::1] b, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n_rows = h.shape[0], n_in = h.shape[1], n_out = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double hik
    for i in range(n_rows):
        for j in range(n_out):
            out[i, j] = b[j]
        for k in range(n_in):
            hik = h[i, k]
            if hik != 0.0:
                for j in range(n_out):
                    out[i, j] += hik * w[k, j]


def mlp_forward(object x, list weights, list biases, object masks, double inv_keep):
    """See the reference backend for the contract."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t l, i, j
    cdef list acts = [x]
    cdef list preacts = []
    cdef cnp.ndarray h = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray w
    cdef cnp.ndarray z, a
    cdef double[:, ::1] zv, av, mv
    cdef bint dropout
    for l in range(n_layers):
        w = weights[l]
        if w.shape[0] * w.shape[1] >= SMALL_WEIGHT_ENTRIES:
            z = np.matmul(h, w)
            z += biases[l]
        else:
            z = np.empty((h.shape[0], w.shape[1]))
            _affine(h, w, biases[l], z)
        if l == n_layers - 1:
            return z, acts, preacts
        preacts.append(z)
        a = np.empty_like(z)
        zv = z
        av = a
        dropout = masks is not None and masks[l] is not None
        if dropout:
            mv = masks[l]
            for i in range(zv.shape[0]):
                for j in range(zv.shape[1]):
                    av[i, j] = (zv[i, j] if zv[i, j] > 0.0 else 0.0) * mv[i, j] * inv_keep
        else:
            for i in range(zv.shape[0]):
                for j in range(zv.shape[1]):
                    av[i, j] = zv[i, j] if zv[i, j] > 0.0 else 0.0
        acts.append(a)
        h = a
    raise AssertionError("unreachable")


cdef void _grad_wb(const double[:, ::1] a, const double[:, ::1] d,
                   double[:, ::1] dw, double[::1] db) noexcept nogil:
    cdef Py_ssize_t n_rows = a.shape[0], n_in = a.shape[1], n_out = d.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double aik
    for k in range(n_in):
        for j in range(n_out):
            dw[k, j] = 0.0
    for j in range(n_out):
        db[j] = 0.0
    for i in range(n_rows):
        for j in range(n_out):
            db[j] += d[i, j]
        for k in range(n_in):
            aik = a[i, k]
            if aik != 0.0:
                for j in range(n_out):
                    dw[k, j] += aik * d[i, j]


cdef void _grad_input(const double[:, ::1] d, const double[:, ::1] w,
                      double[:, ::1] dprev) noexcept nogil:
    cdef Py_ssize_t n_rows = d.shape[0], n_out = d.shape[1], n_in = w.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n_rows):
        for k in range(n_in):
            s = 0.0
            for j in range(n_out):
                s += d[i, j] * w[k, j]
            dprev[i, k] = s


def mlp_backward(list weights, list acts, list preacts, object masks,
                 double inv_keep, object delta):
    """See the reference backend for the contract."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t l, i, k
    cdef list d_weights = [None] * n_layers
    cdef list d_biases = [None] * n_layers
    cdef cnp.ndarray d = np.ascontiguousarray(delta, dtype=np.float64)
    cdef cnp.ndarray w, act
    cdef cnp.ndarray dw, db, dprev
    cdef double[:, ::1] dv, pv, mv
    cdef bint dropout, big
    for l in range(n_layers - 1, -1, -1):
        w = weights[l]
        act = acts[l]
        big = w.shape[0] * w.shape[1] >= SMALL_WEIGHT_ENTRIES
        if big:
            d_weights[l] = np.matmul(act.T, d)
            d_biases[l] = d.sum(axis=0)
        else:
            dw = np.empty_like(w)
            db = np.empty(w.shape[1])
            _grad_wb(act, d, dw, db)
            d_weights[l] = dw
            d_biases[l] = db
        if l > 0:
            if big:
                dprev = np.matmul(d, w.T)
            else:
                dprev = np.empty((d.shape[0], w.shape[0]))
                _grad_input(d, w, dprev)
            dv = dprev
            pv = preacts[l - 1]
            dropout = masks is not None and masks[l - 1] is not None
            if dropout:
                mv = masks[l - 1]
                for i in range(dv.shape[0]):
                    for k in range(dv.shape[1]):
                        if pv[i, k] > 0.0:
                            dv[i, k] = dv[i, k] * mv[i, k] * inv_keep
                        else:
                            dv[i, k] = 0.0
            else:
                for i in range(dv.shape[0]):
                    for k in range(dv.shape[1]):
                        if pv[i, k] <= 0.0:
                            dv[i, k] = 0.0
            d = dprev
    return d_weights, d_biases


def adam_step(list params, list grads, list m, list v, long t,
              double lr, double beta1, double beta2, double eps):
    """In-place bias-corrected Adam update. `t` is the post-increment step index."""
    cdef double step_scale = lr / (1.0 - beta1**t)
    cdef double inv_c2 = 1.0 / (1.0 - beta2**t)
    cdef Py_ssize_t idx, i, n
    cdef double mi, vi
    cdef double[::1] pv, gv, mv, vv
    for idx in range(len(params)):
        pv = (<cnp.ndarray>params[idx]).ravel()
        gv = (<cnp.ndarray>grads[idx]).ravel()
        mv = (<cnp.ndarray>m[idx]).ravel()
        vv = (<cnp.ndarray>v[idx]).ravel()
        n = pv.shape[0]
        with nogil:
            for i in range(n):
                mi = beta1 * mv[i] + (1.0 - beta1) * gv[i]
                vi = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i]
                mv[i] = mi
                vv[i] = vi
                pv[i] -= step_scale * mi / (sqrt(vi * inv_c2) + eps)


def rmsprop_step(list params, list grads, list acc,
                 double lr, double decay, double eps):
    """In-place RMSProp update with squared-gradient accumulator `acc`."""
    cdef Py_ssize_t idx, i, n
    cdef double[::1] pv, gv, av
    for idx in range(len(params)):
        pv = (<cnp.ndarray>params[idx]).ravel()
        gv = (<cnp.ndarray>grads[idx]).ravel()
        av = (<cnp.ndarray>acc[idx]).ravel()
        n = pv.shape[0]
        with nogil:
            for i in range(n):
                av[i] = decay * av[i] + (1.0 - decay) * gv[i] * gv[i]
                pv[i] -= lr * gv[i] / (sqrt(av[i]) + eps)
