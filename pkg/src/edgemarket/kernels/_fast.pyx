# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend: plain-loop float64 kernels, no BLAS, deterministic."""

import numpy as np

from libc.math cimport exp, sqrt, tanh

NAME = "compiled"


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def affine_forward(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    # inner loops run over the contiguous axis of w and out so they vectorize
    cdef Py_ssize_t n = x.shape[0], d_in = x.shape[1], d_out = w.shape[1]
    out_arr = np.empty((n, d_out), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double xv
    with nogil:
        for i in range(n):
            for j in range(d_out):
                out[i, j] = b[j]
            for k in range(d_in):
                xv = x[i, k]
                for j in range(d_out):
                    out[i, j] += xv * w[k, j]
    return out_arr


def affine_backward(double[:, ::1] x, double[:, ::1] w, double[:, ::1] dy):
    cdef Py_ssize_t n = x.shape[0], d_in = x.shape[1], d_out = w.shape[1]
    dx_arr = np.empty((n, d_in), dtype=np.float64)
    dw_arr = np.zeros((d_in, d_out), dtype=np.float64)
    db_arr = np.zeros(d_out, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, xv
    with nogil:
        for i in range(n):
            for j in range(d_out):
                db[j] += dy[i, j]
            for k in range(d_in):
                acc = 0.0
                for j in range(d_out):
                    acc += dy[i, j] * w[k, j]
                dx[i, k] = acc
            for k in range(d_in):
                xv = x[i, k]
                for j in range(d_out):
                    dw[k, j] += xv * dy[i, j]
    return dx_arr, dw_arr, db_arr


def act_forward(double[:, ::1] z, int code):
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double v
    if code < 0 or code > 3:
        raise ValueError(f"unknown activation code {code}")
    with nogil:
        for i in range(n):
            for j in range(d):
                v = z[i, j]
                if code == 0:
                    out[i, j] = v
                elif code == 1:
                    out[i, j] = tanh(v)
                elif code == 2:
                    out[i, j] = v if v > 0.0 else 0.0
                else:
                    out[i, j] = v * _sigmoid(v)
    return out_arr


def act_backward(double[:, ::1] z, int code, double[:, ::1] da):
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1]
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double v, t, s
    if code < 0 or code > 3:
        raise ValueError(f"unknown activation code {code}")
    with nogil:
        for i in range(n):
            for j in range(d):
                v = z[i, j]
                if code == 0:
                    out[i, j] = da[i, j]
                elif code == 1:
                    t = tanh(v)
                    out[i, j] = da[i, j] * (1.0 - t * t)
                elif code == 2:
                    out[i, j] = da[i, j] if v > 0.0 else 0.0
                else:
                    s = _sigmoid(v)
                    out[i, j] = da[i, j] * s * (1.0 + v * (1.0 - s))
    return out_arr


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps,
                double c1, double c2):
    """One Adam step on flat views; c1, c2 are the bias corrections 1-beta^t."""
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i
    cdef double gi
    with nogil:
        for i in range(n):
            gi = g[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
            p[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)
