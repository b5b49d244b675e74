# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled truncated-series kernels; same contract as ``_kernels_py``."""
import numpy as np

from libc cimport math as cm


def mul(const double[::1] a, const double[::1] b, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] c = out
    cdef Py_ssize_t k, j
    cdef double s
    for k in range(n + 1):
        s = 0.0
        for j in range(k + 1):
            s += a[j] * b[k - j]
        c[k] = s
    return out


def div(const double[::1] a, const double[::1] b, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] q = out
    cdef Py_ssize_t k, j
    cdef double s, b0 = b[0]
    for k in range(n + 1):
        s = a[k]
        for j in range(1, k + 1):
            s -= b[j] * q[k - j]
        q[k] = s / b0
    return out


def exp(const double[::1] a, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] e = out
    cdef Py_ssize_t k, j
    cdef double s
    e[0] = cm.exp(a[0])
    for k in range(1, n + 1):
        s = 0.0
        for j in range(1, k + 1):
            s += j * a[j] * e[k - j]
        e[k] = s / k
    return out


def sincos(const double[::1] a, Py_ssize_t n):
    so = np.empty(n + 1)
    co = np.empty(n + 1)
    cdef double[::1] s = so
    cdef double[::1] c = co
    cdef Py_ssize_t k, j
    cdef double ss, cc, ja
    s[0] = cm.sin(a[0])
    c[0] = cm.cos(a[0])
    for k in range(1, n + 1):
        ss = 0.0
        cc = 0.0
        for j in range(1, k + 1):
            ja = j * a[j]
            ss += ja * c[k - j]
            cc += ja * s[k - j]
        s[k] = ss / k
        c[k] = -cc / k
    return so, co


def sqrt(const double[::1] a, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] r = out
    cdef Py_ssize_t k, j
    cdef double s
    r[0] = cm.sqrt(a[0])
    for k in range(1, n + 1):
        s = a[k]
        for j in range(1, k):
            s -= r[j] * r[k - j]
        r[k] = s / (2.0 * r[0])
    return out


def power(const double[::1] a, double p, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] b = out
    cdef Py_ssize_t k, j
    cdef double s, a0 = a[0]
    b[0] = cm.pow(a0, p)
    for k in range(1, n + 1):
        s = 0.0
        for j in range(1, k + 1):
            s += (p * j - (k - j)) * a[j] * b[k - j]
        b[k] = s / (k * a0)
    return out


def log(const double[::1] a, Py_ssize_t n):
    out = np.empty(n + 1)
    cdef double[::1] l = out
    cdef Py_ssize_t k, j
    cdef double s, a0 = a[0]
    l[0] = cm.log(a0)
    for k in range(1, n + 1):
        s = 0.0
        for j in range(1, k):
            s += j * l[j] * a[k - j]
        l[k] = (a[k] - s / k) / a0
    return out


def horner(const double[::1] c, double x):
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[k]
    return acc


def horner2d(const double[:, ::1] c, double x):
    out = np.zeros(c.shape[0])
    cdef double[::1] acc = out
    cdef Py_ssize_t i, k
    cdef double v
    for i in range(c.shape[0]):
        v = 0.0
        for k in range(c.shape[1] - 1, -1, -1):
            v = v * x + c[i, k]
        acc[i] = v
    return out
