"""Pure numpy reference implementations of the truncated-series kernels.

Every function takes coefficient arrays of length >= n + 1 and returns a new
array of exactly n + 1 coefficients.
"""
import math

import numpy as np


def mul(a, b, n):
    return np.convolve(a[: n + 1], b[: n + 1])[: n + 1]


def div(a, b, n):
    b0 = b[0]
    q = np.zeros(n + 1)
    for k in range(n + 1):
        acc = np.dot(b[1 : k + 1], q[k - 1 :: -1]) if k else 0.0
        q[k] = (a[k] - acc) / b0
    return q


def exp(a, n):
    e = np.zeros(n + 1)
    e[0] = math.exp(a[0])
    ja = np.arange(n + 1) * a[: n + 1]
    for k in range(1, n + 1):
        e[k] = np.dot(ja[1 : k + 1], e[k - 1 :: -1]) / k
    return e


def sincos(a, n):
    s = np.zeros(n + 1)
    c = np.zeros(n + 1)
    s[0] = math.sin(a[0])
    c[0] = math.cos(a[0])
    ja = np.arange(n + 1) * a[: n + 1]
    for k in range(1, n + 1):
        s[k] = np.dot(ja[1 : k + 1], c[k - 1 :: -1]) / k
        c[k] = -np.dot(ja[1 : k + 1], s[k - 1 :: -1]) / k
    return s, c


def sqrt(a, n):
    r = np.zeros(n + 1)
    r[0] = math.sqrt(a[0])
    for k in range(1, n + 1):
        acc = np.dot(r[1:k], r[k - 1 : 0 : -1]) if k > 1 else 0.0
        r[k] = (a[k] - acc) / (2.0 * r[0])
    return r


def power(a, p, n):
    b = np.zeros(n + 1)
    a0 = a[0]
    b[0] = a0 ** p
    for k in range(1, n + 1):
        j = np.arange(1, k + 1)
        b[k] = np.dot((p * j - (k - j)) * a[1 : k + 1], b[k - 1 :: -1]) / (k * a0)
    return b


def log(a, n):
    out = np.zeros(n + 1)
    a0 = a[0]
    out[0] = math.log(a0)
    for k in range(1, n + 1):
        j = np.arange(1, k)
        acc = np.dot(j * out[1:k], a[k - 1 : 0 : -1]) / k if k > 1 else 0.0
        out[k] = (a[k] - acc) / a0
    return out


def horner(c, x):
    acc = 0.0
    for ck in c[::-1]:
        acc = acc * x + ck
    return float(acc)


def horner2d(c, x):
    acc = np.zeros(c.shape[0])
    for k in range(c.shape[1] - 1, -1, -1):
        acc = acc * x + c[:, k]
    return acc
