"""NumPy fallback backend. See the package docstring for the contract."""

import numpy as np

NAME = "pure"


def affine_forward(x, w, b):
    return x @ w + b


def affine_backward(x, w, dy):
    dx = dy @ w.T
    dw = x.T @ dy
    db = dy.sum(axis=0)
    return dx, dw, db


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def act_forward(z, code):
    if code == 0:
        return z.copy()
    if code == 1:
        return np.tanh(z)
    if code == 2:
        return np.maximum(z, 0.0)
    if code == 3:
        return z * _sigmoid(z)
    raise ValueError(f"unknown activation code {code}")


def act_backward(z, code, da):
    if code == 0:
        return da.copy()
    if code == 1:
        t = np.tanh(z)
        return da * (1.0 - t * t)
    if code == 2:
        return da * (z > 0.0)
    if code == 3:
        s = _sigmoid(z)
        return da * s * (1.0 + z * (1.0 - s))
    raise ValueError(f"unknown activation code {code}")


def adam_update(p, g, m, v, lr, beta1, beta2, eps, c1, c2):
    """One Adam step on flat views; c1, c2 are the bias corrections 1-beta^t."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
