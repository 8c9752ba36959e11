"""Minimal dense-network substrate: forward, exact reverse-mode gradients, Adam.

Everything is float64 with explicit 2-D batch shapes; there is no implicit
broadcasting, and shape mismatches raise immediately. The elementwise and
matrix kernels are delegated to :mod:`edgemarket.kernels`, which selects the
compiled backend when available.

Parameter initialization is uniform fan-in scaling,
``U[-1/sqrt(fan_in), +1/sqrt(fan_in)]`` for both weights and biases, drawn
from a caller-supplied :class:`numpy.random.Generator`.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

ACTIVATIONS = {"identity": 0, "tanh": 1, "relu": 2, "silu": 3}

PARAMS_FORMAT_VERSION = 1


class ShapeError(ValueError):
    """Input or gradient does not match the network's declared shapes."""


@dataclass
class DenseNet:
    """Fully-connected net: affine layers interleaved with pointwise activations.

    ``widths`` has one more entry than ``activations``; layer ``i`` maps
    ``widths[i] -> widths[i+1]`` and applies ``activations[i]``.
    """

    widths: tuple
    activations: tuple
    weights: list
    biases: list

    @property
    def n_layers(self):
        return len(self.weights)

    def parameters(self):
        """Flat list of parameter arrays, weights and biases interleaved."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def init_dense(widths, activations, rng):
    """Build a seeded DenseNet; activation names must be in ACTIVATIONS."""
    widths = tuple(int(w) for w in widths)
    activations = tuple(activations)
    if len(activations) != len(widths) - 1:
        raise ValueError("need exactly one activation per layer")
    for name in activations:
        if name not in ACTIVATIONS:
            raise ValueError(f"unknown activation {name!r}")
    if any(w <= 0 for w in widths):
        raise ValueError("layer widths must be positive")
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(widths, activations, weights, biases)


def _check_input(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.widths[0]:
        raise ShapeError(
            f"input shape {x.shape} incompatible with first width {net.widths[0]}"
        )
    return np.ascontiguousarray(x)


def forward(net, x):
    """Deterministic affine+activation composition; x is (batch, widths[0])."""
    a = _check_input(net, x)
    for w, b, name in zip(net.weights, net.biases, net.activations):
        z = kernels.affine_forward(a, w, b)
        a = kernels.act_forward(z, ACTIVATIONS[name])
    return a


def forward_cached(net, x):
    """Forward pass keeping pre-activations for a later backward pass."""
    a = _check_input(net, x)
    inputs, preacts = [], []
    for w, b, name in zip(net.weights, net.biases, net.activations):
        inputs.append(a)
        z = kernels.affine_forward(a, w, b)
        preacts.append(z)
        a = kernels.act_forward(z, ACTIVATIONS[name])
    return a, (inputs, preacts)


def backward(net, x, upstream, cache=None):
    """Exact reverse-mode gradients of ``forward``.

    Returns ``(grads, dx)`` where ``grads`` is a list of ``(dw, db)`` per
    layer and ``dx`` is the gradient with respect to the input batch.
    """
    if cache is None:
        _, cache = forward_cached(net, x)
    inputs, preacts = cache
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.ndim != 2 or upstream.shape != (inputs[0].shape[0], net.widths[-1]):
        raise ShapeError(
            f"upstream shape {upstream.shape} incompatible with output width "
            f"{net.widths[-1]}"
        )
    da = np.ascontiguousarray(upstream)
    grads = [None] * net.n_layers
    for i in range(net.n_layers - 1, -1, -1):
        code = ACTIVATIONS[net.activations[i]]
        dz = kernels.act_backward(preacts[i], code, da)
        da, dw, db = kernels.affine_backward(inputs[i], net.weights[i], dz)
        grads[i] = (dw, db)
    return grads, da


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter list."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_init(params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    state.m = [np.zeros_like(p) for p in params]
    state.v = [np.zeros_like(p) for p in params]
    return state


def adam_step(state, params, grads):
    """In-place adaptive-moment update; aborts loudly on non-finite gradients."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ShapeError("parameter/gradient lists do not match optimizer state")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient passed to adam_step")
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        kernels.adam_update(
            p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            m.reshape(-1), v.reshape(-1),
            state.lr, state.beta1, state.beta2, state.eps, c1, c2,
        )


def flatten_grads(net_grads):
    """[(dw, db), ...] -> [dw, db, dw, db, ...] matching net.parameters()."""
    out = []
    for dw, db in net_grads:
        out.append(dw)
        out.append(db)
    return out


def save_params(net, path):
    """Persist parameters as .npz: format_version, widths, activations, w{i}/b{i}."""
    payload = {
        "format_version": np.array(PARAMS_FORMAT_VERSION),
        "widths": np.array(net.widths, dtype=np.int64),
        "activations": np.array(net.activations),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    np.savez(path, **payload)


def load_params(path):
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != PARAMS_FORMAT_VERSION:
            raise ValueError(f"unsupported parameter format version {version}")
        widths = tuple(int(w) for w in data["widths"])
        activations = tuple(str(a) for a in data["activations"])
        weights = [np.array(data[f"w{i}"]) for i in range(len(widths) - 1)]
        biases = [np.array(data[f"b{i}"]) for i in range(len(widths) - 1)]
    return DenseNet(widths, activations, weights, biases)


def numeric_gradients(loss_fn, arrays, h=1e-4):
    """Central finite differences of ``loss_fn()`` w.r.t. each array, in place."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric):
    """Max |a-n| over arrays, scaled by the largest gradient magnitude seen."""
    scale = 0.0
    diff = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(scale, float(np.max(np.abs(a))), float(np.max(np.abs(n))))
        diff = max(diff, float(np.max(np.abs(a - n))))
    return diff / max(scale, 1e-12)
