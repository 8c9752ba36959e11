"""Numeric kernels behind the dense-net hot path.

Two interchangeable backends provide the same functions:

``_fast``
    Cython extension compiled at install time. Plain loops over C-contiguous
    float64 buffers; fully deterministic.
``pure``
    NumPy fallback, used when the extension is missing or when the
    environment variable ``EDGEMARKET_PURE`` is set to a non-empty value.

Both backends expose:

- ``affine_forward(x, w, b)``          -> ``x @ w + b``
- ``affine_backward(x, w, dy)``        -> ``(dx, dw, db)``
- ``act_forward(z, code)``             -> elementwise activation
- ``act_backward(z, code, da)``        -> upstream grad through activation
- ``adam_update(p, g, m, v, ...)``     -> in-place adaptive-moment step

Activation codes: 0 identity, 1 tanh, 2 relu, 3 silu.

``benchmarks/bench_kernels.py`` compares the two backends.
"""

import os

from . import pure

if os.environ.get("EDGEMARKET_PURE"):
    _impl = pure
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

BACKEND = _impl.NAME

affine_forward = _impl.affine_forward
affine_backward = _impl.affine_backward
act_forward = _impl.act_forward
act_backward = _impl.act_backward
adam_update = _impl.adam_update

IDENTITY, TANH, RELU, SILU = 0, 1, 2, 3
