"""Compare the compiled kernel backend against the pure NumPy fallback.

Times the primitive kernels on solver-sized shapes and a realistic
end-to-end training step (forward, backward, Adam) through the dense-net
layer. Run with ``python3 benchmarks/bench_kernels.py``; pass ``--repeat``
to change the sample count.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from edgemarket import kernels
from edgemarket.kernels import pure

try:
    from edgemarket.kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, repeat, inner=10):
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - started) / inner)
    return best


def bench_primitives(backend, repeat):
    rng = np.random.default_rng(0)
    # shapes matched to the critic hot path: batch 256 through (64, 64)
    x = np.ascontiguousarray(rng.normal(size=(256, 64)))
    w = np.ascontiguousarray(rng.normal(size=(64, 64)))
    b = np.ascontiguousarray(rng.normal(size=64))
    z = np.ascontiguousarray(rng.normal(size=(256, 64)))
    da = np.ascontiguousarray(rng.normal(size=(256, 64)))
    dy = np.ascontiguousarray(rng.normal(size=(256, 64)))
    p = np.ascontiguousarray(rng.normal(size=64 * 64))
    g = np.ascontiguousarray(rng.normal(size=64 * 64))
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    return {
        "affine_forward": timeit(
            lambda: backend.affine_forward(x, w, b), repeat),
        "affine_backward": timeit(
            lambda: backend.affine_backward(x, w, dy), repeat),
        "act_forward(silu)": timeit(
            lambda: backend.act_forward(z, 3), repeat),
        "act_backward(silu)": timeit(
            lambda: backend.act_backward(z, 3, da), repeat),
        "adam_update": timeit(
            lambda: backend.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8,
                                        0.1, 0.001), repeat),
    }


def bench_training_step(repeat):
    """One critic-sized regression step through the nn layer per backend."""
    from edgemarket import nn

    def build():
        rng = np.random.default_rng(1)
        net = nn.init_dense((12, 64, 64, 1), ("silu", "silu", "identity"),
                            rng)
        x = rng.normal(size=(256, 12))
        y = rng.normal(size=(256, 1))
        opt = nn.adam_init(net.parameters(), lr=1e-3)
        return net, x, y, opt

    net, x, y, opt = build()

    def step():
        pred, cache = nn.forward_cached(net, x)
        grads, _ = nn.backward(net, x, 2.0 * (pred - y) / len(y), cache)
        nn.adam_step(opt, net.parameters(), nn.flatten_grads(grads))

    return timeit(step, repeat, inner=5)


def step_time_subprocess(repeat, pure):
    """Time the training step in a child so the backend can differ."""
    env = dict(os.environ)
    env.pop("EDGEMARKET_PURE", None)
    if pure:
        env["EDGEMARKET_PURE"] = "1"
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--step-only",
         "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=7,
                        help="timing samples per kernel (best is reported)")
    parser.add_argument("--step-only", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.step_only:
        print(kernels.BACKEND, bench_training_step(args.repeat))
        return

    print(f"active backend for the nn layer: {kernels.BACKEND}")
    backends = {"pure": pure}
    if _fast is not None:
        backends["compiled"] = _fast
    else:
        print("compiled backend not built; timing the fallback only")

    results = {name: bench_primitives(be, args.repeat)
               for name, be in backends.items()}
    names = list(results["pure"])
    width = max(len(n) for n in names)
    header = f"{'kernel'.ljust(width)}  " + "  ".join(
        f"{name:>12}" for name in results)
    if len(results) == 2:
        header += f"  {'speedup':>8}"
    print()
    print(header)
    for kernel_name in names:
        row = f"{kernel_name.ljust(width)}  " + "  ".join(
            f"{results[name][kernel_name] * 1e6:>10.1f}us"
            for name in results)
        if len(results) == 2:
            ratio = results["pure"][kernel_name] / \
                results["compiled"][kernel_name]
            row += f"  {ratio:>7.2f}x"
        print(row)

    print()
    pure_name, pure_step = step_time_subprocess(args.repeat, pure=True)
    assert pure_name == "pure"
    print(f"full training step, pure backend:     {pure_step * 1e3:.3f} ms")
    if _fast is not None:
        fast_name, fast_step = step_time_subprocess(args.repeat, pure=False)
        assert fast_name == "compiled"
        print(f"full training step, compiled backend: "
              f"{fast_step * 1e3:.3f} ms  ({pure_step / fast_step:.2f}x)")


if __name__ == "__main__":
    main()
