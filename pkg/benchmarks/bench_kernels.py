"""Benchmark the numba kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeats 5]

Covers the hot paths: conv patch gather/scatter (im2col/col2im), image warps
used by augmentation, polyline rasterization, and an end-to-end conv2d
forward+backward through the autodiff layer under both backends.
"""

import argparse
import time

import numpy as np

from sketchrl.neural.backend import get_kernels


def timeit(fn, repeats):
    fn()  # warmup (includes any JIT compilation)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(k, repeats):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(128, 32, 32, 16)).astype(np.float32)
    col = k.im2col(x, 4, 4, 2, 1)
    img = rng.uniform(0, 1, size=(64, 64, 3)).astype(np.float32)
    m = np.array([[0.95, 0.05, 1.0], [-0.05, 1.02, -0.5]])
    dx = rng.normal(size=(64, 64)) * 2.0
    dy = rng.normal(size=(64, 64)) * 2.0
    pts = rng.uniform(4, 60, size=(100, 2))
    colors = np.tile(np.array([255, 255, 0], dtype=np.uint8), (99, 1))
    canvas = np.zeros((64, 64, 3), dtype=np.uint8)

    return {
        "im2col 128x32x32x16 k4s2": timeit(lambda: k.im2col(x, 4, 4, 2, 1), repeats),
        "col2im (transpose)": timeit(
            lambda: k.col2im(col, 128, 32, 32, 16, 4, 4, 2, 1), repeats),
        "affine_warp 64px": timeit(lambda: k.affine_warp(img, m), repeats),
        "grid_warp 64px": timeit(lambda: k.grid_warp(img, dx, dy), repeats),
        "draw_polyline 100pts": timeit(
            lambda: k.draw_polyline(canvas, pts, colors, 1), repeats),
    }


def bench_conv_layer(backend_name, repeats):
    """Full conv2d forward+backward through the tape under one backend."""
    import importlib

    import sketchrl.neural.backend as backend_mod
    import sketchrl.neural.tensor as tensor_mod

    backend_mod.kernels = get_kernels(backend_name)
    importlib.reload(tensor_mod)
    T = tensor_mod

    rng = np.random.default_rng(0)
    x = rng.normal(size=(128, 32, 32, 16)).astype(np.float32)
    w = T.Tensor(rng.normal(size=(32, 16, 4, 4)).astype(np.float32) * 0.05,
                 requires_grad=True)
    b = T.Tensor(np.zeros(32, dtype=np.float32), requires_grad=True)

    def run():
        out = T.conv2d(T.Tensor(x), w, b, 2, 1)
        w.grad = None
        b.grad = None
        out.backward(np.ones_like(out.data))

    return timeit(run, repeats)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    results = {}
    for name in ("numpy", "numba"):
        try:
            results[name] = bench_backend(get_kernels(name), args.repeats)
        except Exception as exc:
            print(f"{name} backend unavailable: {exc}")

    names = sorted({key for r in results.values() for key in r})
    print(f"\n{'kernel':34s} " + " ".join(f"{b:>12s}" for b in results))
    for key in names:
        row = " ".join(f"{results[b][key] * 1e3:10.2f}ms" for b in results)
        speedup = ""
        if "numpy" in results and "numba" in results:
            speedup = f"  numba {results['numpy'][key] / results['numba'][key]:5.1f}x"
        print(f"{key:34s} {row}{speedup}")

    print("\nconv2d layer forward+backward (batch 128, 16->32ch, 32px):")
    for name in results:
        t = bench_conv_layer(name, args.repeats)
        print(f"  {name:6s} {t * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
