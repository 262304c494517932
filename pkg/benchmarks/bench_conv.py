"""Benchmark the compiled convolution kernels against the numpy fallback.

Run after building the extension (``python setup.py build_ext --inplace``):

    python benchmarks/bench_conv.py
"""

import time

import numpy as np

import netinv._convnp as convnp
from netinv.rng import Prng

try:
    import netinv._convkernels as convkernels
except ImportError:
    convkernels = None


def bench(fn, *args, repeats=200):
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main():
    rng = Prng(0)
    cases = [
        ("conv 1->8 on 28x28", "forward",
         (rng.normal((1, 28, 28)), rng.normal((8, 1, 4, 4)), 2, 1)),
        ("conv 8->16 on 14x14", "forward",
         (rng.normal((8, 14, 14)), rng.normal((16, 8, 4, 4)), 2, 1)),
        ("adjoint 16->8 on 7x7", "adjoint",
         (rng.normal((16, 7, 7)), rng.normal((16, 8, 4, 4)), 2, 1, 14, 14)),
        ("kernel grad 8ch 14x14", "kgrad",
         (rng.normal((8, 14, 14)), rng.normal((16, 7, 7)), 2, 1, 4, 4)),
    ]
    dispatch = {
        "forward": ("conv2d_forward", lambda m: m.conv2d_forward),
        "adjoint": ("conv2d_adjoint", lambda m: m.conv2d_adjoint),
        "kgrad": ("conv2d_kernel_grad", lambda m: m.conv2d_kernel_grad),
    }
    print(f"{'case':26s} {'numpy':>12s} {'compiled':>12s} {'speedup':>9s}")
    for label, kind, args in cases:
        args = tuple(
            np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a
            for a in args
        )
        _, get = dispatch[kind]
        t_np = bench(get(convnp), *args)
        if convkernels is None:
            print(f"{label:26s} {t_np * 1e6:10.1f}us {'n/a':>12s} {'-':>9s}")
            continue
        t_cy = bench(get(convkernels), *args)
        out_np = get(convnp)(*args)
        out_cy = get(convkernels)(*args)
        assert np.allclose(out_np, out_cy, atol=1e-12), label
        print(f"{label:26s} {t_np * 1e6:10.1f}us {t_cy * 1e6:10.1f}us "
              f"{t_np / t_cy:8.1f}x")
    if convkernels is None:
        print("\ncompiled extension not built; "
              "run `python setup.py build_ext --inplace`")
        return
    bench_end_to_end()


def bench_end_to_end():
    """One coordinate-descent inversion of a small convolutional encoder,
    timed with each backend."""
    import netinv._conv as conv_dispatch
    from netinv import (
        Conv2d, DenseAffine, Layer, Network, NonNegIndicator, Prng,
        TotalVariation, coordinate_descent_invert, synthetic_shapes,
    )

    rng = Prng(1)
    encoder = Network([
        Layer(Conv2d(rng.uniform_signed(0.25, (8, 1, 4, 4)), (28, 28), 2, 1,
                     rng.uniform_signed(0.1, (8,))), NonNegIndicator()),
        Layer(Conv2d(rng.uniform_signed(0.09, (16, 8, 4, 4)), (14, 14), 2, 1,
                     rng.uniform_signed(0.1, (16,))), NonNegIndicator()),
        Layer(DenseAffine(rng.uniform_signed(0.036, (300, 784)),
                          rng.uniform_signed(0.1, (300,)),
                          input_shape=(16, 7, 7)), NonNegIndicator()),
    ])
    img = synthetic_shapes(1, seed=2)[0]
    code = encoder.forward(img[None, :, :])

    def run_once():
        coordinate_descent_invert(encoder, code, TotalVariation(), 5e-3,
                                  outer_iters=30, inner_iters=50)

    times = {}
    saved = conv_dispatch._impl
    try:
        for name, impl in (("compiled", convkernels), ("numpy", convnp)):
            conv_dispatch._impl = impl
            run_once()
            start = time.perf_counter()
            run_once()
            times[name] = time.perf_counter() - start
    finally:
        conv_dispatch._impl = saved
    print(f"\n{'cd inversion (30 sweeps)':26s} "
          f"{times['numpy'] * 1e3:10.1f}ms {times['compiled'] * 1e3:10.1f}ms "
          f"{times['numpy'] / times['compiled']:8.1f}x")


if __name__ == "__main__":
    main()
