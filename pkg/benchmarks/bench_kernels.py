"""Benchmark the compiled kernels against the numpy fallback.

Times the four convolution primitives on training-shaped workloads plus one
full forward/backward step of the default-sized network, and prints a
side-by-side table:

    python benchmarks/bench_kernels.py [--repeats 30]
"""

import argparse
import time

import numpy as np

from vimu.kernels import _conv_py

try:
    from vimu.kernels import _conv_cy
except ImportError:
    _conv_cy = None


def timeit(fn, repeats):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(rng):
    """(name, args) for each primitive at a batch-64 training shape."""
    x = rng.standard_normal((64, 60, 36)).astype(np.float32)
    w = rng.standard_normal((32, 36, 6)).astype(np.float32)
    b = rng.standard_normal(32).astype(np.float32)
    y_shape = (64, (60 - 6) // 2 + 1, 32)
    gy = rng.standard_normal(y_shape).astype(np.float32)
    latent = rng.standard_normal((64, 12, 32)).astype(np.float32)
    wd = rng.standard_normal((32, 36, 6)).astype(np.float32)
    bd = rng.standard_normal(36).astype(np.float32)
    gyd = rng.standard_normal((64, (12 - 1) * 2 + 6, 36)).astype(np.float32)
    return [
        ("conv1d forward", lambda impl: impl.conv1d_forward(x, w, b, 2)),
        ("conv1d backward", lambda impl: impl.conv1d_backward(x, w, 2, gy)),
        ("deconv1d forward", lambda impl: impl.deconv1d_forward(latent, wd, bd, 2)),
        ("deconv1d backward", lambda impl: impl.deconv1d_backward(latent, wd, 2, gyd)),
    ]


def train_step_case(rng):
    from vimu.net import ConvSpec, NetworkConfig, init_params
    from vimu.net.network import Network
    from vimu.net.training import one_hot

    cfg = NetworkConfig(
        frames=60, dims=36, classes=5,
        conv=(ConvSpec(6, 32, 2), ConvSpec(6, 64, 2), ConvSpec(6, 128, 2)),
        fc=(128, 5), penalty_weight=1.0,
    )
    params = init_params(cfg, seed=0)
    x = rng.standard_normal((64, 60, 36)).astype(np.float32)
    z = one_hot(rng.integers(0, 5, size=64), 5)
    net = Network(params)
    return "full forward+backward (U=3)", lambda: net.backward(x, z)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<28} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for name, fn in kernel_cases(rng):
        t_py = timeit(lambda: fn(_conv_py), args.repeats)
        if _conv_cy is None:
            print(f"{name:<28} {t_py * 1e3:>8.2f}ms {'n/a':>10} {'':>8}")
            continue
        t_cy = timeit(lambda: fn(_conv_cy), args.repeats)
        print(f"{name:<28} {t_py * 1e3:>8.2f}ms {t_cy * 1e3:>8.2f}ms "
              f"{t_py / t_cy:>7.1f}x")

    import vimu.kernels as kernels

    name, step = train_step_case(rng)
    t = timeit(step, max(3, args.repeats // 5))
    print(f"\n{name} with selected backend [{kernels.BACKEND}]: {t * 1e3:.1f}ms/batch")
    if _conv_cy is None:
        print("compiled backend not built; install with "
              "`pip install -e . --no-build-isolation` to compare")


if __name__ == "__main__":
    main()
