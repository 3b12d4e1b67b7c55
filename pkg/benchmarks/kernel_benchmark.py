"""Head-to-head benchmark of the compiled and numpy kernel backends.

Times the four hot kernels on the stock topology's layer shapes. Run after
an editable install:

    python benchmarks/kernel_benchmark.py [--batch 128] [--repeats 5]
"""

import argparse
import time

import numpy as np

from subsevo._kernels import available_backends

CASES = [
    # name, input shape, kernels shape or window/stride
    ("conv 1->32 5x5 @28x28", "conv", (1, 28, 28), (32, 1, 5, 5)),
    ("conv 32->64 5x5 @8x8", "conv", (32, 8, 8), (64, 32, 5, 5)),
    ("pool 3x3/3 @24x24", "pool", (32, 24, 24), (3, 3)),
    ("pool 2x2/2 @4x4", "pool", (64, 4, 4), (2, 2)),
]


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times) * 1000.0


def bench_backend(impl, batch, repeats, rng):
    results = {}
    for name, kind, in_shape, param in CASES:
        x = np.ascontiguousarray(rng.normal(size=(batch,) + in_shape))
        if kind == "conv":
            kernels = np.ascontiguousarray(rng.normal(size=param))
            bias = np.zeros(param[0])
            out = impl.conv2d_forward(x, kernels, bias, 1, 1)
            grad = np.ascontiguousarray(rng.normal(size=out.shape))
            results[name + " fwd"] = best_of(
                repeats, lambda: impl.conv2d_forward(x, kernels, bias, 1, 1))
            results[name + " bwd"] = best_of(
                repeats, lambda: impl.conv2d_backward(x, kernels, 1, 1, grad))
        else:
            wh, ww = param
            out, argmax = impl.maxpool_forward(x, wh, ww, wh, ww)
            grad = np.ascontiguousarray(rng.normal(size=out.shape))
            h, w = in_shape[1], in_shape[2]
            results[name + " fwd"] = best_of(
                repeats, lambda: impl.maxpool_forward(x, wh, ww, wh, ww))
            results[name + " bwd"] = best_of(
                repeats, lambda: impl.maxpool_backward(grad, argmax, h, w))
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=128)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}   "
          f"batch={args.batch} repeats={args.repeats} (best-of)")
    all_results = {}
    for name in sorted(backends):
        rng = np.random.default_rng(0)
        all_results[name] = bench_backend(backends[name], args.batch,
                                          args.repeats, rng)

    cases = list(next(iter(all_results.values())))
    names = sorted(all_results)
    header = f"{'kernel':28s}" + "".join(f"{n:>12s}" for n in names)
    if len(names) == 2:
        header += f"{'ratio':>10s}"
    print(header)
    for case in cases:
        row = f"{case:28s}"
        values = [all_results[n][case] for n in names]
        row += "".join(f"{v:10.3f}ms" for v in values)
        if len(values) == 2:
            row += f"{values[1] / values[0]:9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
