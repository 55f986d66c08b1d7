"""Time the compiled and numpy kernel backends on desk-scale shapes.

    python benchmarks/bench_kernels.py [--repeat 20] [--dtype float32]
"""

import argparse
import timeit

import numpy as np

from stnet._kernels import backends

# (name, padded input shape, kernel, stride) for the im2col/col2im pair
CONV_CASES = [
    ("conv2d 3x3, 24px, c=8", (64, 1, 26, 26, 8), (1, 3, 3), (1, 1, 1)),
    ("conv2d 3x3, 12px, c=16", (64, 1, 14, 14, 16), (1, 3, 3), (1, 1, 1)),
    ("conv3d 3x3x3, 16x24px, c=3", (4, 16, 24, 24, 3), (3, 3, 3), (1, 1, 1)),
]
POOL_CASES = [
    ("maxpool 2x2, 24px, c=8", (64, 1, 24, 24, 8), (1, 2, 2)),
    ("maxpool 2x2x2, 14x22px, c=16", (4, 14, 22, 22, 16), (2, 2, 2)),
]


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--dtype", default="float32", choices=("float32", "float64"))
    args = ap.parse_args(argv)
    impls = backends()
    if "cython" not in impls:
        print("compiled backend not built; only the numpy fallback is timed")
    rng = np.random.default_rng(0)
    rows = []
    for name, shape, k, s in CONV_CASES:
        x = rng.standard_normal(shape).astype(args.dtype)
        cols = impls["python"].im2col(x, *k, *s)
        for op, call in (("im2col", lambda m: m.im2col(x, *k, *s)),
                         ("col2im", lambda m: m.col2im(cols, x.shape, *k, *s))):
            rows.append((f"{op:7s} {name}", {b: bench(lambda: call(m), args.repeat) for b, m in impls.items()}))
    for name, shape, p in POOL_CASES:
        x = rng.standard_normal(shape).astype(args.dtype)
        y, idx = impls["python"].maxpool_forward(x, *p)
        dy = np.ones_like(y)
        for op, call in (("pool fw", lambda m: m.maxpool_forward(x, *p)),
                         ("pool bw", lambda m: m.maxpool_backward(dy, idx, x.shape, *p))):
            rows.append((f"{op:7s} {name}", {b: bench(lambda: call(m), args.repeat) for b, m in impls.items()}))

    names = list(impls)
    print(f"{'kernel':40s}" + "".join(f"{b + ' ms':>12s}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for label, t in rows:
        line = f"{label:40s}" + "".join(f"{t[b]:12.3f}" for b in names)
        if len(names) > 1:
            line += f"{t['python'] / t['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
