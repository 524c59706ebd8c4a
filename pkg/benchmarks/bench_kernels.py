"""Time the compiled labelling kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--size 512] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from roadghg.speed import _backend, _fallback


def random_mask(size: int, density: float, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random((size, size)) < density


def bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--density", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        from roadghg.speed import _kernels
    except ImportError:
        print("compiled kernels not built; only the fallback can be timed")
        _kernels = None

    mask = random_mask(args.size, args.density, args.seed)
    labels, n = _fallback.label_components(mask)
    print(f"mask {args.size}x{args.size}, density {args.density}, {n} components, active backend {_backend.BACKEND}")

    rows = [("label_components", lambda k: (lambda: k.label_components(mask))),
            ("component_stats", lambda k: (lambda: k.component_stats(labels, n)))]
    for name, make in rows:
        py = bench(make(_fallback), args.repeat)
        line = f"{name:18s} python {py * 1e3:9.2f} ms"
        if _kernels is not None:
            cy = bench(make(_kernels), args.repeat)
            same = _identical(make(_kernels)(), make(_fallback)())
            line += f"  cython {cy * 1e3:8.2f} ms  speedup {py / cy:6.1f}x  identical {same}"
        print(line)
    return 0


def _identical(a, b) -> bool:
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)
    return all(np.array_equal(x, y) for x, y in zip(a, b))


if __name__ == "__main__":
    raise SystemExit(main())
