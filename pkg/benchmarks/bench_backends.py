"""Time the compiled kernels against the numpy fallback and check they agree.

Usage: ``python3 benchmarks/bench_backends.py [--repeat 5]``
"""
import argparse
import math
import timeit

import numpy as np

from blab import _backend


def cases(rng):
    x = rng.standard_normal(1_000_000)
    q = np.linspace(0.1, 200.0, 2000)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    M = 400
    ta = rng.random(4 * M + 8 * math.isqrt(M) + 64)
    tb = rng.random(M + 1)
    return {
        "pairwise_sum(1e6)": lambda b: b.pairwise_sum(x),
        "shell_counts(4e4)": lambda b: b.shell_counts(40_000),
        "sine_moments(2000x64)": lambda b: b.sine_moments(q, (nodes + 1) / 2, weights / 2),
        "shifted_table_sum(M=400)": lambda b: b.shifted_table_sum((3, 1, 0), 0, M, ta, tb),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = _backend.available()
    if "compiled" not in names:
        print("compiled backend not built; only the fallback is available")
    backends = {n: _backend.get(n) for n in names}
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s}" + "".join(f"{n:>14s}" for n in names) + f"{'speedup':>10s}  agree")
    for label, fn in cases(rng).items():
        times, outs = {}, {}
        for n, b in backends.items():
            outs[n] = fn(b)
            times[n] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        ref = outs["python"]
        agree = all(np.array_equal(np.asarray(o), np.asarray(ref)) for o in outs.values())
        if not agree:
            agree = all(np.allclose(o, ref, rtol=1e-13, atol=0) for o in outs.values())
            agree = "close" if agree else "NO"
        else:
            agree = "exact"
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{label:28s}" + "".join(f"{times[n]*1e3:12.2f}ms" for n in names)
              + f"{speed:9.1f}x  {agree}")


if __name__ == "__main__":
    main()
