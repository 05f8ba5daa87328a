"""Time the Gauss-Seidel kernel: compiled extension vs pure-Python fallback.

Usage::

    python3 benchmarks/bench_gauss_seidel.py --sizes 32 64 128 --sweeps 10

Prints one CSV row per (backend, size) with the best-of-``repeat`` time per
sweep, and checks that both backends return bit-identical fields.
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from ctetris._kernels import BACKENDS


def run(sizes, sweeps, repeat, seed=0):
    rng = np.random.default_rng(seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["backend", "size", "sweeps", "sec_per_sweep", "speedup_vs_python"])
    for n in sizes:
        u0 = rng.random((n, n))
        rhs = rng.standard_normal((n, n))
        times = {}
        outputs = {}
        for name, sweep in BACKENDS.items():
            def once():
                u = u0.copy()
                sweep(u, rhs, sweeps, 1.0)
                return u
            outputs[name] = once()
            # the python fallback is slow; one timed call per repeat is enough
            best = min(timeit.repeat(once, number=1, repeat=repeat))
            times[name] = best / sweeps
        if "cython" in outputs and not np.array_equal(outputs["cython"], outputs["python"]):
            print(f"warning: backends disagree at size {n}", file=sys.stderr)
        for name, t in times.items():
            writer.writerow([name, n, sweeps, f"{t:.3e}", f"{times['python'] / t:.1f}"])
    if "cython" not in BACKENDS:
        print("note: compiled extension not available; only the fallback was timed",
              file=sys.stderr)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256])
    p.add_argument("--sweeps", type=int, default=5)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    run(args.sizes, args.sweeps, args.repeat)
    return 0


if __name__ == "__main__":
    sys.exit(main())
