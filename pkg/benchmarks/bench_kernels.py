"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on identical inputs under both backends; the table
lists the best wall time per backend, the speedup, and the maximum
absolute difference between the two outputs.
"""

import argparse
import time

import numpy as np

from irsfso import _kernels_py

try:
    from irsfso import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _cases():
    rng = np.random.default_rng(7)
    n_hf = 200_000
    y = np.linspace(-0.3, 0.3, n_hf)
    w = np.full(n_hf, y[1] - y[0])
    amp = np.exp(-(y / 0.1) ** 2)
    ph = rng.uniform(-np.pi, np.pi, n_hf)
    x = np.linspace(-400.0, 400.0, 2000)
    return {
        "uniform_blocks 1e6": lambda k: k.uniform_blocks(1, 0, np.arange(250_000, dtype=np.uint64), 0),
        "rayleigh_trials 1e6": lambda k: k.rayleigh_trials(1, 0, 1_000_000, 0.2, 0),
        "normal_trials 1e6": lambda k: k.normal_trials(1, 0, 1_000_000, 1),
        "gamma_trials 1e6 (shape 4.2)": lambda k: k.gamma_trials(1, 0, 1_000_000, 4.2, 1 / 4.2, 1),
        "gamma_trials 1e6 (shape 0.7)": lambda k: k.gamma_trials(1, 0, 1_000_000, 0.7, 1 / 0.7, 2),
        "hf_sum 2e5 nodes": lambda k: k.hf_sum(y, w, amp, ph, 0.01, 150.0, 8.1e6, True),
        "hyp1f2 2000 points": lambda k: k.hyp1f2(0.3, 1.4, 2.1, x, 1e-15, 10_000)[0],
    }


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not built; only the numpy fallback is available")
    print(f"{'kernel':32s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, case in _cases().items():
        tp, op = _best(lambda: case(_kernels_py), args.repeat)
        if _kernels_c is None:
            print(f"{name:32s} {tp:10.4f} {'-':>10s} {'-':>8s} {'-':>11s}")
            continue
        tc, oc = _best(lambda: case(_kernels_c), args.repeat)
        print(f"{name:32s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {_diff(op, oc):11.3g}")


if __name__ == "__main__":
    main()
