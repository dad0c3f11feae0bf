"""Compiled vs pure-Python SMO on separable blobs of growing size.

    python benchmarks/bench_smo.py [--sizes 50 100 200 400] [--repeat 3]

Both backends run the same selection rule and random fallback, so besides
the timings the script reports the largest multiplier difference between
them.
"""

import argparse
import time

import numpy as np

from possvm import svm
from possvm.core import KernelSpec
from possvm.dataio import SyntheticSpec, generate_synthetic


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--sigma", type=float, default=2.0)
    args = parser.parse_args(argv)

    if svm.BACKEND != "cython":
        print("compiled backend not built; only the Python timings are shown")
    kernel = KernelSpec.gaussian(args.sigma)
    print(f"{'n':>6} {'updates':>8} {'python s':>10} {'cython s':>10} {'speed-up':>9} {'max |da|':>10}")
    for n in args.sizes:
        data = generate_synthetic(SyntheticSpec("blobs", samples_per_class=n // 2,
                                                noise=1.0, separation=3.0, seed=n))
        cfg = svm.SvmConfig(penalty=10.0)
        t_py, (m_py, r_py) = best_of(lambda: svm.train_svm(data, kernel, cfg, backend="python"),
                                     args.repeat)
        if svm.BACKEND == "cython":
            t_c, (m_c, _) = best_of(lambda: svm.train_svm(data, kernel, cfg, backend="cython"),
                                    args.repeat)
            diff = float(np.abs(m_py.alphas - m_c.alphas).max())
            print(f"{data.size:>6} {r_py.iterations:>8} {t_py:>10.4f} {t_c:>10.4f} "
                  f"{t_py / t_c:>8.1f}x {diff:>10.1e}")
        else:
            print(f"{data.size:>6} {r_py.iterations:>8} {t_py:>10.4f} {'-':>10} {'-':>9} {'-':>10}")


if __name__ == "__main__":
    main()
