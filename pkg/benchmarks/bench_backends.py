"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_backends.py [--n 20 50] [--b 200] [--rows 200]

Times the three hot paths (batched MLE fits, closed-form statistics for the
six standard weights, a full bootstrap) on both backends and checks that
they agree.
"""

import argparse
import time

import numpy as np

from weibull_gof import backend
from weibull_gof.distributions import Weibull
from weibull_gof.rng import RngStream

FAMILY = [0, 0, 0, 1, 1, 1]
A = [1.0, 2.0, 5.0, 1.0, 2.0, 5.0]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[20, 50])
    ap.add_argument("--rows", type=int, default=200, help="samples per batched call")
    ap.add_argument("--b", type=int, default=200, help="bootstrap replicates")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = backend.available()
    if "compiled" not in names:
        print("compiled extension not built; only the fallback is available")
    print(f"backends: {', '.join(names)}; threads: GOF_THREADS={backend.thread_count() or 'auto'}")
    header = f"{'task':<28}{'n':>5}" + "".join(f"{name:>14}" for name in names) + f"{'speedup':>10}"
    print(header)

    for n in args.n:
        X = np.array([Weibull(1.0, 1.5).sample(n, RngStream(i)) for i in range(args.rows)])
        lam, k, *_ = backend.get("python").fit_mle_rows(X)
        seeds = np.arange(4, dtype=np.uint64)
        tasks = {
            f"fit_mle x{args.rows}": lambda kern: kern.fit_mle_rows(X)[:2],
            f"statistics x{args.rows} x6": lambda kern: kern.statistics_rows(X, lam, k, FAMILY, A),
            f"bootstrap 4 x b={args.b} x6": lambda kern: kern.bootstrap(
                seeds, lam[:4], k[:4], n, args.b, 0, FAMILY, A, 1
            )[0],
        }
        for label, task in tasks.items():
            timings, outputs = [], []
            for name in names:
                kern = backend.get(name)
                t, out = best_of(lambda: task(kern), args.repeat)
                timings.append(t)
                outputs.append(np.asarray(out))
            if len(outputs) == 2:
                np.testing.assert_allclose(outputs[0], outputs[1], rtol=1e-10, atol=1e-12)
            speed = f"{timings[1] / timings[0]:>9.1f}x" if len(timings) == 2 else ""
            cells = "".join(f"{1e3 * t:>12.2f}ms" for t in timings)
            print(f"{label:<28}{n:>5}{cells}{speed}")


if __name__ == "__main__":
    main()
