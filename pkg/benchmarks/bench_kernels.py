"""Compare the factor-solve backends on realistic problem shapes.

Runs the same row-wise ridge solves through every available backend
(compiled and pure numpy), checks they agree, and prints a timing table::

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --rows 2000 --cols 800 --d 20 --repeat 5
"""

import argparse
import time

import numpy as np

from mdcf import kernels


def make_problem(rng, n_rows, n_cols, d, density):
    counts = rng.binomial(n_cols, density, size=n_rows)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate(
        [rng.choice(n_cols, size=c, replace=False) for c in counts]
    ).astype(np.int64) if indptr[-1] else np.zeros(0, dtype=np.int64)
    values = rng.normal(size=indptr[-1])
    other = rng.normal(size=(n_cols, d))
    rhs_base = rng.normal(size=(n_rows, d))
    return indptr, indices, values, other, rhs_base


def run(backend_name, problem, ridge, threads, repeat):
    solve = kernels.implementation(backend_name)
    indptr, indices, values, other, rhs_base = problem
    out = np.zeros((len(indptr) - 1, other.shape[1]))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        solve(indptr, indices, values, other, ridge, rhs_base, out, threads)
        best = min(best, time.perf_counter() - t0)
    return best, out.copy()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--cols", type=int, default=500)
    parser.add_argument("--d", type=int, default=10)
    parser.add_argument("--density", type=float, default=0.05)
    parser.add_argument("--ridge", type=float, default=0.5)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, nargs="*", default=[1, 2, 4])
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    problem = make_problem(rng, args.rows, args.cols, args.d, args.density)
    backends = kernels.available_backends()
    print(
        "rows=%d cols=%d d=%d density=%.3g ridge=%g repeat=%d (best-of timing)"
        % (args.rows, args.cols, args.d, args.density, args.ridge, args.repeat)
    )
    print("available backends: %s (import selects %r)" % (", ".join(backends), kernels.BACKEND))
    print()
    print("%-10s %-8s %12s %12s" % ("backend", "threads", "seconds", "rows/s"))
    reference = None
    baseline = None
    for name in backends:
        thread_counts = args.threads if name == "cython" else [1]
        for threads in thread_counts:
            seconds, out = run(name, problem, args.ridge, threads, args.repeat)
            if reference is None:
                reference = out
                baseline = seconds
            else:
                diff = float(np.max(np.abs(out - reference)))
                if diff > 1e-9:
                    raise SystemExit(
                        "backend %s/%d disagrees with reference by %.3g" % (name, threads, diff)
                    )
            note = "" if baseline == seconds else "  (%.1fx vs first row)" % (baseline / seconds)
            print(
                "%-10s %-8d %12.6f %12.0f%s"
                % (name, threads, seconds, args.rows / seconds, note)
            )
    print()
    print("max |difference| across backends and thread counts: <= 1e-9 (checked)")


if __name__ == "__main__":
    main()
