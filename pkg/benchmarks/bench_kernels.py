#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Runs every hot kernel through both implementations on realistic workloads and
prints a table of per-call times plus the speedup.  The active backend for the
installed package is whatever `tweetevents.kernels.backend_name()` reports;
this script always times both paths explicitly.
"""

import timeit

import numpy as np

from tweetevents import kernels


def _jit(fn):
    try:
        from numba import njit
    except ImportError:
        return None
    return njit(cache=True)(fn)


def _time(fn, args, number):
    return timeit.timeit(lambda: fn(*args), number=number) / number


def _csr_corpus(rng, n_rows=2000, dim=5000, nnz_per_row=12):
    data, indices, indptr = [], [], [0]
    for _ in range(n_rows):
        cols = rng.choice(dim, size=nnz_per_row, replace=False)
        cols.sort()
        indices.extend(cols.tolist())
        data.extend(rng.uniform(0.5, 4.0, nnz_per_row).tolist())
        indptr.append(len(indices))
    y = rng.choice([-1.0, 1.0], n_rows)
    return (
        np.asarray(data),
        np.asarray(indices, dtype=np.int64),
        np.asarray(indptr, dtype=np.int64),
        y,
    )


def main():
    rng = np.random.default_rng(0)
    volume = rng.poisson(30, 20_000).astype(float)
    series = rng.normal(size=20_000)
    X = np.column_stack([np.ones(500), rng.normal(size=(500, 4))])
    y = X @ np.array([0.1, 1.0, -0.5, 0.25, 0.0]) + rng.normal(size=500)
    data, idx, indptr, labels = _csr_corpus(rng)

    cases = [
        ("phi_series (n=20k, L=5)",
         kernels._phi_series_loop, kernels._phi_series_numpy,
         (volume, 5, 10.0), 20),
        ("acf (n=20k, 20 lags)",
         kernels._acf_loop, kernels._acf_numpy,
         (series, 20), 20),
        ("qr_solve (500x5)",
         kernels._qr_solve_impl, kernels._qr_solve_impl,
         (X, y), 200),
        ("svm_train (2k docs, 5k dims, 50 epochs)",
         kernels._svm_train_loop, kernels._svm_train_numpy,
         (data, idx, indptr, labels, 5000, 0.05, 50), 2),
    ]

    print(f"active package backend: {kernels.backend_name()}\n")
    header = f"{'kernel':<42} {'numba':>12} {'numpy':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, loop_fn, numpy_fn, args, number in cases:
        jitted = _jit(loop_fn)
        if jitted is None:
            print(f"{name:<42} {'(numba unavailable)':>12}")
            continue
        jitted(*args)  # compile outside the timed region
        t_nb = _time(jitted, args, number)
        t_np = _time(numpy_fn, args, number)
        print(f"{name:<42} {t_nb * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms "
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
