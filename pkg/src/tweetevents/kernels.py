"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``TWEETEVENTS_DISABLE_NUMBA`` is not set to ``1``/``true``/``yes``.
Both paths are exercised by the test suite and timed against each other by
``benchmarks/bench_kernels.py``.  Selection happens once at import time;
``backend_name()`` reports which path is live.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE_ENV = "TWEETEVENTS_DISABLE_NUMBA"


def _numba_available() -> bool:
    if os.environ.get(_DISABLE_ENV, "").strip().lower() in {"1", "true", "yes"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_available()


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# Sliding-median outlier fraction
# ---------------------------------------------------------------------------

def _phi_series_loop(values, half_window, min_activity):
    """Per-day outlier fraction vs the median of a centered window.

    phi[i] = (values[i] - median(window)) / max(median(window), min_activity)
    for the 2*half_window+1 window centered at i; NaN where the window does
    not fit.  The window is kept sorted and updated by insertion as it
    slides, so each step costs O(window) with no allocation.
    """
    n = values.shape[0]
    width = 2 * half_window + 1
    out = np.full(n, np.nan)
    if n < width:
        return out
    window = values[:width].copy()
    window.sort()
    for i in range(half_window, n - half_window):
        baseline = window[half_window]
        denom = baseline if baseline > min_activity else min_activity
        out[i] = (values[i] - baseline) / denom
        if i + half_window + 1 < n:
            old = values[i - half_window]
            new = values[i + half_window + 1]
            lo, hi = 0, width
            while lo < hi:                      # first slot with window >= old
                mid = (lo + hi) // 2
                if window[mid] < old:
                    lo = mid + 1
                else:
                    hi = mid
            if new >= window[lo]:
                while lo + 1 < width and window[lo + 1] < new:
                    window[lo] = window[lo + 1]
                    lo += 1
            else:
                while lo > 0 and window[lo - 1] > new:
                    window[lo] = window[lo - 1]
                    lo -= 1
            window[lo] = new
    return out


def _phi_series_numpy(values, half_window, min_activity):
    n = values.shape[0]
    width = 2 * half_window + 1
    out = np.full(n, np.nan)
    if n < width:
        return out
    windows = np.lib.stride_tricks.sliding_window_view(values, width)
    baseline = np.median(windows, axis=1)
    centers = values[half_window : n - half_window]
    out[half_window : n - half_window] = (centers - baseline) / np.maximum(
        baseline, min_activity
    )
    return out


# ---------------------------------------------------------------------------
# Autocorrelations
# ---------------------------------------------------------------------------

def _acf_loop(x, nlags):
    """Sample autocorrelations at lags 1..nlags (full-sample denominator)."""
    n = x.shape[0]
    dev = x - np.mean(x)
    denom = 0.0
    for t in range(n):
        denom += dev[t] * dev[t]
    out = np.zeros(nlags)
    if denom == 0.0:
        return out
    for k in range(1, nlags + 1):
        s = 0.0
        for t in range(n - k):
            s += dev[t] * dev[t + k]
        out[k - 1] = s / denom
    return out


def _acf_numpy(x, nlags):
    dev = x - x.mean()
    denom = float(dev @ dev)
    if denom == 0.0:
        return np.zeros(nlags)
    return np.array([float(dev[: -k] @ dev[k:]) for k in range(1, nlags + 1)]) / denom


# ---------------------------------------------------------------------------
# Least squares via QR
# ---------------------------------------------------------------------------

def _qr_solve_impl(X, y):
    """Least-squares fit; returns (coef, rss, smallest |R| diagonal).

    The caller decides rank deficiency from the last value; a tiny diagonal
    relative to the largest one signals a singular design matrix.
    """
    Q, R = np.linalg.qr(X)
    qty = np.ascontiguousarray(Q.T) @ y
    diag = np.abs(np.diag(R))
    rmax = diag.max()
    if rmax == 0.0 or diag.min() <= 1e-12 * rmax:
        coef = np.zeros(X.shape[1])
        return coef, 0.0, 0.0
    coef = np.linalg.solve(R, qty)
    resid = y - X @ coef
    rss = float(resid @ resid)
    return coef, rss, float(diag.min() / rmax)


# ---------------------------------------------------------------------------
# Linear max-margin trainer (hinge loss + L2, unregularized bias)
# ---------------------------------------------------------------------------

def _svm_train_loop(data, indices, indptr, y, dim, reg, epochs):
    """Full-batch subgradient descent on the primal SVM objective.

    Minimizes reg/2 * ||w||^2 + mean_i hinge(y_i * (w.x_i + b)) over CSR rows
    with the shifted schedule eta_t = 1/(reg*(t + t0)), t0 = 1/reg, which
    keeps the first steps O(1) instead of O(1/reg).  Deterministic: iterates
    depend only on the averaged subgradient, so duplicating every example
    leaves the trajectory unchanged.
    """
    n = indptr.shape[0] - 1
    t0 = 1.0 / reg
    w = np.zeros(dim)
    b = 0.0
    for t in range(1, epochs + 1):
        eta = 1.0 / (reg * (t + t0))
        gw = np.zeros(dim)
        gb = 0.0
        for i in range(n):
            score = b
            for j in range(indptr[i], indptr[i + 1]):
                score += data[j] * w[indices[j]]
            if y[i] * score < 1.0:
                for j in range(indptr[i], indptr[i + 1]):
                    gw[indices[j]] += y[i] * data[j]
                gb += y[i]
        inv_n = 1.0 / n
        for d in range(dim):
            w[d] -= eta * (reg * w[d] - gw[d] * inv_n)
        b += eta * gb * inv_n
    return w, b


def _svm_train_numpy(data, indices, indptr, y, dim, reg, epochs):
    n = indptr.shape[0] - 1
    t0 = 1.0 / reg
    row_ids = np.repeat(np.arange(n), np.diff(indptr))
    y_rep = y[row_ids]
    w = np.zeros(dim)
    b = 0.0
    for t in range(1, epochs + 1):
        eta = 1.0 / (reg * (t + t0))
        scores = np.bincount(row_ids, weights=data * w[indices], minlength=n) + b
        violated = y * scores < 1.0
        mask = violated[row_ids]
        gw = np.bincount(
            indices[mask], weights=(y_rep * data)[mask], minlength=dim
        )
        gb = float(y[violated].sum())
        w = (1.0 - eta * reg) * w + (eta / n) * gw
        b += eta * gb / n
    return w, b


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    phi_series = njit(cache=True)(_phi_series_loop)
    acf = njit(cache=True)(_acf_loop)
    qr_solve = njit(cache=True)(_qr_solve_impl)
    svm_train = njit(cache=True)(_svm_train_loop)
else:
    phi_series = _phi_series_numpy
    acf = _acf_numpy
    qr_solve = _qr_solve_impl
    svm_train = _svm_train_numpy
