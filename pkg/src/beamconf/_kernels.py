"""Hot numeric kernels: tie-averaged ranking, Pearson correlation, the
bootstrap resample loop, and the LCS table for ROUGE-L.

Each kernel has a numba @njit build and a pure-numpy build. The njit build
is used when numba imports cleanly and BEAMCONF_PURE_NUMPY is not set to a
truthy value; otherwise the numpy build is used. Both builds of every
kernel are exported (``*_py`` / ``*_jit``) so benchmarks/bench_kernels.py
can time them side by side.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("BEAMCONF_PURE_NUMPY", "").strip().lower()
_WANT_NUMBA = _FLAG not in ("1", "true", "yes", "on")

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _WANT_NUMBA and _HAVE_NUMBA


# ---------------------------------------------------------------------------
# pure-numpy builds


def rank_average_py(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their positional ranks."""
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    svals = values[order]
    boundary = np.empty(n, dtype=np.bool_)
    boundary[0] = True
    boundary[1:] = svals[1:] != svals[:-1]
    run_id = np.cumsum(boundary) - 1
    run_start = np.flatnonzero(boundary)
    run_end = np.append(run_start[1:], n)
    # mean of 1-based positions start+1 .. end
    run_rank = (run_start + run_end + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = run_rank[run_id]
    return ranks


def pearson_py(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        return np.nan
    return float(np.dot(xc, yc) / denom)


def _is_constant(v: np.ndarray) -> bool:
    return bool(v.min() == v.max())


def bootstrap_rhos_py(
    conf_a: np.ndarray,
    conf_b: np.ndarray,
    qual: np.ndarray,
    idx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-resample Spearman pair for a (B, n) index matrix.

    ok[b] is False when any gathered vector is constant, i.e. either
    correlation is undefined on that resample.
    """
    n_resamples = idx.shape[0]
    rho_a = np.zeros(n_resamples, dtype=np.float64)
    rho_b = np.zeros(n_resamples, dtype=np.float64)
    ok = np.zeros(n_resamples, dtype=np.bool_)
    for b in range(n_resamples):
        rows = idx[b]
        a_s = conf_a[rows]
        b_s = conf_b[rows]
        q_s = qual[rows]
        if _is_constant(a_s) or _is_constant(b_s) or _is_constant(q_s):
            continue
        rq = rank_average_py(q_s)
        rho_a[b] = pearson_py(rank_average_py(a_s), rq)
        rho_b[b] = pearson_py(rank_average_py(b_s), rq)
        ok[b] = True
    return rho_a, rho_b, ok


def lcs_len_py(a: np.ndarray, b: np.ndarray) -> int:
    """Longest-common-subsequence length of two int-encoded token arrays."""
    la, lb = a.shape[0], b.shape[0]
    if la == 0 or lb == 0:
        return 0
    prev = np.zeros(lb + 1, dtype=np.int64)
    curr = np.zeros(lb + 1, dtype=np.int64)
    for i in range(la):
        ai = a[i]
        for j in range(lb):
            if ai == b[j]:
                curr[j + 1] = prev[j] + 1
            elif prev[j + 1] >= curr[j]:
                curr[j + 1] = prev[j + 1]
            else:
                curr[j + 1] = curr[j]
        prev, curr = curr, prev
    return int(prev[lb])


# ---------------------------------------------------------------------------
# njit builds (loop-structured variants of the same computations)

if _HAVE_NUMBA:

    @njit(cache=True)
    def rank_average_jit(values):  # pragma: no cover - exercised via dispatch
        n = values.shape[0]
        order = np.argsort(values, kind="mergesort")
        ranks = np.empty(n, dtype=np.float64)
        start = 0
        while start < n:
            end = start + 1
            v = values[order[start]]
            while end < n and values[order[end]] == v:
                end += 1
            mean_rank = (start + end + 1) / 2.0
            for pos in range(start, end):
                ranks[order[pos]] = mean_rank
            start = end
        return ranks

    @njit(cache=True)
    def pearson_jit(x, y):  # pragma: no cover
        n = x.shape[0]
        mx = 0.0
        my = 0.0
        for i in range(n):
            mx += x[i]
            my += y[i]
        mx /= n
        my /= n
        sxy = 0.0
        sxx = 0.0
        syy = 0.0
        for i in range(n):
            dx = x[i] - mx
            dy = y[i] - my
            sxy += dx * dy
            sxx += dx * dx
            syy += dy * dy
        denom = np.sqrt(sxx * syy)
        if denom == 0.0:
            return np.nan
        return sxy / denom

    @njit(cache=True)
    def _is_constant_jit(v):  # pragma: no cover
        first = v[0]
        for i in range(1, v.shape[0]):
            if v[i] != first:
                return False
        return True

    @njit(cache=True)
    def bootstrap_rhos_jit(conf_a, conf_b, qual, idx):  # pragma: no cover
        n_resamples = idx.shape[0]
        n = idx.shape[1]
        rho_a = np.zeros(n_resamples, dtype=np.float64)
        rho_b = np.zeros(n_resamples, dtype=np.float64)
        ok = np.zeros(n_resamples, dtype=np.bool_)
        a_s = np.empty(n, dtype=np.float64)
        b_s = np.empty(n, dtype=np.float64)
        q_s = np.empty(n, dtype=np.float64)
        for b in range(n_resamples):
            for j in range(n):
                row = idx[b, j]
                a_s[j] = conf_a[row]
                b_s[j] = conf_b[row]
                q_s[j] = qual[row]
            if _is_constant_jit(a_s) or _is_constant_jit(b_s) or _is_constant_jit(q_s):
                continue
            rq = rank_average_jit(q_s)
            rho_a[b] = pearson_jit(rank_average_jit(a_s), rq)
            rho_b[b] = pearson_jit(rank_average_jit(b_s), rq)
            ok[b] = True
        return rho_a, rho_b, ok

    @njit(cache=True)
    def lcs_len_jit(a, b):  # pragma: no cover
        la = a.shape[0]
        lb = b.shape[0]
        if la == 0 or lb == 0:
            return 0
        prev = np.zeros(lb + 1, dtype=np.int64)
        curr = np.zeros(lb + 1, dtype=np.int64)
        for i in range(la):
            ai = a[i]
            for j in range(lb):
                if ai == b[j]:
                    curr[j + 1] = prev[j] + 1
                elif prev[j + 1] >= curr[j]:
                    curr[j + 1] = prev[j + 1]
                else:
                    curr[j + 1] = curr[j]
            tmp = prev
            prev = curr
            curr = tmp
        return int(prev[lb])

else:  # pragma: no cover
    rank_average_jit = rank_average_py
    pearson_jit = pearson_py
    bootstrap_rhos_jit = bootstrap_rhos_py
    lcs_len_jit = lcs_len_py


if USE_NUMBA:
    rank_average = rank_average_jit
    pearson = pearson_jit
    bootstrap_rhos = bootstrap_rhos_jit
    lcs_len = lcs_len_jit
else:
    rank_average = rank_average_py
    pearson = pearson_py
    bootstrap_rhos = bootstrap_rhos_py
    lcs_len = lcs_len_py
