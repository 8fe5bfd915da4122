"""First-passage recursion for the two-sided Kolmogorov-Smirnov tail.

For uniform order statistics U_(1) < ... < U_(n) the event {D_n < d} is
{a_i < U_(i) < b_i for all i} with a_i = (i - nd)/n and b_i = (i - 1 + nd)/n.
Walking the counting process N(c) = #{U <= c} over the merged breakpoints
c_0 = 0 < c_1 < ... , the count increments are binomial given the current
count, and the chain must stay inside a band [lo_j, hi_j] at each breakpoint.

The crossing probability is accumulated as the sum of first-exit masses, all
non-negative, so tiny tails keep full relative precision (no 1 - P(D < d)).
"""

from __future__ import annotations

import math

import numba
import numpy as np

_NEGLIGIBLE = 1e-300


@numba.njit(cache=True)
def _binom_logpmf(k, m, logp, log1mp):
    return (math.lgamma(m + 1.0) - math.lgamma(k + 1.0) - math.lgamma(m - k + 1.0)
            + k * logp + (m - k) * log1mp)


@numba.njit(cache=True)
def crossing_probability(n, c, lo, hi):
    """Sum of first-exit masses of the banded binomial chain.

    ``c`` are breakpoints starting at 0; ``lo``/``hi`` the admissible counts at
    each breakpoint.
    """
    alive = np.zeros(n + 1)
    nxt = np.zeros(n + 1)
    alive[0] = 1.0
    exited = 0.0
    cur_lo = 0
    cur_hi = 0
    for j in range(len(c) - 1):
        p = (c[j + 1] - c[j]) / (1.0 - c[j])
        nlo = lo[j + 1]
        nhi = hi[j + 1]
        for b in range(nlo, nhi + 1):
            nxt[b] = 0.0
        if p >= 1.0:
            for a in range(cur_lo, cur_hi + 1):
                w = alive[a]
                if w == 0.0:
                    continue
                if nlo <= n <= nhi:
                    nxt[n] += w
                else:
                    exited += w
        else:
            logp = math.log(p)
            log1mp = math.log1p(-p)
            odds = p / (1.0 - p)
            for a in range(cur_lo, cur_hi + 1):
                w = alive[a]
                if w < _NEGLIGIBLE:
                    continue
                m = n - a
                mode = int(math.floor((m + 1) * p))
                if mode > m:
                    mode = m
                start = math.exp(_binom_logpmf(mode, m, logp, log1mp))
                # upward from the mode
                term = start
                k = mode
                while True:
                    b = a + k
                    if b < nlo or b > nhi:
                        exited += w * term
                    else:
                        nxt[b] += w * term
                    if k == m:
                        break
                    term *= (m - k) / (k + 1.0) * odds
                    k += 1
                    if term < _NEGLIGIBLE and k > mode:
                        break
                # downward from the mode
                term = start
                k = mode
                while k > 0:
                    term *= k / (m - k + 1.0) / odds
                    k -= 1
                    if term < _NEGLIGIBLE:
                        break
                    b = a + k
                    if b < nlo or b > nhi:
                        exited += w * term
                    else:
                        nxt[b] += w * term
        for b in range(cur_lo, cur_hi + 1):
            alive[b] = 0.0
        for b in range(nlo, nhi + 1):
            alive[b] = nxt[b]
        cur_lo = nlo
        cur_hi = nhi
        if cur_lo > cur_hi:
            break
    return exited


def band(n: int, d: float):
    """Breakpoints and admissible count bands for P(D_n >= d)."""
    nd = n * d
    i = np.arange(1, n + 1, dtype=float)
    a = (i - nd) / n
    b = (i - 1 + nd) / n
    a_pts = a[(a > 0.0) & (a < 1.0)]
    b_pts = b[(b > 0.0) & (b < 1.0)]
    c = np.unique(np.concatenate([[0.0], a_pts, b_pts]))
    a_all = a  # sorted ascending
    # hi: N(c) <= i - 1 for the first a_i >= c; lo: N(c) >= i for the last b_i <= c
    first_a = np.searchsorted(a_all, c, side="left")  # 0-based index => i = idx + 1
    hi = np.where(first_a < n, first_a, n).astype(np.int64)
    lo = np.searchsorted(b, c, side="right").astype(np.int64)
    return c, lo, hi
