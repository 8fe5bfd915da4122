"""Tail probabilities of sup_{t <= T} |F_n(t) - F(t)|: exact, crude MC, importance sampling.

All Monte Carlo work happens in F-coordinates: for continuous F the points
F(xi_k) are uniform, so a trial only needs sorted uniforms and the level
tau = F(T).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import rng as _rng
from ._exact_kernel import band, crossing_probability
from .cdf_model import ContinuousCDF
from .empirical_process import sup_deviation_fcoords
from .errors import DomainError

CI_LEVEL = 0.99
_Z = float(stats.norm.ppf(0.5 + CI_LEVEL / 2))
MIN_ESS = 100
EXACT_MAX_N = 10_000


@dataclass
class MCEstimate:
    probability: float
    method: str  # exact | crude | importance | binomial
    trials: int
    ci_low: float
    ci_high: float
    std_error: float = 0.0
    n: Optional[int] = None
    d: Optional[float] = None
    log_normalized: Optional[float] = None
    target: Optional[float] = None
    ess: Optional[float] = None
    reliable: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TiltSpec:
    """Tent-shaped change of measure G(t) = F(t) + delta * g(F(t)).

    g(x) = 2x on [0, 1/2] and 2(1 - x) on (1/2, 1]. With ``symmetric`` the
    sampler draws from the equal mixture of the +delta and -delta tilts, which
    covers both sides of the two-sided event.
    """

    delta: float = 0.0
    shape: str = "tent"
    symmetric: bool = True

    def __post_init__(self):
        if self.shape not in ("tent", "none"):
            raise DomainError(f"unknown tilt shape {self.shape!r}")
        if not abs(self.delta) < 0.5:
            raise DomainError(f"tilt magnitude must satisfy |delta| < 1/2, got {self.delta!r}")

    @property
    def active(self) -> bool:
        return self.shape == "tent" and self.delta != 0.0


# -- exact --------------------------------------------------------------------------


def exact_tail(n: int, d: float) -> float:
    """P(sup_{t in [0,1]} |F_n - F| >= d) for continuous F (distribution-free)."""
    if not (1 <= n <= EXACT_MAX_N):
        raise DomainError(f"exact_tail supports 1 <= n <= {EXACT_MAX_N}, got {n}")
    if d > 1.0:
        return 0.0
    if d <= 0.5 / n:
        return 1.0
    c, lo, hi = band(n, d)
    return float(min(1.0, crossing_probability(n, c, lo, hi)))


def kolmogorov_series(x: float, terms: int = 100) -> float:
    """Limit law tail 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)."""
    k = np.arange(1, terms + 1)
    return float(2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * x * x)))


def exact_estimate(n: int, d: float) -> MCEstimate:
    p = exact_tail(n, d)
    return MCEstimate(p, "exact", 0, p, p, 0.0, n=n, d=d)


# -- Monte Carlo -------------------------------------------------------------------


def _block_size(n: int) -> int:
    # keep a block's (rows x n) uniform matrix around 16 MB
    return int(max(16, min(_rng.BLOCK_SIZE, 2**21 // n)))


def _tau(F: ContinuousCDF, T: float) -> float:
    if not (0.0 < T <= 1.0):
        raise DomainError(f"horizon must lie in (0, 1], got {T!r}")
    return F.eval(T)


def clopper_pearson(successes: int, trials: int, level: float = CI_LEVEL) -> tuple[float, float]:
    a = (1.0 - level) / 2
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(a, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - a, successes + 1, trials - successes))
    return lo, hi


def crude_mc(F: ContinuousCDF, n: int, d: float, T: float = 1.0, trials: int = 10_000,
             seed: int = 0, workers: Optional[int] = None) -> MCEstimate:
    """Indicator average of {sup_{t<=T} |F_n - F| >= d} with a Clopper-Pearson interval."""
    if trials < 100:
        raise DomainError(f"crude_mc needs at least 100 trials, got {trials}")
    tau = _tau(F, T)

    def run(block):
        b, size = block
        u = np.sort(_rng.stream(seed, b).random((size, n)), axis=1)
        return int(np.count_nonzero(sup_deviation_fcoords(u, tau) >= d))

    hits = sum(_rng.ordered_map(run, _rng.blocks(trials, _block_size(n)), workers))
    p = hits / trials
    lo, hi = clopper_pearson(hits, trials)
    return MCEstimate(p, "crude", trials, lo, hi, math.sqrt(p * (1 - p) / trials), n=n, d=d,
                      extra={"successes": hits})


def tilted_uniforms(u, delta: float):
    """Map uniforms through the inverse of H(x) = x + delta * g(x)."""
    knee = 0.5 + delta
    return np.where(u <= knee, u / (1.0 + 2.0 * delta), (u - 2.0 * delta) / (1.0 - 2.0 * delta))


def log_likelihood_ratio(k, n: int, delta: float):
    """log prod_k dG/dF(xi_k) for a +delta tent tilt, given k points with F <= 1/2."""
    return k * math.log1p(2.0 * delta) + (n - k) * math.log1p(-2.0 * delta)


def importance_mc(F: ContinuousCDF, n: int, d: float, T: float = 1.0, trials: int = 10_000,
                  tilt: TiltSpec = TiltSpec(), seed: int = 0,
                  workers: Optional[int] = None) -> MCEstimate:
    """Weighted indicator average under the tent tilt.

    A trial draws the same uniform matrix as :func:`crude_mc` (so delta = 0
    reproduces it exactly), then one extra uniform per row to pick the sign
    of the tilt when ``tilt.symmetric``.
    """
    tau = _tau(F, T)
    delta = tilt.delta if tilt.active else 0.0

    def run(block):
        b, size = block
        g = _rng.stream(seed, b)
        u = g.random((size, n))
        sign = np.where(g.random(size) < 0.5, 1.0, -1.0) if tilt.symmetric else np.ones(size)
        x = np.sort(tilted_uniforms(u, sign[:, None] * delta), axis=1)
        hit = sup_deviation_fcoords(x, tau) >= d
        k = np.count_nonzero(x <= 0.5, axis=1)
        lp = log_likelihood_ratio(k, n, delta)
        if tilt.symmetric:
            lm = log_likelihood_ratio(k, n, -delta)
            logw = -(np.logaddexp(lp, lm) - math.log(2.0))
        else:
            logw = -lp
        w = np.exp(logw)
        y = np.where(hit, w, 0.0)
        return (float(y.sum()), float((y * y).sum()), float(w.sum()), float((w * w).sum()),
                int(hit.sum()), bool(np.all(np.isfinite(w) & (w > 0))))

    parts = _rng.ordered_map(run, _rng.blocks(trials, _block_size(n)), workers)
    sy = _rng.ordered_sum(p[0] for p in parts)
    syy = _rng.ordered_sum(p[1] for p in parts)
    sw = _rng.ordered_sum(p[2] for p in parts)
    sww = _rng.ordered_sum(p[3] for p in parts)
    hits = sum(p[4] for p in parts)
    p = sy / trials
    var = max(syy / trials - p * p, 0.0) * trials / max(trials - 1, 1)
    se = math.sqrt(var / trials)
    mean_w = sw / trials
    var_w = max(sww / trials - mean_w * mean_w, 0.0) * trials / max(trials - 1, 1)
    ess = sy * sy / syy if syy > 0 else 0.0
    return MCEstimate(
        p, "importance", trials, max(0.0, p - _Z * se), p + _Z * se, se, n=n, d=d, ess=ess,
        reliable=ess >= MIN_ESS,
        extra={
            "delta": delta,
            "symmetric": tilt.symmetric,
            "successes": hits,
            "per_trial_variance": var,
            "mean_weight": mean_w,
            "mean_weight_se": math.sqrt(var_w / trials),
            "weights_finite_positive": all(p[5] for p in parts),
        },
    )


# -- scans --------------------------------------------------------------------------


def _check_scan(F: ContinuousCDF, alpha: float, n_list: Sequence[int], T: float = 1.0):
    if not n_list:
        raise DomainError("n_list must not be empty")
    if not (0.0 < alpha < 0.5):
        raise DomainError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    if any(n < 16 for n in n_list):
        raise DomainError("every n in the scan must be >= 16")
    if F.eval(T) < 0.5:
        raise DomainError(f"horizon T={T!r} has F(T) < 1/2; the optimal hitting point is unreachable")


def ldp_scan(F: ContinuousCDF, alpha: float, epsilon: float, n_list: Sequence[int], T: float = 1.0,
             trials: int = 100_000, seed: int = 0, workers: Optional[int] = None) -> list[MCEstimate]:
    """(1/n^{1-2a}) log P(sup_{t<=T} n^a |F_n - F| >= eps) across n, target -2 eps^2."""
    _check_scan(F, alpha, n_list, T)
    out = []
    for i, n in enumerate(n_list):
        d = epsilon * n ** -alpha
        if T == 1.0 and n <= EXACT_MAX_N:
            est = exact_estimate(n, d)
        else:
            tilt = TiltSpec(min(d, 0.45))
            est = importance_mc(F, n, d, T, trials, tilt, seed=_scan_seed(seed, i), workers=workers)
        est.log_normalized = math.log(est.probability) / n ** (1 - 2 * alpha) if est.probability > 0 else -math.inf
        est.target = -2.0 * epsilon**2
        out.append(est)
    return out


def _scan_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0] >> 1)


def pointwise_tail(n: int, threshold: float, level: float = 0.5) -> tuple[float, float]:
    """(p, log p) for P(|B/n - level| >= threshold), B ~ Binomial(n, level)."""
    upper = n * level + n * threshold
    lower = n * level - n * threshold
    k_up = math.ceil(upper)
    k_dn = math.floor(lower)
    log_up = float(stats.binom.logsf(k_up - 1, n, level)) if k_up <= n else -math.inf
    log_dn = float(stats.binom.logcdf(k_dn, n, level)) if k_dn >= 0 else -math.inf
    logp = float(np.logaddexp(log_up, log_dn))
    return math.exp(logp), logp


def pointwise_scan(F: ContinuousCDF, alpha: float, epsilon: float, n_list: Sequence[int],
                   seed: int = 0) -> list[MCEstimate]:
    """Exact binomial tail of |F_n(T*) - 1/2| >= eps n^{-a} at the median T*.

    ``seed`` is accepted for interface symmetry; nothing here is random.
    """
    _check_scan(F, alpha, n_list)
    t_star = F.quantile(0.5)
    out = []
    for n in n_list:
        d = epsilon * n ** -alpha
        p, logp = pointwise_tail(n, d, F.eval(t_star))
        out.append(MCEstimate(
            p, "binomial", 0, p, p, 0.0, n=n, d=d,
            log_normalized=logp / n ** (1 - 2 * alpha), target=-2.0 * epsilon**2,
            extra={"T_star": t_star},
        ))
    return out
