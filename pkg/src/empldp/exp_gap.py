"""Stochastic exponentials of the moderate-deviations appendix and their gap.

With r = n^{1-alpha} and phi(x) = e^x - 1 - x:

    E~_t   = 1/2 n^{-(1-2a)} int_0^t lambda^2 dF
    log E_t = int_0^t phi(lambda/r) dA^n,   dA^n = n (1 - F_n)/(1 - F) dF

lambda is a grid function, constant on each grid segment (its left value).
Between consecutive knots (grid nodes and sample points) both lambda and F_n
are constant, so both integrals are exact sums of closed-form pieces.

Writing phi(x) = x^2/2 + R(x) with |R(x)| <= |x|^3 e^{|x|}/6 gives, for
L = sup|lambda|,

    n^{1-2a} |log E_t - E~_t|
        <= log(1/(1-F(T))) [c1 n^{-(1-a)} + c2 sup_{s<=T} |F_n - F|],
    c1 = L^3 e^L / 6,  c2 = L^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng as _rng
from .cdf_model import ContinuousCDF, log_survival_ratio
from .empirical_process import SortedSample, sup_deviation_fcoords
from .errors import DomainError, SingularityError
from .paths import GridPath, uniform_grid

_GAP_KEY = 13

LambdaFn = Callable[[np.ndarray], np.ndarray]


def constant_lambda(c: float) -> LambdaFn:
    return lambda t: np.full(np.shape(t), float(c))


def piecewise_lambda(breaks, values) -> LambdaFn:
    """lambda = values[k] on [breaks[k-1], breaks[k]) with breaks[-1] implied = inf."""
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size != breaks.size + 1:
        raise DomainError("piecewise lambda needs len(values) == len(breaks) + 1")
    return lambda t: values[np.searchsorted(breaks, t, side="right")]


def parse_lambda(spec: str) -> LambdaFn:
    """``const:c`` or ``pc:t1:v0,t2:v1,...,vlast`` style presets.

    The piecewise form lists ``break:value`` pairs where ``value`` holds up to
    ``break``; the trailing bare value holds afterwards.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "const":
            return constant_lambda(float(rest))
        if kind == "pc":
            items = rest.split(",")
            pairs = [it.split(":") for it in items[:-1]]
            breaks = [float(b) for b, _ in pairs]
            values = [float(v) for _, v in pairs] + [float(items[-1])]
            return piecewise_lambda(breaks, values)
    except ValueError as exc:
        raise DomainError(f"malformed lambda spec {spec!r}") from exc
    raise DomainError(f"unknown lambda spec {spec!r} (expected const:c or pc:t:v,...,v)")


def phi(x):
    """e^x - 1 - x without cancellation for small |x|."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    series = x * x * (0.5 + x * (1.0 / 6.0 + x / 24.0))
    return np.where(small, series, np.expm1(x) - x)


def _lambda_on_segments(lam: LambdaFn, grid: np.ndarray) -> np.ndarray:
    return np.asarray(lam(grid[:-1]), dtype=float)


def _fgrid(F: ContinuousCDF, grid) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(grid, dtype=float)
    xg = F.eval(g)
    if xg[-1] >= 1.0:
        raise SingularityError(f"grid endpoint T={g[-1]!r} has F(T)=1; dA^n is singular there")
    return g, xg


def tilde_exponential(F: ContinuousCDF, lam: LambdaFn, n: int, alpha: float, grid) -> GridPath:
    """E~_t = 1/2 n^{-(1-2a)} int_0^t lambda^2 dF."""
    g, xg = _fgrid(F, grid)
    lv = _lambda_on_segments(lam, g)
    cum = np.concatenate([[0.0], np.cumsum(lv * lv * np.diff(xg))])
    return GridPath(g, 0.5 * n ** -(1.0 - 2.0 * alpha) * cum, "E~")


def _log_counting_fcoords(x: np.ndarray, n: int, alpha: float, xg: np.ndarray, lv: np.ndarray):
    """log E on the grid for one sample given in F-coordinates (sorted)."""
    tau = xg[-1]
    inside = x[x < tau]
    knots = np.union1d(xg, inside)
    k0, k1 = knots[:-1], knots[1:]
    q = np.searchsorted(x, k0, side="right") / n
    seg = np.searchsorted(xg, k0, side="right") - 1
    r = n ** (1.0 - alpha)
    piece = n * (1.0 - q) * phi(lv[seg] / r) * log_survival_ratio(k0, k1)
    cum = np.concatenate([[0.0], np.cumsum(piece)])
    return cum[np.searchsorted(knots, xg)]


def counting_exponential(s: SortedSample, F: ContinuousCDF, lam: LambdaFn, n: int, alpha: float,
                         grid) -> GridPath:
    """log E_t = int_0^t phi(lambda/n^{1-a}) dA^n on the grid (exact between knots)."""
    if n != s.n:
        raise DomainError(f"n={n} does not match the sample size {s.n}")
    g, xg = _fgrid(F, grid)
    x = F.eval(s.points)
    return GridPath(g, _log_counting_fcoords(x, n, alpha, xg, _lambda_on_segments(lam, g)), "log E")


@dataclass(frozen=True)
class GapConstants:
    lambda_bound: float
    c1: float
    c2: float

    @classmethod
    def for_bound(cls, L: float) -> "GapConstants":
        return cls(L, L**3 * math.exp(L) / 6.0, L * L / 2.0)


@dataclass(frozen=True)
class GapReport:
    n: int
    alpha: float
    lambda_bound: float
    sup_gap: float
    rhs_bound: float
    const: GapConstants
    sup_deviation: float

    @property
    def ratio(self) -> float:
        return self.sup_gap / self.rhs_bound if self.rhs_bound > 0 else (0.0 if self.sup_gap == 0 else math.inf)


def gap_report_fcoords(x: np.ndarray, n: int, alpha: float, xg: np.ndarray, lv: np.ndarray,
                       const: GapConstants) -> GapReport:
    scale = n ** (1.0 - 2.0 * alpha)
    tilde = 0.5 / scale * np.concatenate([[0.0], np.cumsum(lv * lv * np.diff(xg))])
    logE = _log_counting_fcoords(x, n, alpha, xg, lv)
    sup_gap = float(scale * np.max(np.abs(logE - tilde)))
    dev = float(sup_deviation_fcoords(x, xg[-1]))
    rhs = -math.log1p(-xg[-1]) * (const.c1 * n ** -(1.0 - alpha) + const.c2 * dev)
    return GapReport(n, alpha, const.lambda_bound, sup_gap, rhs, const, dev)


@dataclass
class GapSummary:
    n: int
    alpha: float
    eta: float
    T: float
    trials: int
    lambda_bound: float
    c1: float
    c2: float
    exceed_fraction: float
    max_ratio: float
    median_sup_gap: float
    max_sup_gap: float
    median_rhs_bound: float
    bound_holds: bool
    sup_gaps: list = field(default_factory=list, repr=False)

    def to_dict(self, include_samples: bool = False) -> dict:
        d = asdict(self)
        if not include_samples:
            d.pop("sup_gaps")
        return d


def gap_check(F: ContinuousCDF, lam: LambdaFn, n: int, alpha: float, trials: int, eta: float,
              seed: int = 0, T: Optional[float] = None, grid_points: int = 1025,
              workers: Optional[int] = None) -> GapSummary:
    """Per-trial sup_gap and rhs_bound; exceedance means sup_gap > eta.

    T defaults to the time with F(T) = 0.875.
    """
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta!r}")
    if trials < 1 or n < 1:
        raise DomainError("n and trials must be >= 1")
    if not (0.0 <= alpha < 0.5):
        raise DomainError(f"alpha must lie in [0, 1/2), got {alpha!r}")
    T = float(F.quantile(0.875)) if T is None else float(T)
    g, xg = _fgrid(F, uniform_grid(T, grid_points))
    lv = _lambda_on_segments(lam, g)
    const = GapConstants.for_bound(float(np.max(np.abs(lv))))
    rows = int(max(1, min(256, 2**20 // n)))

    def run(block):
        b, size = block
        u = np.sort(_rng.stream(seed, _GAP_KEY, b).random((size, n)), axis=1)
        return [gap_report_fcoords(row, n, alpha, xg, lv, const) for row in u]

    reports = [r for part in _rng.ordered_map(run, _rng.blocks(trials, rows), workers) for r in part]
    gaps = np.array([r.sup_gap for r in reports])
    rhs = np.array([r.rhs_bound for r in reports])
    ratios = np.array([r.ratio for r in reports])
    return GapSummary(
        n=n, alpha=alpha, eta=eta, T=T, trials=trials, lambda_bound=const.lambda_bound,
        c1=const.c1, c2=const.c2,
        exceed_fraction=float(np.mean(gaps > eta)),
        max_ratio=float(ratios.max()),
        median_sup_gap=float(np.median(gaps)),
        max_sup_gap=float(gaps.max()),
        median_rhs_bound=float(np.median(rhs)),
        bound_holds=bool(np.all(gaps <= rhs)),
        sup_gaps=gaps.tolist(),
    )
