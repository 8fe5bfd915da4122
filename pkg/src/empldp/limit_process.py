"""The Gaussian limit: M with <M> = F, and X = Psi(M) solving
X_t = -int_0^t X_s/(1-F(s)) dF(s) + M_t.

Batches are stored as one (count, points) array on a shared grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng as _rng
from .cdf_model import ContinuousCDF
from .empirical_process import _check_fgrid, psi_values, sup_deviation_fcoords
from .errors import DomainError, SingularityError
from .paths import GridPath

METHODS = ("brownian", "psi_of_M", "euler_sde")
DEFAULT_HORIZON_LEVEL = 0.95
# stream namespace so limit noise never shares keys with the Monte Carlo blocks
_NOISE_KEY = 7
_FCLT_KEY = 11
_ROWS_PER_BLOCK = 1024


@dataclass(frozen=True, eq=False)
class LimitPathBatch:
    grid: np.ndarray
    values: np.ndarray  # shape (count, len(grid))
    method: str
    seed: Optional[int]

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.size:
            raise DomainError("values must have shape (count, len(grid))")

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def paths(self) -> list[GridPath]:
        return [GridPath(self.grid, row, self.method) for row in self.values]

    def at(self, t: float) -> np.ndarray:
        """Column of values at time t, linearly interpolated between nodes."""
        g = self.grid
        if not (g[0] <= t <= g[-1]):
            raise DomainError(f"time {t!r} outside the batch grid")
        j = int(np.clip(np.searchsorted(g, t), 1, g.size - 1))
        lam = (t - g[j - 1]) / (g[j] - g[j - 1])
        return (1.0 - lam) * self.values[:, j - 1] + lam * self.values[:, j]

    def to_csv(self, max_paths: Optional[int] = None) -> str:
        rows = self.values if max_paths is None else self.values[:max_paths]
        head = "t," + ",".join(f"path{k}" for k in range(rows.shape[0]))
        body = np.column_stack([self.grid, rows.T])
        lines = [",".join(f"{v:.17g}" for v in r) for r in body]
        return "\n".join([head, *lines]) + "\n"


def _grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or g[0] != 0.0 or np.any(np.diff(g) <= 0) or g[-1] > 1.0:
        raise DomainError("grid must be strictly increasing, start at 0 and lie in [0, 1]")
    return g


def _increments(F: ContinuousCDF, grid: np.ndarray, count: int, seed: int, noise_scale: float):
    """Gaussian increments with variance noise_scale^2 * dF, row-blocked streams."""
    sd = noise_scale * np.sqrt(np.diff(F.eval(grid)))
    out = np.empty((count, grid.size - 1))
    for b, size in _rng.blocks(count, _ROWS_PER_BLOCK):
        out[b * _ROWS_PER_BLOCK: b * _ROWS_PER_BLOCK + size] = (
            _rng.stream(seed, _NOISE_KEY, b).standard_normal((size, grid.size - 1)) * sd
        )
    return out


def _cumulate(dM: np.ndarray) -> np.ndarray:
    return np.concatenate([np.zeros((dM.shape[0], 1)), np.cumsum(dM, axis=1)], axis=1)


def simulate_gaussian_martingale(F: ContinuousCDF, grid, count: int, seed: int = 0,
                                 noise_scale: float = 1.0) -> LimitPathBatch:
    """M = B(F(t)): independent N(0, dF) increments, M_0 = 0."""
    g = _grid(grid)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return LimitPathBatch(g, _cumulate(_increments(F, g, count, seed, noise_scale)), "brownian", seed)


def limit_via_psi(batch: LimitPathBatch, F: ContinuousCDF) -> LimitPathBatch:
    """X = Psi(M) path by path."""
    xF = _check_fgrid(batch.grid, F)
    return LimitPathBatch(batch.grid, psi_values(batch.values, xF), "psi_of_M", batch.seed)


def limit_via_sde(F: ContinuousCDF, grid, count: int, seed: int = 0,
                  noise_scale: float = 1.0) -> LimitPathBatch:
    """Explicit Euler in F-time: X_{i+1} = X_i (1 - dF_i/(1-F_i)) + dM_i.

    Uses the same increments as :func:`simulate_gaussian_martingale`.
    """
    g = _grid(grid)
    xF = F.eval(g)
    if xF[-1] >= 1.0:
        raise SingularityError(f"grid endpoint T={g[-1]!r} has F(T)=1; the drift is singular")
    dM = _increments(F, g, count, seed, noise_scale)
    factor = 1.0 - np.diff(xF) / (1.0 - xF[:-1])
    X = np.zeros((count, g.size))
    for i in range(g.size - 1):
        X[:, i + 1] = X[:, i] * factor[i] + dM[:, i]
    return LimitPathBatch(g, X, "euler_sde", seed)


def n_process(batch: LimitPathBatch, F: ContinuousCDF) -> np.ndarray:
    """N_t = X_t / (1 - F(t)), the orthogonal-increment companion of X."""
    xF = _check_fgrid(batch.grid, F)
    return batch.values / (1.0 - xF)


# -- covariance ---------------------------------------------------------------------


def covariance_kernel(F: ContinuousCDF, t: float, s: float) -> float:
    """K(t, s) = F(s ^ t) (1 - F(s v t))."""
    return float(F.eval(min(s, t)) * (1.0 - F.eval(max(s, t))))


def markov_residual(F: ContinuousCDF, s: float, u: float, t: float) -> float:
    """|K(t,s) - K(t,u) K(u,s) / K(u,u)| for s < u < t."""
    if not (s < u < t):
        raise DomainError("need s < u < t")
    K = lambda a, b: covariance_kernel(F, a, b)  # noqa: E731
    return abs(K(t, s) - K(t, u) * K(u, s) / K(u, u))


@dataclass(frozen=True)
class CovarianceRow:
    s: float
    t: float
    sample: float
    kernel: float
    std_error: float
    z: float

    def to_dict(self) -> dict:
        return {"pair": [self.s, self.t], "sample": self.sample, "kernel": self.kernel,
                "std_error": self.std_error, "z": self.z}


def sample_covariance(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Sample covariance and its standard error (from the spread of centered products)."""
    prod = (a - a.mean()) * (b - b.mean())
    k = a.size
    cov = float(prod.sum() / (k - 1))
    return cov, float(prod.std(ddof=1) / math.sqrt(k))


def covariance_check(batch: LimitPathBatch, F: ContinuousCDF,
                     pairs: Sequence[tuple[float, float]]) -> list[CovarianceRow]:
    if batch.count < 100:
        raise DomainError(f"covariance_check needs at least 100 paths, got {batch.count}")
    rows = []
    for s, t in pairs:
        cov, se = sample_covariance(batch.at(s), batch.at(t))
        K = covariance_kernel(F, t, s)
        rows.append(CovarianceRow(float(s), float(t), cov, K, se, (cov - K) / se if se > 0 else 0.0))
    return rows


# -- FCLT diagnostic -------------------------------------------------------------------


@dataclass(frozen=True)
class FCLTReport:
    n: int
    trials: int
    horizon: float
    distance: float
    median_empirical: float
    median_limit: float
    median_full_interval: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def uniform_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sup_x |ECDF_a(x) - ECDF_b(x)| (two-sample Kolmogorov-Smirnov statistic)."""
    a, b = np.sort(a), np.sort(b)
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def limit_sup(F: ContinuousCDF, grid, count: int, seed: int = 0) -> np.ndarray:
    """sup_t |X_t| for X = Psi(M), simulated in row chunks to bound memory."""
    g = _grid(grid)
    out = np.empty(count)
    for b, size in _rng.blocks(count, _ROWS_PER_BLOCK):
        chunk = limit_via_psi(simulate_gaussian_martingale(F, g, size, _chunk_seed(seed, b)), F)
        out[b * _ROWS_PER_BLOCK: b * _ROWS_PER_BLOCK + size] = np.abs(chunk.values).max(axis=1)
    return out


def _chunk_seed(seed: int, b: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(_FCLT_KEY, b)).generate_state(1, np.uint64)[0] >> 1)


def fclt_diagnostic(F: ContinuousCDF, n: int = 1000, trials: int = 10_000, seed: int = 0,
                    grid_points: int = 4097, level: float = DEFAULT_HORIZON_LEVEL,
                    workers: Optional[int] = None) -> FCLTReport:
    """Compare sqrt(n) sup_{t<=T} |F_n - F| with sup_{t<=T} |X_t| at F(T) = level.

    Psi is singular at F = 1, so both sides use the common horizon T. The
    full-interval statistic's median is reported too (Kolmogorov law median
    is about 0.828).
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if trials < 100:
        raise DomainError(f"trials must be >= 100, got {trials}")
    T = float(F.quantile(level))
    rows = max(16, min(_ROWS_PER_BLOCK, 2**21 // n))

    def run(block):
        b, size = block
        u = np.sort(_rng.stream(seed, _FCLT_KEY, b).random((size, n)), axis=1)
        return sup_deviation_fcoords(u, level), sup_deviation_fcoords(u, 1.0)

    parts = _rng.ordered_map(run, _rng.blocks(trials, rows), workers)
    emp = math.sqrt(n) * np.concatenate([p[0] for p in parts])
    full = math.sqrt(n) * np.concatenate([p[1] for p in parts])
    lim = limit_sup(F, np.linspace(0.0, T, grid_points), trials, seed)
    return FCLTReport(n, trials, T, uniform_distance(emp, lim), float(np.median(emp)),
                      float(np.median(lim)), float(np.median(full)))
