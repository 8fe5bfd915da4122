"""Empirical distribution function and its martingale decomposition.

With I^n_t the number of sample points in [0, t], the compensator is

    A^n_t = n * int_0^t (1 - F_n(s)) / (1 - F(s)) dF(s)

and M^n_t = (I^n_t - A^n_t) / sqrt(n). The centered, scaled process
X^{n,a}_t = n^a (F_n(t) - F(t)) is recovered from M^n through the linear map

    Psi(x)_t = x_t - (1 - F(t)) * int_0^t x_s / (1 - F(s))^2 dF(s).

Because F_n is constant between order statistics, every integral above has a
closed form on each segment once the segment ends are expressed in
F-coordinates. Those closed forms are what make the pathwise identities
checkable to rounding error.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng as _rng
from .cdf_model import (
    ContinuousCDF,
    integrate_wrt_F,
    inverse_survival_increment,
    log_survival_ratio,
)
from .errors import DomainError, SingularityError
from .paths import GridPath, uniform_grid


@dataclass(frozen=True, eq=False)
class SortedSample:
    points: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("a sample needs at least one point")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise DomainError("sample points must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return int(self.points.size)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,x_i\n")
        for i, x in enumerate(self.points, start=1):
            buf.write(f"{i},{x:.17g}\n")
        return buf.getvalue()


def sample_from_uniforms(F: ContinuousCDF, u, seed: Optional[int] = None) -> SortedSample:
    """Inverse-CDF transform of the given uniform variates."""
    return SortedSample(F._quantile_raw(np.asarray(u, dtype=float)), seed)


def draw_sample(F: ContinuousCDF, n: int, seed: int) -> SortedSample:
    """n i.i.d. draws from F, deterministic in (seed, n)."""
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    u = _rng.stream(seed).random(n)
    return sample_from_uniforms(F, u, seed)


def empirical_cdf(s: SortedSample, t):
    """F_n(t): fraction of sample points <= t (right-continuous)."""
    arr = np.asarray(t, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"time outside [0, 1]: {t!r}")
    out = np.searchsorted(s.points, arr, side="right") / s.n
    return float(out) if np.ndim(out) == 0 else out


def sup_deviation_fcoords(x, tau: float):
    """sup_{F <= tau} |F_n - F| for samples given in F-coordinates.

    ``x`` holds sorted values F(xi_(i)) along its last axis; a 2-D array is
    treated as one sample per row. The supremum of a step function minus a
    continuous increasing one is attained at a jump (from either side) or at
    the right end, so the candidates are finite in number.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    i = np.arange(1, n + 1, dtype=float)
    inside = x <= tau
    above = np.where(inside, i / n - x, -np.inf)
    below = np.where(inside, x - (i - 1) / n, -np.inf)
    k_right = np.count_nonzero(inside, axis=-1)
    k_left = np.count_nonzero(x < tau, axis=-1)
    end = np.maximum(np.abs(k_right / n - tau), np.abs(k_left / n - tau))
    return np.maximum(np.maximum(above.max(axis=-1), below.max(axis=-1)), end)


def sup_deviation(s: SortedSample, F: ContinuousCDF, T: float = 1.0) -> float:
    """Exact sup_{t in [0, T]} |F_n(t) - F(t)| from the order statistics."""
    if not (0.0 < T <= 1.0):
        raise DomainError(f"horizon must lie in (0, 1], got {T!r}")
    return float(sup_deviation_fcoords(F.eval(s.points), F.eval(T)))


# -- segment tables ---------------------------------------------------------------


@dataclass
class _Segments:
    """Knots (grid nodes and jump points) with per-segment integrals.

    Segment j runs from knot j to knot j+1; on it F_n equals ``q[j]``.
    """

    x: np.ndarray  # F at knots
    fn: np.ndarray  # F_n at knots (right-continuous)
    q: np.ndarray  # F_n on each open segment
    lg: np.ndarray  # int dF / (1 - F)
    d2: np.ndarray  # int dF / (1 - F)^2
    qq: np.ndarray  # int log((1 - x0)/(1 - F)) / (1 - F)^2 dF
    grid_index: np.ndarray  # knot index of each reporting-grid node
    jump_weight: np.ndarray  # sum over points at each knot of 1/(1 - F(xi))
    n: int


def _segments(s: SortedSample, F: ContinuousCDF, grid, exact: bool = True) -> _Segments:
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0:
        raise DomainError("grid must start at t = 0")
    T = grid[-1]
    xT = F.eval(T)
    if xT >= 1.0:
        raise SingularityError(f"grid endpoint T={T!r} has F(T)=1; kernel 1/(1-F) is singular")
    n = s.n
    pts = s.points[s.points <= T]
    t_knots = np.unique(np.concatenate([grid, pts]))
    x = F.eval(t_knots)
    counts = np.searchsorted(s.points, t_knots, side="right")
    fn = counts / n
    q = fn[:-1]
    x0, x1 = x[:-1], x[1:]
    if exact:
        lg = log_survival_ratio(x0, x1)
        d2 = inverse_survival_increment(x0, x1)
        qq = lg / (1.0 - x1) - d2
    else:
        lg = np.empty_like(x0)
        d2 = np.empty_like(x0)
        qq = np.empty_like(x0)
        for j, (a, b) in enumerate(zip(t_knots[:-1], t_knots[1:])):
            lg[j] = integrate_wrt_F(F, lambda _s: 1.0, a, b, kernel_power=1)
            d2[j] = integrate_wrt_F(F, lambda _s: 1.0, a, b, kernel_power=2)
            y0 = 1.0 - x0[j]
            qq[j] = integrate_wrt_F(F, lambda u, y0=y0: math.log(y0 / (1.0 - F._eval_raw(u))),
                                    a, b, kernel_power=2)
    jump_counts = np.diff(np.concatenate([[0], counts]))
    jump_weight = jump_counts / (1.0 - x)
    grid_index = np.searchsorted(t_knots, grid)
    return _Segments(x, fn, q, lg, d2, qq, grid_index, jump_weight, n)


def _cum(a):
    return np.concatenate([[0.0], np.cumsum(a)])


def compensator_path(s: SortedSample, F: ContinuousCDF, grid) -> GridPath:
    """A^n on the grid, integrated exactly between consecutive jumps."""
    seg = _segments(s, F, grid)
    A = _cum(seg.n * (1.0 - seg.q) * seg.lg)
    return GridPath(grid, A[seg.grid_index], "A^n")


@dataclass(frozen=True, eq=False)
class EmpiricalDecomposition:
    alpha: float
    x_path: GridPath
    m_path: GridPath
    a_path: GridPath
    residuals: dict = field(default_factory=dict)


def decompose(s: SortedSample, F: ContinuousCDF, alpha: float, grid=None,
              exact: bool = True) -> EmpiricalDecomposition:
    """Build X^{n,alpha}, M^n, A^n and check the three pathwise identities.

    residuals["i"]:   X = -int X/(1-F) dF + n^{-(1/2-alpha)} M
    residuals["ii"]:  X = n^{-(1/2-alpha)} (1-F) int dM/(1-F)
    residuals["iii"]: X = n^{-(1/2-alpha)} {M - (1-F) int M/(1-F)^2 dF}

    ``exact=False`` replaces the closed-form segment integrals by adaptive
    quadrature (the route used for families without closed forms).
    """
    if not (0.0 <= alpha <= 0.5):
        raise DomainError(f"alpha must lie in [0, 1/2], got {alpha!r}")
    if grid is None:
        grid = uniform_grid(F.quantile(0.95))
    grid = np.asarray(grid, dtype=float)
    seg = _segments(s, F, grid, exact=exact)
    n = seg.n
    rn = math.sqrt(n)
    na = n**alpha
    scale = n ** -(0.5 - alpha)
    x, fn = seg.x, seg.fn
    dx = np.diff(x)
    y = 1.0 - x

    A = _cum(n * (1.0 - seg.q) * seg.lg)
    M = (n * fn - A) / rn
    X = na * (fn - x)

    int_x = na * _cum(dx - (1.0 - seg.q) * seg.lg)
    int_dI = np.cumsum(seg.jump_weight)
    int_dA = _cum(n * (1.0 - seg.q) * seg.d2)
    int_m = _cum(((n * seg.q - A[:-1]) * seg.d2 - n * (1.0 - seg.q) * seg.qq) / rn)

    rhs_i = -int_x + scale * M
    rhs_ii = scale * y * (int_dI - int_dA) / rn
    rhs_iii = scale * (M - y * int_m)

    g = seg.grid_index
    residuals = {
        "i": float(np.max(np.abs(X[g] - rhs_i[g]))),
        "ii": float(np.max(np.abs(X[g] - rhs_ii[g]))),
        "iii": float(np.max(np.abs(X[g] - rhs_iii[g]))),
    }
    return EmpiricalDecomposition(
        alpha,
        GridPath(grid, X[g], "X^{n,alpha}"),
        GridPath(grid, M[g], "M^n"),
        GridPath(grid, A[g], "A^n"),
        residuals,
    )


# -- the Psi map -------------------------------------------------------------------


def _one_minus_log1p_ratio(r):
    """1 - log1p(r)/r, accurate for small r."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 1e-3
    rs = np.where(small, r, 0.0)
    series = rs * (1 / 2 - rs * (1 / 3 - rs * (1 / 4 - rs * (1 / 5 - rs / 6))))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 1.0 - np.log1p(r) / np.where(small, 1.0, r)
    return np.where(small, series, direct)


def _psi_weights(xF: np.ndarray, step: bool):
    """Per-segment weights (left, right) with int_seg x/(1-F)^2 dF = l*x_{i-1} + r*x_i."""
    x0, x1 = xF[:-1], xF[1:]
    d2 = inverse_survival_increment(x0, x1)
    if step:
        return d2, np.zeros_like(d2)
    # x linear in F on the segment: the integral equals x_{i-1}(D - E) + x_i E
    r = (x1 - x0) / (1.0 - x1)
    e = _one_minus_log1p_ratio(r) / (1.0 - x1)
    e = np.where(x1 > x0, e, 0.0)
    return d2 - e, e


def _check_fgrid(grid, F: ContinuousCDF) -> np.ndarray:
    xF = F.eval(np.asarray(grid, dtype=float))
    if xF[-1] >= 1.0:
        raise SingularityError(f"grid endpoint T={grid[-1]!r} has F(T)=1; Psi is singular there")
    return xF


def psi_values(values, xF, step: bool = False):
    """Psi applied along the last axis of ``values`` sampled at F-values ``xF``."""
    values = np.asarray(values, dtype=float)
    left, right = _psi_weights(xF, step)
    seg = values[..., :-1] * left + values[..., 1:] * right
    integral = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(seg, axis=-1)], axis=-1)
    return values - (1.0 - xF) * integral


def psi(x: GridPath, F: ContinuousCDF) -> GridPath:
    """Psi(x)_t = x_t - (1 - F(t)) int_0^t x_s/(1-F(s))^2 dF(s) on x's grid.

    Between nodes x is taken linear in F (or constant, for step paths); the
    segment integrals are then exact.
    """
    xF = _check_fgrid(x.grid, F)
    return x.with_values(psi_values(x.values, xF, x.step), label=f"Psi({x.label})")


def psi_inverse_values(u, xF, step: bool = False):
    """Exact inverse of :func:`psi_values` by forward substitution."""
    u = np.asarray(u, dtype=float)
    left, right = _psi_weights(xF, step)
    y = 1.0 - xF
    v = np.empty_like(u)
    v[..., 0] = u[..., 0]
    acc = np.zeros(u.shape[:-1])
    for j in range(1, u.shape[-1]):
        partial = acc + left[j - 1] * v[..., j - 1]
        v[..., j] = (u[..., j] + y[j] * partial) / (1.0 - y[j] * right[j - 1])
        acc = partial + right[j - 1] * v[..., j]
    return v


def psi_inverse(u: GridPath, F: ContinuousCDF) -> GridPath:
    """The driving path v with psi(v) = u on u's grid.

    Up to discretization this is v_t = u_t + int_0^t u_s/(1-F(s)) dF(s).
    """
    xF = _check_fgrid(u.grid, F)
    return u.with_values(psi_inverse_values(u.values, xF, u.step), label=f"Psi^-1({u.label})")
