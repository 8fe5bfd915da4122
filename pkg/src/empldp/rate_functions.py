"""Rate functions for the moderate-deviations regime.

Paths are read as piecewise linear in F-coordinates (du = u' dF with u'
constant between grid nodes). Under that reading both rate functionals have
exact segment formulas:

* I(v) = 1/2 int v'^2 dF  ->  1/2 sum (dv/dF)^2 dF
* J(u) = 1/2 int (u' + u/(1-F))^2 dF. On a segment with u = c + a x, the
  integrand is K/(1-x) with K = u_0 + a(1 - x_0), so the segment contributes
  K^2 (1/(1-x_1) - 1/(1-x_0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cdf_model import ContinuousCDF, inverse_survival_increment, log_survival_ratio
from .empirical_process import psi_inverse
from .errors import DomainError, SingularityError
from .paths import GridPath

INFINITE = math.inf


@dataclass(frozen=True)
class HittingSpec:
    epsilon: float
    theta: float
    F_theta: float

    def __post_init__(self):
        if not (0.0 < self.F_theta < 1.0):
            raise DomainError(f"F(theta) must lie in (0, 1), got {self.F_theta!r}")

    @classmethod
    def at(cls, epsilon: float, F: ContinuousCDF, theta: float) -> "HittingSpec":
        return cls(epsilon, theta, F.eval(theta))


@dataclass(frozen=True, eq=False)
class RateEvaluation:
    path: GridPath
    T: float
    value: float
    derivative_path: GridPath
    w_path: GridPath


def _restrict(path: GridPath, T: float) -> GridPath:
    """The path on [0, T], linearly interpolating a final node at T if needed."""
    g, v = path.grid, path.values
    if T > g[-1] + 1e-15 or T <= g[0]:
        raise DomainError(f"horizon {T!r} outside the path grid [{g[0]!r}, {g[-1]!r}]")
    keep = g < T
    if np.isclose(g[np.argmin(np.abs(g - T))], T, rtol=0, atol=1e-15):
        keep = g <= T + 1e-15
        return GridPath(g[keep], v[keep], path.label)
    j = int(np.searchsorted(g, T))
    lam = (T - g[j - 1]) / (g[j] - g[j - 1])
    vT = v[j - 1] + lam * (v[j] - v[j - 1])
    return GridPath(np.append(g[keep], T), np.append(v[keep], vT), path.label)


def _f_slopes(path: GridPath, F: ContinuousCDF):
    xF = F.eval(path.grid)
    dF = np.diff(xF)
    flat = np.flatnonzero(dF <= 0)
    if flat.size:
        j = flat[0]
        raise DomainError(
            f"degenerate grid: F is flat on segment [{path.grid[j]!r}, {path.grid[j + 1]!r}]"
        )
    return xF, dF, np.diff(path.values) / dF


def rate_I(v: GridPath, F: ContinuousCDF, T: float | None = None) -> float:
    """1/2 int_0^T (dv/dF)^2 dF; infinite when v_0 != 0."""
    v = _restrict(v, v.horizon if T is None else T)
    if v.values[0] != 0.0:
        return INFINITE
    _, dF, slope = _f_slopes(v, F)
    return float(0.5 * np.sum(slope * slope * dF))


def evaluate_rate(u: GridPath, F: ContinuousCDF, T: float | None = None) -> RateEvaluation:
    """J_T(u) with the F-derivative and w = u' + u/(1-F) on the grid."""
    u = _restrict(u, u.horizon if T is None else T)
    T = u.horizon
    xF, dF, slope = _f_slopes(u, F)
    if xF[-1] >= 1.0:
        raise SingularityError(f"horizon T={T!r} has F(T)=1; J_T is singular")
    x0, x1 = xF[:-1], xF[1:]
    K = u.values[:-1] + slope * (1.0 - x0)
    deriv = np.append(slope, slope[-1])
    w = np.append(K / (1.0 - x0), K[-1] / (1.0 - x1[-1]))
    if u.values[0] != 0.0:
        value = INFINITE
    else:
        value = float(0.5 * np.sum(K * K * inverse_survival_increment(x0, x1)))
    return RateEvaluation(u, T, value, u.with_values(deriv, label="u'"), u.with_values(w, label="w"))


def rate_J(u: GridPath, F: ContinuousCDF, T: float | None = None) -> float:
    """J_T(u) = 1/2 int_0^T (u' + u/(1-F))^2 dF; infinite when u_0 != 0."""
    return evaluate_rate(u, F, T).value


def rate_J_via_inverse(u: GridPath, F: ContinuousCDF, T: float | None = None) -> float:
    """I(v) for the driving path v = Psi^{-1}(u); equals J_T(u) up to discretization."""
    u = _restrict(u, u.horizon if T is None else T)
    return rate_I(psi_inverse(u, F), F)


def hitting_minimum(spec: HittingSpec) -> float:
    """Lower bound eps^2 / (2 F(theta)(1 - F(theta))) on J over paths hitting eps at theta."""
    f = spec.F_theta
    return spec.epsilon**2 / (2.0 * f * (1.0 - f))


def pointwise_rate(v: float, F_Tstar: float) -> float:
    """v^2 / (2 F(T*)(1 - F(T*)))."""
    if not (0.0 < F_Tstar < 1.0):
        raise DomainError(f"F(T*) must lie in (0, 1), got {F_Tstar!r}")
    return v * v / (2.0 * F_Tstar * (1.0 - F_Tstar))


def optimal_path(epsilon: float, F: ContinuousCDF, grid) -> GridPath:
    """u*_t = 2 eps F(t) on [0, theta*] with F(theta*) = 1/2.

    This is (1 - F(t)) int_0^t w*/(1-F) dF for w* = 2 eps/(1 - F).
    """
    grid = np.asarray(grid, dtype=float)
    end = F.eval(grid[-1])
    if abs(end - 0.5) > 1e-12:
        raise DomainError(f"grid must end where F = 1/2 (the optimal hitting time); F(end) = {end!r}")
    values = 2.0 * epsilon * F.eval(grid)
    values[-1] = epsilon
    return GridPath(grid, values, "u*")


def optimal_grid(F: ContinuousCDF, points: int = 1025) -> np.ndarray:
    """Times on [0, theta*] that are equally spaced in F."""
    return F.quantile(np.linspace(0.0, 0.5, points))


def variational_minimum(epsilon: float, F: ContinuousCDF, T: float, m: int = 1024) -> float:
    """Discrete min of J over piecewise-constant w on an m-segment F-grid.

    For each candidate hitting node j the problem
        minimize 1/2 sum_i w_i^2 dF_i
        s.t.     (1 - F_j) sum_{i<=j} w_i c_i = eps,   c_i = int_seg dF/(1-F)
    has the least-norm solution w_i = mu c_i / dF_i with value
        1/2 (eps/(1 - F_j))^2 / sum_{i<=j} c_i^2/dF_i.
    The minimum over all j is returned.
    """
    if m < 64:
        raise DomainError(f"m must be >= 64, got {m}")
    FT = F.eval(T)
    if FT >= 1.0:
        raise SingularityError(f"horizon T={T!r} has F(T)=1")
    xF = np.linspace(0.0, FT, m + 1)
    dF = np.diff(xF)
    if not np.any(dF > 0):
        raise DomainError("infeasible hitting constraint: all dF are zero")
    c = log_survival_ratio(xF[:-1], xF[1:])
    gram = np.cumsum(c * c / dF)
    target = epsilon / (1.0 - xF[1:])
    values = 0.5 * target**2 / gram
    return float(values.min())


def hitting_time(u: GridPath, epsilon: float, F: ContinuousCDF):
    """First time |u| reaches eps (interpolating linearly in F), or None."""
    hit = np.flatnonzero(np.abs(u.values) >= epsilon)
    if hit.size == 0:
        return None
    j = int(hit[0])
    if j == 0:
        return float(u.grid[0])
    v0, v1 = u.values[j - 1], u.values[j]
    level = math.copysign(epsilon, v1)
    lam = (level - v0) / (v1 - v0)
    x0, x1 = F.eval(u.grid[j - 1]), F.eval(u.grid[j])
    return float(F.quantile(x0 + lam * (x1 - x0)))
