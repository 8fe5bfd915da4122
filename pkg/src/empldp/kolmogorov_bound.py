"""Exponential bound on P(sup |F_n - F| >= eps) via an exponential supermartingale.

    delta(eps) = (eps/8) (log(1 + eps^2/32) - 1) + (4/eps) log(1 + eps^2/32)
    P(sup_t |F_n(t) - F(t)| >= eps) <= 2 exp(-n delta(eps))

The rate comes from maximizing mu*eps/8 - (e^{mu/n} - 1 - mu/n) * 4n/eps over
mu > 0, where 4n/eps caps the compensator A^n_T at the time T with
1 - F(T) = eps/4.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .cdf_model import ContinuousCDF
from .empirical_process import SortedSample, decompose
from .errors import DomainError
from .paths import GridPath


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    n: int
    delta: float
    lambda_star: float
    T: float
    bound: float
    trivial: bool
    compensator_cap: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_epsilon(epsilon: float) -> None:
    if not (epsilon > 0.0):
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if epsilon > 1.0:
        raise DomainError(
            f"epsilon must satisfy epsilon <= 1 (sup|F_n - F| never exceeds 1), got {epsilon!r}"
        )


def delta_epsilon(epsilon: float) -> float:
    """Exponent rate delta(eps); log1p keeps small eps accurate."""
    _check_epsilon(epsilon)
    ell = math.log1p(epsilon * epsilon / 32.0)
    # the two terms nearly cancel for small eps: combine them analytically
    # delta = ell*(eps/8 + 4/eps) - eps/8, with ell = eps^2/32 - eps^4/2048 + ...
    if epsilon < 1e-2:
        z = epsilon * epsilon / 32.0
        # ell*(4/eps) - eps/8 = (4/eps)(ell - z); ell - z = -z^2/2 + z^3/3 - z^4/4 + ...
        tail = -z * z / 2 + z**3 / 3 - z**4 / 4 + z**5 / 5
        return ell * epsilon / 8.0 + 4.0 / epsilon * tail
    return epsilon / 8.0 * (ell - 1.0) + 4.0 / epsilon * ell


def lambda_star(epsilon: float, n: int) -> float:
    """The maximizing tilt n * log(1 + eps^2/32)."""
    _check_epsilon(epsilon)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return n * math.log1p(epsilon * epsilon / 32.0)


def chernoff_objective(mu: float, epsilon: float, n: int) -> float:
    """mu*eps/8 - (e^{mu/n} - 1 - mu/n) * 4n/eps."""
    r = mu / n
    return mu * epsilon / 8.0 - (math.expm1(r) - r) * 4.0 * n / epsilon


def bound(epsilon: float, n: int, F: ContinuousCDF | None = None) -> BoundReport:
    """Evaluate the bound together with its intermediate quantities."""
    _check_epsilon(epsilon)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    F = F or ContinuousCDF.uniform()
    delta = delta_epsilon(epsilon)
    T = F.quantile(1.0 - epsilon / 4.0)
    value = 2.0 * math.exp(-n * delta)
    return BoundReport(
        epsilon=float(epsilon),
        n=int(n),
        delta=delta,
        lambda_star=lambda_star(epsilon, n),
        T=float(T),
        bound=value,
        trivial=value >= 1.0,
        compensator_cap=4.0 * n / epsilon,
    )


def exponential_martingale_path(s: SortedSample, F: ContinuousCDF, lam: float, grid) -> GridPath:
    """z_t = exp(lam/sqrt(n) M^n_t - (e^{lam/n} - lam/n - 1) A^n_t) on the grid."""
    dec = decompose(s, F, 0.0, grid)
    n = s.n
    r = lam / n
    log_z = lam / math.sqrt(n) * dec.m_path.values - (math.expm1(r) - r) * dec.a_path.values
    return GridPath(np.asarray(grid, dtype=float), np.exp(log_z), "z")


def terminal_exponential_martingale(points_f, n: int, lam: float, tau: float):
    """z at F-time tau for many samples at once (rows of ``points_f`` in F-coordinates).

    Uses A^n_tau = sum_k -log(1 - min(F(xi_k), tau)) and I^n_tau = #{F(xi_k) <= tau}.
    """
    x = np.minimum(np.asarray(points_f, dtype=float), tau)
    A = -np.log1p(-x).sum(axis=-1)
    I = np.count_nonzero(np.asarray(points_f) <= tau, axis=-1)
    M = (I - A) / math.sqrt(n)
    r = lam / n
    return np.exp(lam / math.sqrt(n) * M - (math.expm1(r) - r) * A)


__all__ = [
    "BoundReport",
    "bound",
    "chernoff_objective",
    "delta_epsilon",
    "exponential_martingale_path",
    "lambda_star",
    "terminal_exponential_martingale",
]
