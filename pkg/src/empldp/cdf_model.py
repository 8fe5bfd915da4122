"""Continuous distribution functions on [0, 1].

Three families are shipped: ``uniform``, ``pow:<p>`` (F(t) = t**p) and
``pwl:<t1>:<q1>,<t2>:<q2>,...`` (piecewise linear through the given knots, with
(0, 0) and (1, 1) added when absent).

Every dF-integral in the package is evaluated in F-coordinates: with x = F(s),
``int g(s) dF(s) = int g(Q(x)) dx``. Kernels in 1/(1 - F) then have closed forms
that do not depend on the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, FlatRegionError, SingularityError

_KINDS = ("uniform", "pow", "pwl")
_QUAD_TOL = 1e-10
_MAX_SPLITS = 2**20


@dataclass(frozen=True)
class ContinuousCDF:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown distribution family {self.kind!r}")
        if self.kind == "pow":
            (p,) = self.params
            if not (p > 0 and math.isfinite(p)):
                raise DomainError(f"pow exponent must be positive, got {p!r}")
        if self.kind == "pwl":
            ts, qs = self.params
            if len(ts) < 2 or ts[0] != 0.0 or ts[-1] != 1.0 or qs[0] != 0.0 or qs[-1] != 1.0:
                raise DomainError("pwl knots must run from (0, 0) to (1, 1)")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise DomainError("pwl knot times must be strictly increasing")
            if any(b < a for a, b in zip(qs, qs[1:])):
                raise DomainError("pwl knot levels must be non-decreasing")

    # -- constructors -------------------------------------------------------

    @classmethod
    def uniform(cls) -> "ContinuousCDF":
        return cls("uniform")

    @classmethod
    def power(cls, p: float) -> "ContinuousCDF":
        return cls("pow", (float(p),))

    @classmethod
    def piecewise_linear(cls, knots) -> "ContinuousCDF":
        pts = sorted((float(t), float(q)) for t, q in knots)
        if not pts or pts[0][0] != 0.0:
            pts.insert(0, (0.0, 0.0))
        if pts[-1][0] != 1.0:
            pts.append((1.0, 1.0))
        ts, qs = zip(*pts)
        return cls("pwl", (tuple(ts), tuple(qs)))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """F(t) for a scalar or array ``t`` in [0, 1]."""
        arr = np.asarray(t, dtype=float)
        if np.any(~((arr >= 0.0) & (arr <= 1.0))):
            raise DomainError(f"time outside [0, 1]: {t!r}")
        out = self._eval_raw(arr)
        return float(out) if np.ndim(out) == 0 else out

    def _eval_raw(self, arr):
        if self.kind == "uniform":
            return arr.copy() if isinstance(arr, np.ndarray) else arr
        if self.kind == "pow":
            return np.power(arr, self.params[0])
        ts, qs = self.params
        return np.interp(arr, ts, qs)

    def density(self, t):
        arr = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            out = np.ones_like(arr)
        elif self.kind == "pow":
            p = self.params[0]
            with np.errstate(divide="ignore"):
                out = p * np.power(arr, p - 1.0)
        else:
            ts, qs = (np.asarray(v) for v in self.params)
            slopes = np.diff(qs) / np.diff(ts)
            idx = np.clip(np.searchsorted(ts, arr, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, q):
        """Inverse of F: the time t with F(t) = q.

        Raises FlatRegionError when F is constant on an interval at level q
        (0 < q < 1), since the inverse is then not unique.
        """
        arr = np.asarray(q, dtype=float)
        if np.any(~((arr >= 0.0) & (arr <= 1.0))):
            raise DomainError(f"probability outside [0, 1]: {q!r}")
        if self.kind == "pwl":
            ts, qs = self.params
            for i in range(len(qs) - 1):
                if qs[i] == qs[i + 1] and 0.0 < qs[i] < 1.0 and np.any(arr == qs[i]):
                    raise FlatRegionError(qs[i], (ts[i], ts[i + 1]))
        out = self._quantile_raw(arr)
        return float(out) if np.ndim(out) == 0 else out

    def _quantile_raw(self, arr):
        if self.kind == "uniform":
            return arr.copy() if isinstance(arr, np.ndarray) else arr
        if self.kind == "pow":
            return np.power(arr, 1.0 / self.params[0])
        ts, qs = (np.asarray(v) for v in self.params)
        # first segment whose upper level reaches q; flat segments are skipped
        idx = np.clip(np.searchsorted(qs, arr, side="left") - 1, 0, len(qs) - 2)
        q0, q1 = qs[idx], qs[idx + 1]
        t0, t1 = ts[idx], ts[idx + 1]
        dq = q1 - q0
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(dq > 0, (arr - q0) / np.where(dq > 0, dq, 1.0), 0.0)
        return t0 + frac * (t1 - t0)

    # -- serialization -------------------------------------------------------

    @property
    def spec(self) -> str:
        if self.kind == "uniform":
            return "uniform"
        if self.kind == "pow":
            return f"pow:{self.params[0]!r}"
        ts, qs = self.params
        inner = [f"{t!r}:{q!r}" for t, q in zip(ts[1:-1], qs[1:-1])]
        return "pwl:" + ",".join(inner)

    def __str__(self):
        return self.spec


def parse_dist(spec: str) -> ContinuousCDF:
    """Parse ``uniform``, ``pow:<p>`` or ``pwl:<t1>:<q1>,...`` (locale-free)."""
    text = spec.strip()
    if text == "uniform":
        return ContinuousCDF.uniform()
    head, _, rest = text.partition(":")
    try:
        if head == "pow":
            return ContinuousCDF.power(float(rest))
        if head == "pwl":
            knots = []
            for item in filter(None, rest.split(",")):
                t, q = item.split(":")
                knots.append((float(t), float(q)))
            return ContinuousCDF.piecewise_linear(knots)
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed distribution spec {spec!r}") from exc
    raise DomainError(f"unknown distribution spec {spec!r}")


# -- integration against dF -----------------------------------------------------


def log_survival_ratio(x0, x1):
    """int_{x0}^{x1} dx / (1 - x) = log((1 - x0)/(1 - x1)), stable for close x0, x1."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return np.log1p((x1 - x0) / (1.0 - x1))


def inverse_survival_increment(x0, x1):
    """int_{x0}^{x1} dx / (1 - x)^2 = 1/(1 - x1) - 1/(1 - x0)."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    return (x1 - x0) / ((1.0 - x0) * (1.0 - x1))


def kernel_integral(F: ContinuousCDF, power: int, a: float, b: float) -> float:
    """Closed form of int_a^b dF(s) / (1 - F(s))**power for power in {0, 1, 2}."""
    x0, x1 = F.eval(a), F.eval(b)
    if power == 0:
        return x1 - x0
    if x1 >= 1.0:
        raise SingularityError(f"kernel 1/(1-F)^{power} is singular at t={b!r} (F=1)")
    if power == 1:
        return float(log_survival_ratio(x0, x1))
    if power == 2:
        return float(inverse_survival_increment(x0, x1))
    raise DomainError(f"no closed form for kernel power {power}")


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = _QUAD_TOL,
                     max_splits: int = _MAX_SPLITS) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    The tolerance is split evenly between halves; refinement stops once
    ``max_splits`` intervals have been created.
    """
    if b == a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    splits = 1
    while stack:
        lo, hi, flo, fmid, fhi, est, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        diff = left + right - est
        if abs(diff) <= 15.0 * eps or splits >= max_splits or hi - lo < 1e-15:
            total += left + right + diff / 15.0
        else:
            splits += 1
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0))
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0))
    return total


def integrate_wrt_F(F: ContinuousCDF, g: Optional[Callable[[float], float]], a: float, b: float,
                    *, kernel_power: int = 0, tol: float = _QUAD_TOL) -> float:
    """int_a^b g(s) / (1 - F(s))**kernel_power dF(s).

    ``g=None`` means g == 1 and uses the closed form. Otherwise the integral is
    taken in F-coordinates by adaptive Simpson to absolute tolerance ``tol``.
    """
    if a > b:
        raise DomainError(f"integration limits out of order: a={a!r} > b={b!r}")
    x0, x1 = F.eval(a), F.eval(b)
    if kernel_power and x1 >= 1.0:
        raise SingularityError(f"kernel 1/(1-F)^{kernel_power} is singular at t={b!r} (F=1)")
    if g is None:
        return kernel_integral(F, kernel_power, a, b)

    def integrand(x):
        s = float(F._quantile_raw(np.asarray(x)))
        return g(s) / (1.0 - x) ** kernel_power

    return adaptive_simpson(integrand, x0, x1, tol)
