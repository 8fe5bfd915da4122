import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import smooth_paths
from empldp.cdf_model import ContinuousCDF, parse_dist
from empldp.errors import DomainError, SingularityError
from empldp.paths import GridPath, uniform_grid
from empldp.rate_functions import (
    HittingSpec,
    evaluate_rate,
    hitting_minimum,
    hitting_time,
    optimal_grid,
    optimal_path,
    pointwise_rate,
    rate_I,
    rate_J,
    rate_J_via_inverse,
    variational_minimum,
)

FAMILIES = [ContinuousCDF.uniform(), ContinuousCDF.power(2.0)]


def test_rate_I_examples(uniform, square):
    g = uniform_grid(0.5, 4097)
    assert rate_I(GridPath(g, np.zeros_like(g)), uniform) == 0.0
    eps = 0.1
    v = GridPath(g, -2 * eps * np.log1p(-g))
    assert rate_I(v, uniform) == pytest.approx(2 * eps**2, rel=1e-6)
    c, T = 0.7, 0.8
    gs = uniform_grid(T, 33)
    assert rate_I(GridPath(gs, c * square.eval(gs)), square) == pytest.approx(c * c / 2 * square.eval(T), rel=1e-13)


def test_rate_I_infinite_when_not_started_at_zero(uniform):
    g = uniform_grid(0.5, 9)
    assert rate_I(GridPath(g, np.ones_like(g)), uniform) == math.inf
    assert rate_J(GridPath(g, np.ones_like(g)), uniform) == math.inf


def test_flat_segment_named():
    F = parse_dist("pwl:0.3:0.5,0.6:0.5")
    g = np.array([0.0, 0.2, 0.35, 0.5, 0.7])
    with pytest.raises(DomainError, match="0.35"):
        rate_I(GridPath(g, np.zeros_like(g)), F)


def test_rate_J_singular(uniform):
    g = uniform_grid(1.0, 9)
    with pytest.raises(SingularityError):
        rate_J(GridPath(g, 0.1 * g), uniform)


def test_rate_J_zero(uniform):
    g = uniform_grid(0.9, 9)
    assert rate_J(GridPath(g, np.zeros_like(g)), uniform) == 0.0


@pytest.mark.parametrize("F", FAMILIES, ids=["uniform", "pow2"])
def test_optimal_path_cost(F):
    for eps in (0.1, 0.5):
        u = optimal_path(eps, F, optimal_grid(F))
        assert u.values[-1] == eps
        assert rate_J(u, F) == pytest.approx(2 * eps**2, abs=1e-8)


def test_optimal_path_values(uniform):
    u = optimal_path(0.1, uniform, uniform_grid(0.5, 5))
    assert u.values[2] == pytest.approx(0.05)
    with pytest.raises(DomainError, match="F = 1/2"):
        optimal_path(0.1, uniform, uniform_grid(0.6, 5))


@pytest.mark.parametrize("F", FAMILIES, ids=["uniform", "pow2"])
def test_contraction_identity(F):
    g = F.quantile(np.linspace(0.0, 0.9, 2049))
    rng = np.random.default_rng(4)
    for vals in smooth_paths(rng, g, 50):
        u = GridPath(g, vals)
        J = rate_J(u, F)
        assert abs(J - rate_J_via_inverse(u, F)) <= max(1e-6, 1e-3 * J)


@pytest.mark.parametrize("F", FAMILIES, ids=["uniform", "pow2"])
def test_hitting_lower_bound(F):
    g = F.quantile(np.linspace(0.0, 0.95, 513))
    rng = np.random.default_rng(6)
    eps = 0.3
    for vals in smooth_paths(rng, g, 100):
        j = int(rng.integers(10, g.size))
        if vals[j] == 0:
            continue
        u = GridPath(g[: j + 1], vals[: j + 1] * eps / abs(vals[j]))
        spec = HittingSpec.at(eps, F, g[j])
        assert rate_J(u, F) >= hitting_minimum(spec) - 1e-8


def test_scale_property(uniform):
    g = uniform_grid(0.9, 257)
    u = GridPath(g, np.sin(3 * g))
    J = rate_J(u, uniform)
    assert rate_J(u * 2.0, uniform) == 4.0 * J
    assert rate_J(u * 3.0, uniform) == pytest.approx(9.0 * J, rel=1e-14)


def test_rate_J_matches_continuum_quadrature(square):
    # u = sin(2F): in F-coordinates w = 2cos(2x) + sin(2x)/(1-x)
    g = square.quantile(np.linspace(0, 0.8, 4097))
    ev = evaluate_rate(GridPath(g, np.sin(2 * square.eval(g))), square)
    exact = 0.5 * quad(lambda x: (2 * np.cos(2 * x) + np.sin(2 * x) / (1 - x)) ** 2, 0, 0.8,
                       epsabs=1e-13)[0]
    assert ev.value == pytest.approx(exact, rel=1e-6)
    assert ev.derivative_path.values[0] == pytest.approx(2.0, rel=1e-3)


def test_hitting_minimum_examples():
    assert hitting_minimum(HittingSpec(0.1, 0.5, 0.5)) == pytest.approx(0.02)
    assert hitting_minimum(HittingSpec(0.1, 0.25, 0.25)) == pytest.approx(0.0266667, abs=1e-7)
    f = np.linspace(0.01, 0.99, 99)
    vals = [hitting_minimum(HittingSpec(0.1, x, x)) for x in f]
    assert f[int(np.argmin(vals))] == pytest.approx(0.5)
    assert min(vals) == pytest.approx(0.02)
    with pytest.raises(DomainError):
        HittingSpec(0.1, 1.0, 1.0)


def test_pointwise_rate():
    assert pointwise_rate(0.1, 0.5) == pytest.approx(0.02)
    assert pointwise_rate(0.0, 0.3) == 0.0
    with pytest.raises(DomainError):
        pointwise_rate(0.1, 0.0)


def test_variational_minimum_examples(uniform, square):
    assert variational_minimum(0.1, uniform, 0.9) == pytest.approx(0.02, rel=0.01)
    assert variational_minimum(0.5, square, square.quantile(0.9)) == pytest.approx(0.5, rel=0.01)
    eps = 0.1
    assert variational_minimum(eps, uniform, 0.3) == pytest.approx(eps**2 / (2 * 0.3 * 0.7), rel=0.01)
    with pytest.raises(DomainError):
        variational_minimum(0.1, uniform, 0.9, m=32)


def test_variational_minimum_converges(uniform):
    errs = [abs(variational_minimum(0.2, uniform, 0.9, m) - 0.08) for m in (256, 512, 1024)]
    assert errs[0] > errs[1] > errs[2]


def test_variational_minimum_upper_bounds_cs(uniform):
    # a discrete minimizer can only do worse than the continuum minimum
    for T in (0.3, 0.6, 0.9):
        vm = variational_minimum(0.2, uniform, T)
        assert vm >= hitting_minimum(HittingSpec(0.2, min(T, 0.5), min(T, 0.5))) - 1e-12


def test_hitting_time(uniform):
    g = uniform_grid(1.0, 11)
    u = GridPath(g, g.copy())
    assert hitting_time(u, 0.35, uniform) == pytest.approx(0.35)
    assert hitting_time(u, 2.0, uniform) is None
