import math

import numpy as np
import pytest

from empldp.cdf_model import ContinuousCDF
from empldp.errors import DomainError, SingularityError
from empldp.limit_process import (
    covariance_check,
    covariance_kernel,
    fclt_diagnostic,
    limit_via_psi,
    limit_via_sde,
    markov_residual,
    n_process,
    sample_covariance,
    simulate_gaussian_martingale,
    uniform_distance,
)
from empldp.paths import uniform_grid

PAIRS = [(0.1, 0.2), (0.1, 0.9), (0.2, 0.5), (0.3, 0.7), (0.4, 0.4),
         (0.5, 0.5), (0.5, 0.8), (0.6, 0.9), (0.7, 0.7), (0.85, 0.9)]


@pytest.fixture(scope="module")
def martingale():
    return simulate_gaussian_martingale(ContinuousCDF.uniform(), uniform_grid(1.0, 101), 10_000, 17)


def test_martingale_moments(martingale):
    m1 = martingale.at(1.0)
    var, se = sample_covariance(m1, m1)
    assert abs(var - 1.0) <= 4 * se
    se_mean = martingale.values.std(axis=0, ddof=1) / math.sqrt(martingale.count)
    assert np.all(np.abs(martingale.values.mean(axis=0)) <= 4 * se_mean + 1e-300)
    for s, t in [(0.2, 0.6), (0.5, 0.9)]:
        cov, se = sample_covariance(martingale.at(s), martingale.at(t))
        assert abs(cov - min(s, t)) <= 4 * se


def test_paths_start_at_zero(martingale, uniform):
    assert np.all(martingale.values[:, 0] == 0.0)
    x = limit_via_psi(simulate_gaussian_martingale(uniform, uniform_grid(0.9, 65), 50, 1), uniform)
    assert np.all(x.values[:, 0] == 0.0)
    assert np.all(limit_via_sde(uniform, uniform_grid(0.9, 65), 50, 1).values[:, 0] == 0.0)


def test_deterministic_in_seed(uniform):
    g = uniform_grid(0.9, 33)
    a = simulate_gaussian_martingale(uniform, g, 2000, 4).values
    assert np.array_equal(a, simulate_gaussian_martingale(uniform, g, 2000, 4).values)
    assert not np.array_equal(a, simulate_gaussian_martingale(uniform, g, 2000, 5).values)


def test_zero_inputs(uniform):
    g = uniform_grid(0.9, 33)
    zero = simulate_gaussian_martingale(uniform, g, 10, 1, noise_scale=0.0)
    assert np.all(limit_via_psi(zero, uniform).values == 0.0)
    assert np.all(limit_via_sde(uniform, g, 10, 1, noise_scale=0.0).values == 0.0)


def test_singular_horizon(uniform):
    g = uniform_grid(1.0, 33)
    with pytest.raises(SingularityError):
        limit_via_sde(uniform, g, 10, 1)
    with pytest.raises(SingularityError):
        limit_via_psi(simulate_gaussian_martingale(uniform, g, 10, 1), uniform)


def test_covariance_both_methods(uniform):
    g = uniform_grid(0.95, 1025)
    for batch in (limit_via_psi(simulate_gaussian_martingale(uniform, g, 10_000, 23), uniform),
                  limit_via_sde(uniform, g, 10_000, 23)):
        rows = covariance_check(batch, uniform, [(0.3, 0.7), (0.5, 0.5)])
        assert rows[0].kernel == pytest.approx(0.09)
        assert rows[1].kernel == pytest.approx(0.25)
        assert all(abs(r.z) <= 4 for r in rows)


def test_covariance_nonuniform():
    F = ContinuousCDF.power(2.0)
    assert covariance_kernel(F, 0.9, 0.2) == pytest.approx(0.04 * (1 - 0.81))
    g = F.quantile(np.linspace(0.0, 0.95, 513))
    batch = limit_via_psi(simulate_gaussian_martingale(F, g, 10_000, 2), F)
    assert all(abs(r.z) <= 4 for r in covariance_check(batch, F, [(0.2, 0.9), (0.6, 0.8)]))


def test_markov_factorization(uniform):
    F = ContinuousCDF.power(1.7)
    for s, u, t in [(0.1, 0.4, 0.8), (0.2, 0.3, 0.95)]:
        assert markov_residual(F, s, u, t) <= 1e-15
        assert markov_residual(uniform, s, u, t) <= 1e-15


def test_covariance_check_needs_paths(uniform):
    b = simulate_gaussian_martingale(uniform, uniform_grid(0.9, 9), 50, 1)
    with pytest.raises(DomainError):
        covariance_check(b, uniform, [(0.1, 0.2)])


def test_psi_and_sde_agree_and_refine(uniform):
    dist = []
    for pts in (2049, 4097):
        g = uniform_grid(0.875, pts)
        x = limit_via_psi(simulate_gaussian_martingale(uniform, g, 500, 9), uniform)
        y = limit_via_sde(uniform, g, 500, 9)
        dist.append(np.max(np.abs(x.values - y.values)))
    assert dist[1] <= 0.01
    assert 2 / 1.5 <= dist[0] / dist[1] <= 2 * 1.5


def test_n_process_orthogonal_increments(uniform):
    g = uniform_grid(0.9, 91)
    x = limit_via_psi(simulate_gaussian_martingale(uniform, g, 10_000, 31), uniform)
    N = n_process(x, uniform)
    i1, i2 = 30, 70
    cov, se = sample_covariance(N[:, i1], N[:, i2] - N[:, i1])
    assert abs(cov) <= 4 * se
    for i in (30, 50, 80):
        t = g[i]
        var, se = sample_covariance(N[:, i], N[:, i])
        assert abs(var - t / (1 - t)) <= 4 * se


def test_uniform_distance():
    a = np.array([0.1, 0.2, 0.3])
    assert uniform_distance(a, a) == 0.0
    assert uniform_distance(a, a + 10) == 1.0


def test_fclt_trend(uniform):
    big = fclt_diagnostic(uniform, 1000, 4000, seed=3)
    small = fclt_diagnostic(uniform, 10, 4000, seed=3)
    assert big.distance < small.distance
    assert big.median_full_interval == pytest.approx(0.82, abs=0.02)
