import math

import numpy as np
import pytest

from pdlimits.partition_stats import (
    BoundedValue,
    IntegerPartition,
    PartitionLengthError,
    coalescence_pi,
    conditional_pitman_formula,
    distinct_tuple_sum,
    distinct_tuple_sum_bruteforce,
    fluctuation_statistic,
    integer_partitions,
    moments_phi2_ewens,
    moments_phi2_pd_alpha,
    phi2_gem_corrected,
    phi_m,
)
from pdlimits.py_sampler import RankedWeights, pd0_from_ladder, sample_ladder_batch, spawn_rng
from pdlimits.stats import ks_one_sample, mean_se, ols_slope, sample_skewness, var_se


def random_weights(rng, k):
    w = np.sort(rng.dirichlet(np.ones(k + 1)))[::-1]
    w = w[w > 0]
    return RankedWeights(w[:k], residual_bound=max(0.0, 1.0 - w[:k].sum()))


def test_integer_partition():
    eta = IntegerPartition((1, 2, 2))
    assert eta.parts == (2, 2, 1)
    assert (eta.n, eta.length) == (5, 3)
    assert eta.multiplicities == {1: 1, 2: 2}
    assert IntegerPartition((2, 2)).coefficient == 3
    assert IntegerPartition((1, 1)).coefficient == 1
    assert [p.parts for p in integer_partitions(4)] == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    with pytest.raises(ValueError):
        IntegerPartition((2, 0))


def test_phi_m():
    assert phi_m(RankedWeights([1.0], residual_bound=0.0)) == BoundedValue(1.0, 0.0)
    assert phi_m(RankedWeights([0.5, 0.5], residual_bound=0.0)).value == 0.5
    v = phi_m(RankedWeights([0.5, 0.25], residual_bound=0.25), 3)
    assert v.value == pytest.approx(0.140625) and v.error_bound == pytest.approx(0.25 ** 3)
    with pytest.raises(ValueError):
        phi_m([0.5, 0.5], 1)


def test_phi2_gem_correction():
    # after N sticks of GEM(0, theta) the remainder contributes r^2 / (1 + theta) on average
    assert phi2_gem_corrected(np.array([0.5]), 0.5, 0.0, 1.0) == pytest.approx(0.25 + 0.125)


def test_pitman_examples():
    w = RankedWeights([0.5, 0.5], residual_bound=0.0)
    assert conditional_pitman_formula(w, IntegerPartition((2, 2))) == pytest.approx(0.375)
    w = RankedWeights([0.6, 0.3, 0.1], residual_bound=0.0)
    f2 = conditional_pitman_formula(w, IntegerPartition((2,)))
    f11 = conditional_pitman_formula(w, IntegerPartition((1, 1)))
    assert f2 == pytest.approx(0.46) and f2 + f11 == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(PartitionLengthError):
        conditional_pitman_formula(w, IntegerPartition((1, 1, 1, 1, 1)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_partition_completeness(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        w = rng.dirichlet(np.ones(int(rng.integers(2, 30))))
        total = math.fsum(conditional_pitman_formula(w, eta) for eta in integer_partitions(n))
        assert abs(total - 1.0) < 1e-10


def test_bruteforce_agreement():
    rng = np.random.default_rng(9)
    for k in range(1, 7):
        w = rng.dirichlet(np.ones(k))
        for n in (2, 3, 4):
            for eta in integer_partitions(n):
                if eta.length <= k:
                    a = distinct_tuple_sum(w, eta.parts)
                    b = distinct_tuple_sum_bruteforce(w, eta.parts)
                    assert abs(a - b) < 1e-12
    # more indices than weights leaves no distinct tuple
    assert abs(distinct_tuple_sum([0.5, 0.5], (1, 1, 1))) < 1e-15


def test_pd_alpha_moment_examples():
    m = moments_phi2_pd_alpha(0.0)
    assert (m.mean, m.second_moment, m.variance) == (1.0, 1.0, 0.0)
    m = moments_phi2_pd_alpha(0.5)
    assert m.mean == 0.5
    assert m.second_moment == pytest.approx(1 / 3, rel=1e-15)
    assert m.variance == pytest.approx(1 / 12, rel=1e-15)
    with pytest.raises(ValueError):
        moments_phi2_pd_alpha(1.0)


def test_variance_identity():
    for a in np.random.default_rng(1).uniform(0, 1, 100):
        m = moments_phi2_pd_alpha(float(a))
        assert abs(m.second_moment - m.mean ** 2 - a * (1 - a) / 3) < 1e-12


def test_skewness_order_near_one():
    scaled = [moments_phi2_pd_alpha(a).skewness * math.sqrt(1 - a) for a in (0.9, 0.99, 0.999)]
    assert all(0.5 < s < 2.0 for s in scaled)
    assert max(scaled) / min(scaled) < 1.2


def test_three_pair_term_weight():
    # E sum_{i,j,k distinct} P_i^2 P_j^2 P_k^2 = 2 a^2 (1-a)^3 / 5! under PD(a, 0)
    a = 0.5
    z, u = sample_ladder_batch(spawn_rng(21, 0), 40000, 256)
    lw, _ = pd0_from_ladder(a, z, u)
    w = np.exp(lw)
    p2, p4, p6 = (np.sum(w ** k, axis=1) for k in (2, 4, 6))
    t = p2 ** 3 - 3 * p2 * p4 + 2 * p6
    assert distinct_tuple_sum(w[0], (2, 2, 2)) == pytest.approx(t[0], rel=1e-10)
    m, se = mean_se(t)
    target = 2 * a * a * (1 - a) ** 3 / 120
    assert abs(m - target) < 4 * se
    assert abs(m - target / 2) > 4 * se


def test_three_pair_term_monte_carlo_third_moment():
    a = 0.5
    z, u = sample_ladder_batch(spawn_rng(22, 0), 40000, 256)
    lw, _ = pd0_from_ladder(a, z, u)
    phi2 = np.sum(np.exp(2 * lw), axis=1)
    m, se = mean_se(phi2 ** 3)
    assert abs(m - moments_phi2_pd_alpha(a).third_moment) < 4 * se


def test_ewens_moments():
    m = moments_phi2_ewens(1.0)
    assert m.mean == 0.5 and m.second_moment == pytest.approx(7 / 24, rel=1e-15)
    m = moments_phi2_ewens(1e-9)
    assert m.mean == pytest.approx(1.0) and m.second_moment == pytest.approx(1.0, rel=1e-8)
    skews = [abs(moments_phi2_ewens(t).skewness) for t in (10, 100, 1000)]
    assert skews[0] > skews[1] > skews[2]
    with pytest.raises(ValueError):
        moments_phi2_ewens(0.0)


def test_ewens_third_moment_monte_carlo():
    theta = 2.0
    rng = spawn_rng(23, 0)
    # sticks Beta(1, theta); 120 sticks leave a residual below 1e-12 with overwhelming probability
    u = rng.beta(1.0, theta, size=(40000, 120))
    v = u * np.exp(np.concatenate([np.zeros((40000, 1)), np.cumsum(np.log1p(-u), axis=1)[:, :-1]], axis=1))
    m, se = mean_se(np.sum(v ** 2, axis=1) ** 3)
    assert abs(m - moments_phi2_ewens(theta).third_moment) < 4 * se


def test_coalescence():
    assert coalescence_pi(0.5, 1) == 0.5
    assert coalescence_pi(0.5, 3) == 0.875
    vals = [coalescence_pi(0.9, k) for k in range(1, 200)]
    assert all(a < b for a, b in zip(vals, vals[1:])) and vals[-1] > 0.999999
    with pytest.raises(ValueError):
        coalescence_pi(0.5, 0)


def test_fluctuation_statistic():
    assert fluctuation_statistic(200.0, 1 / 200) == pytest.approx(0.0, abs=1e-14)
    assert fluctuation_statistic(200.0, 0.006) == pytest.approx(2.0, rel=1e-12)
    assert fluctuation_statistic(200.0, np.array([0.005, 0.006])).shape == (2,)


def test_stats_helpers():
    assert mean_se([1.0, 2.0, 3.0])[0] == 2.0
    assert var_se([1.0, 2.0, 3.0, 4.0])[0] == pytest.approx(5 / 3)
    assert sample_skewness([-1.0, 0.0, 1.0]) == 0.0
    _, p = ks_one_sample([0.125, 0.375, 0.625, 0.875], lambda x: np.clip(x, 0, 1))
    assert p > 0.9
    slope, icpt = ols_slope([0, 1, 2], [1, 3, 5])
    assert (slope, icpt) == pytest.approx((2.0, 1.0))
