import itertools

import numpy as np
import pytest
import scipy.signal

from isopurity.errors import EmptyInput, SeriesTooShort, TooFewSamples
from isopurity.models import EmpiricalDensity
from isopurity.stats import (
    autocorrelation_time,
    effective_sample_size,
    empirical_density,
    integrated_autocorrelation,
    k_statistics,
    kstat,
    ks_one_sample,
    ks_two_sample,
    l1_distance,
)


class TestKStatistics:
    def test_small_sample(self):
        summary = k_statistics([1.0, 2.0, 3.0], max_order=3)
        assert summary.k_stats[1].estimate == 2.0
        assert summary.k_stats[2].estimate == pytest.approx(1.0)
        assert summary.k_stats[3].estimate == pytest.approx(0.0, abs=1e-12)
        assert summary.mean == 2.0

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            k_statistics([1.0, 2.0], max_order=3)
        with pytest.raises(TooFewSamples):
            k_statistics([1.0], max_order=1)

    def test_few_blocks_flagged(self, rng):
        short = k_statistics(rng.normal(size=12), max_order=2)
        assert all(k.few_blocks for k in short.k_stats.values())
        assert short.k_stats[2].stderr is not None
        blocked = k_statistics(rng.normal(size=1_000), max_order=2, block_length=100)
        assert blocked.k_stats[1].few_blocks
        full = k_statistics(rng.normal(size=1_000), max_order=2)
        assert not any(k.few_blocks for k in full.k_stats.values())

    def test_order_five_is_high_variance(self, rng):
        summary = k_statistics(rng.normal(size=500), max_order=5)
        assert summary.k_stats[5].high_variance
        assert not summary.k_stats[4].high_variance

    def test_k5_vanishes_on_symmetric_sample(self):
        x = np.array([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        assert kstat(x, 5) == pytest.approx(0.0, abs=1e-12)

    def test_shift_invariance(self, rng):
        x = rng.exponential(size=300)
        for order in (2, 3, 4, 5):
            assert kstat(x + 1e3, order) == pytest.approx(kstat(x, order), rel=1e-6, abs=1e-9)

    def test_jackknife_error_of_mean(self, rng):
        x = rng.normal(size=10_000)
        err = k_statistics(x, max_order=1).k_stats[1].stderr
        assert err == pytest.approx(0.01, rel=0.3)

    def test_exponential_cumulants(self):
        x = np.random.default_rng(8).exponential(size=200_000)
        k = k_statistics(x, max_order=3).k_stats
        assert abs(k[2].estimate - 1.0) < 4 * k[2].stderr
        assert abs(k[3].estimate - 2.0) < 4 * k[3].stderr

    def test_unbiased_over_all_samples(self):
        # Every length-6 draw from a 5-point population is equally likely,
        # so the average k-statistic must equal the population cumulant exactly.
        population = np.array([0.0, 1.0, 1.5, 4.0, 7.0])
        d = population - population.mean()
        m2, m3, m4, m5 = (float(np.mean(d**p)) for p in (2, 3, 4, 5))
        cumulants = {2: m2, 3: m3, 4: m4 - 3 * m2**2, 5: m5 - 10 * m3 * m2}

        draws = np.array(list(itertools.product(population, repeat=6)))
        for order, expected in cumulants.items():
            average = np.mean([kstat(x, order) for x in draws])
            assert average == pytest.approx(expected, rel=1e-9, abs=1e-9)


class TestEmpiricalDensity:
    def test_two_points(self):
        h = empirical_density([0.5, 1.5], bins=2, range=(0.0, 2.0))
        assert h.densities == [0.5, 0.5]

    def test_uniform(self, rng):
        h = empirical_density(rng.uniform(0, 4, size=400_000), bins=40, range=(0.0, 4.0))
        np.testing.assert_allclose(h.densities, 0.25, rtol=0.05)
        assert float(np.sum(np.asarray(h.densities) * h.widths)) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range_counted(self):
        h = empirical_density([0.5, 2.0, -1.0], bins=2, range=(0.0, 1.0))
        assert h.count == 1
        assert h.out_of_range == 2

    def test_empty(self):
        with pytest.raises(EmptyInput):
            empirical_density([], bins=4, range=(0.0, 1.0))
        with pytest.raises(EmptyInput):
            empirical_density([5.0], bins=4, range=(0.0, 1.0))

    def test_l1_shrinks_with_sample_size(self, rng):
        def beta22_cdf(x):
            x = np.asarray(x)
            return 3 * x**2 - 2 * x**3

        def distance(size):
            h = empirical_density(rng.beta(2.0, 2.0, size=size), bins=20, range=(0.0, 1.0))
            return l1_distance(h, lambda x: 6 * x * (1 - x), cdf=beta22_cdf)

        small, large = distance(1_000), distance(100_000)
        assert large < small / 3
        assert large < 0.03


def grid_histogram(bins: int = 10) -> EmpiricalDensity:
    values = (np.arange(1000) + 0.5) / 1000
    return empirical_density(values, bins=bins, range=(0.0, 1.0))


class TestDistances:
    def test_l1_identical(self):
        assert l1_distance(grid_histogram(), lambda x: 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_l1_linear_density(self):
        assert l1_distance(grid_histogram(), lambda x: 2 * x) == pytest.approx(0.5, abs=0.05)

    def test_l1_cdf_mode(self):
        h = grid_histogram()
        assert l1_distance(h, lambda x: 1.0, cdf=lambda e: np.asarray(e)) == pytest.approx(0.0, abs=1e-12)
        assert l1_distance(h, lambda x: 2 * x, cdf=lambda e: np.asarray(e) ** 2) == pytest.approx(0.5, abs=0.05)

    def test_ks_identical_and_disjoint(self):
        assert ks_two_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
        assert ks_two_sample([1.0], [2.0]) == 1.0

    def test_ks_uniform_samples(self, rng):
        assert ks_two_sample(rng.uniform(size=10_000), rng.uniform(size=10_000)) < 0.03

    def test_ks_one_sample(self):
        values = (np.arange(1000) + 0.5) / 1000
        assert ks_one_sample(values, lambda x: np.clip(x, 0, 1)) == pytest.approx(0.0005, abs=1e-9)

    def test_ks_empty(self):
        with pytest.raises(EmptyInput):
            ks_two_sample([], [1.0])


class TestAutocorrelation:
    def test_iid(self, rng):
        assert 0.4 <= autocorrelation_time(rng.normal(size=10_000)) <= 0.7

    def test_ar1(self, rng):
        series = scipy.signal.lfilter([1.0], [1.0, -0.9], rng.normal(size=100_000))
        assert autocorrelation_time(series) == pytest.approx(9.5, rel=0.2)

    def test_constant(self):
        estimate = integrated_autocorrelation(np.full(200, 0.3))
        assert estimate.tau == 0.5
        assert estimate.zero_variance

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            autocorrelation_time(np.arange(99.0))

    def test_effective_sample_size(self, rng):
        x = rng.normal(size=10_000)
        assert effective_sample_size(x) == pytest.approx(10_000, rel=0.3)
        assert effective_sample_size(x, tau=5.0) == 1_000
