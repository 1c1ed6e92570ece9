"""
Tests for the Heston Fourier oracle

Covers:
- Characteristic function: normalisation, Hermitian symmetry, strip checks
- Moments: martingale property, mean of X_T
- Explosion times and critical moments, ordering under rho, the 1e6 cap
- Tails: limits, monotonicity, complementarity, deep tails on the damped contour
- Density: normalisation and consistency with the tail
- Carr-Madan prices against Black in the small vol-of-vol limit
- Oracle smile and its symmetry at rho = 0
"""
import math

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from lsv.exceptions import ModelSpecError, OracleDomainError
from lsv.services.heston_oracle import (
    HestonParams,
    call_price,
    char_fn,
    critical_moment,
    density,
    explosion_time,
    left_tail,
    mean,
    moment,
    oracle_smile,
    otm_price,
    tail,
)
from lsv.services.model import make_bounded_skew_heston, make_heston
from lsv.services.pricing import SOURCE_ORACLE, bs_call

BASE = dict(kappa=1.0, theta=0.09, xi=0.3, rho=-0.5, V0=0.09, T=1.0)


def _params(**overrides):
    return HestonParams(**dict(BASE, **overrides))


class HestonParamsTest(SimpleTestCase):
    """Tests for HestonParams."""

    def test_from_spec(self):
        params = HestonParams.from_spec(make_heston(**BASE))
        self.assertEqual(params, _params())
        self.assertEqual(params.as_dict()["xi"], 0.3)

    def test_from_spec_rejects_other_families(self):
        spec = make_bounded_skew_heston(**BASE, eta0=1.0, epsilon=0.2)
        with self.assertRaises(ModelSpecError):
            HestonParams.from_spec(spec)

    def test_validation(self):
        with self.assertRaises(ModelSpecError):
            _params(xi=0.0)
        with self.assertRaises(ModelSpecError):
            _params(rho=-1.0)


class CharacteristicFunctionTest(SimpleTestCase):
    """
    Test suite for char_fn and moments.

    Verifies that:
    1. phi(0) = 1 and phi(-u) = conj(phi(u))
    2. E[e^{X_T}] = 1
    3. E[X_T] = -1/2 E[int V dt]
    4. Arguments outside the strip raise OracleDomainError
    """

    def setUp(self):
        self.params = _params()

    def test_normalisation(self):
        self.assertAlmostEqual(abs(char_fn(self.params, 0.0) - 1.0), 0.0, places=14)

    def test_hermitian_symmetry(self):
        u = np.array([0.3, 1.0, 5.0, 40.0])
        np.testing.assert_allclose(char_fn(self.params, -u), np.conj(char_fn(self.params, u)), rtol=1e-10)
        self.assertTrue(np.all(np.abs(char_fn(self.params, u)) <= 1.0 + 1e-12))

    def test_martingale(self):
        self.assertAlmostEqual(moment(self.params, 1.0), 1.0, places=10)
        self.assertAlmostEqual(moment(self.params, 0.0), 1.0, places=12)

    def test_mean(self):
        params = _params(V0=0.04)
        integrated = 0.09 + (0.04 - 0.09) * (1.0 - math.exp(-1.0))
        self.assertAlmostEqual(mean(params), -0.5 * integrated, places=6)

    def test_outside_strip(self):
        cm = critical_moment(self.params)
        with self.assertRaises(OracleDomainError):
            char_fn(self.params, -1j * (cm.p_star + 1.0))
        with self.assertRaises(OracleDomainError):
            moment(self.params, -(cm.q_star + 1.0))


class CriticalMomentTest(SimpleTestCase):
    """
    Test suite for explosion_time and critical_moment.

    Verifies that:
    1. Moments of order in [0, 1] never explode
    2. The explosion time at p* equals T
    3. Negative rho pushes p* up and q* down
    4. At rho = 0, p* - 1 = q*
    5. Tiny vol-of-vol hits the 1e6 cap
    """

    def test_no_explosion_inside_unit_interval(self):
        params = _params()
        for omega in (0.0, 0.3, 1.0):
            self.assertEqual(explosion_time(params, omega), math.inf)

    def test_explosion_time_at_critical_moment(self):
        params = _params()
        cm = critical_moment(params)
        self.assertGreater(cm.p_star, 1.0)
        self.assertGreater(cm.q_star, 0.0)
        self.assertFalse(cm.p_capped)
        self.assertAlmostEqual(explosion_time(params, cm.p_star), 1.0, places=4)
        self.assertAlmostEqual(explosion_time(params, -cm.q_star), 1.0, places=4)

    def test_ordering_under_rho(self):
        neg = critical_moment(_params(rho=-0.5))
        pos = critical_moment(_params(rho=0.5))
        self.assertGreater(neg.p_star, pos.p_star)
        self.assertLess(neg.q_star, pos.q_star)

    def test_uncorrelated_symmetry(self):
        cm = critical_moment(_params(rho=0.0))
        self.assertAlmostEqual(cm.p_star - 1.0, cm.q_star, delta=1e-4 * cm.q_star)

    def test_longer_horizon_lowers_critical_moment(self):
        short = critical_moment(_params(T=0.5))
        long = critical_moment(_params(T=2.0))
        self.assertGreater(short.p_star, long.p_star)

    def test_cap(self):
        cm = critical_moment(_params(xi=1e-6, rho=0.0))
        self.assertTrue(cm.p_capped)
        self.assertTrue(cm.q_capped)
        self.assertEqual(cm.p_star, 1e6)


class TailTest(SimpleTestCase):
    """
    Test suite for tail and left_tail.

    Verifies that:
    1. Tails decrease in y and approach their limits
    2. P(X > y) + P(X < y) = 1
    3. Deep tails stay positive and ordered on the damped contour
    4. The tail equals the integrated density
    """

    def setUp(self):
        self.params = _params()

    def test_limits_and_monotonicity(self):
        values = [tail(self.params, y) for y in (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5)]
        self.assertGreater(values[0], 0.99)
        self.assertTrue(all(b < a for a, b in zip(values, values[1:])))
        self.assertGreater(values[2], 0.3)
        self.assertLess(values[2], 0.7)

    def test_complement(self):
        for y in (0.05, 0.3):
            self.assertAlmostEqual(tail(self.params, y) + left_tail(self.params, -y), 1.0, places=8)

    def test_left_tail_heavier_for_negative_rho(self):
        self.assertGreater(left_tail(self.params, 1.0), tail(self.params, 1.0))

    def test_deep_tail(self):
        deep = tail(self.params, 2.0)
        deeper = tail(self.params, 2.5)
        self.assertGreater(deep, 0.0)
        self.assertLess(deep, 1e-4)
        self.assertGreater(deep, deeper)

    def test_deep_left_tail(self):
        deep = left_tail(self.params, 2.0)
        self.assertGreater(deep, 0.0)
        self.assertLess(deep, 1e-2)

    def test_tail_equals_integrated_density(self):
        grid = np.arange(0.5, 3.0001, 0.02)
        values = [p.density for p in density(self.params, grid)]
        integral = integrate.simpson(values, x=grid)
        self.assertAlmostEqual(integral / tail(self.params, 0.5), 1.0, delta=1e-3)


class DensityTest(SimpleTestCase):
    """Tests for density."""

    def test_normalisation(self):
        grid = np.arange(-3.0, 2.0001, 0.02)
        points = density(_params(), grid)
        self.assertTrue(all(p.density >= 0.0 for p in points))
        integral = integrate.simpson([p.density for p in points], x=grid)
        self.assertAlmostEqual(integral, 1.0, delta=1e-3)

    def test_unimodal_around_mean(self):
        points = density(_params(), [-1.0, -0.5, -0.05, 0.5, 1.0])
        values = [p.density for p in points]
        self.assertLess(values[0], values[1])
        self.assertLess(values[1], values[2])
        self.assertGreater(values[2], values[3])
        self.assertGreater(values[3], values[4])


class OptionPriceTest(SimpleTestCase):
    """
    Test suite for Carr-Madan prices.

    Verifies that:
    1. Small vol-of-vol reproduces Black with sigma = sqrt(theta)
    2. Call prices satisfy put-call parity through otm_price
    3. Prices decrease in strike
    """

    def test_black_limit(self):
        params = _params(xi=1e-4)
        for k in (-0.3, 0.0, 0.2):
            self.assertAlmostEqual(call_price(params, k), bs_call(1.0, k, 1.0, 0.3), delta=1e-4)

    def test_parity(self):
        params = _params()
        k = -0.2
        self.assertAlmostEqual(call_price(params, k) - otm_price(params, k), 1.0 - math.exp(k), places=12)

    def test_decreasing_in_strike(self):
        params = _params()
        prices = [call_price(params, k) for k in (-0.5, 0.0, 0.5, 1.0)]
        self.assertTrue(all(b < a for a, b in zip(prices, prices[1:])))
        self.assertTrue(all(0.0 < p < 1.0 for p in prices))


class OracleSmileTest(SimpleTestCase):
    """Tests for oracle_smile."""

    def test_smile_points(self):
        smile = oracle_smile(_params(), [-0.5, 0.0, 0.5])
        self.assertEqual(len(smile), 3)
        for point in smile:
            self.assertEqual(point.source, SOURCE_ORACLE)
            self.assertGreater(point.implied_vol, 0.2)
            self.assertLess(point.implied_vol, 0.4)

    def test_negative_skew(self):
        smile = oracle_smile(_params(), [-0.5, 0.5])
        self.assertGreater(smile.points[0].implied_vol, smile.points[1].implied_vol)

    def test_symmetric_when_uncorrelated(self):
        smile = oracle_smile(_params(rho=0.0), [-0.8, -0.4, 0.4, 0.8])
        vols = [p.implied_vol for p in smile]
        self.assertAlmostEqual(vols[0], vols[3], delta=1e-5)
        self.assertAlmostEqual(vols[1], vols[2], delta=1e-5)
