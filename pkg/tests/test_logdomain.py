"""
Tests for LogMagnitude

Covers:
- Construction from values and logs
- Exact comparison of magnitudes sharing an overflowing tower
- Addition on shared and distinct towers
- log_probability and scaling
"""
import math

from django.test import SimpleTestCase

from lsv.services.curves import LogMagnitude, total


class LogMagnitudeTest(SimpleTestCase):
    """
    Test suite for LogMagnitude.

    Verifies that:
    1. Plain magnitudes round-trip through from_value / value
    2. Towers too large for a float still compare through their rests
    3. Sums are exact on a shared tower
    4. The probability bound is exp(-M)
    """

    def test_from_value(self):
        m = LogMagnitude.from_value(math.e)
        self.assertFalse(m.has_tower)
        self.assertAlmostEqual(m.log_value, 1.0, places=15)
        self.assertAlmostEqual(m.value, math.e, places=14)

    def test_from_value_rejects_non_positive(self):
        with self.assertRaises(ValueError):
            LogMagnitude.from_value(0.0)

    def test_overflowing_tower_still_orders(self):
        a = LogMagnitude(800.0, 1.0)
        b = LogMagnitude(800.0, 2.0)
        self.assertEqual(a.log_value, math.inf)
        self.assertLess(a, b)
        self.assertGreater(b, a)
        self.assertAlmostEqual(b.log_ratio(a), 1.0)

    def test_distinct_towers(self):
        big = LogMagnitude(10.0, 0.0)
        small = LogMagnitude.from_log(5.0)
        self.assertLess(small, big)
        self.assertAlmostEqual(big.log_ratio(small), math.exp(10.0) - 5.0, places=6)

    def test_equality(self):
        self.assertEqual(LogMagnitude(3.0, 0.5), LogMagnitude(3.0, 0.5))
        self.assertNotEqual(LogMagnitude(3.0, 0.5), LogMagnitude(3.0, 0.6))

    def test_sum_on_shared_tower(self):
        m = LogMagnitude(800.0, 0.0) + LogMagnitude(800.0, 0.0)
        self.assertEqual(m.log_tower, 800.0)
        self.assertAlmostEqual(m.log_rest, math.log(2.0), places=15)

    def test_sum_of_plain_values(self):
        m = LogMagnitude.from_value(2.0) + LogMagnitude.from_value(3.0)
        self.assertAlmostEqual(m.value, 5.0, places=12)

    def test_sum_across_towers_keeps_larger(self):
        big = LogMagnitude(800.0, 0.0)
        m = big + LogMagnitude.from_value(1.0)
        self.assertEqual(m, big)

    def test_total(self):
        m = total(*(LogMagnitude.from_value(1.0) for _ in range(4)))
        self.assertAlmostEqual(m.value, 4.0, places=12)
        with self.assertRaises(ValueError):
            total()

    def test_log_probability(self):
        m = LogMagnitude.from_value(3.0)
        self.assertAlmostEqual(m.log_probability, -3.0, places=12)
        self.assertEqual(LogMagnitude(800.0, 0.0).log_probability, -math.inf)

    def test_scaled_and_times(self):
        m = LogMagnitude(800.0, 1.0)
        self.assertAlmostEqual(m.times(math.e).log_rest, 2.0)
        self.assertAlmostEqual(m.scaled(-1.0).log_rest, 0.0)
        with self.assertRaises(ValueError):
            m.times(0.0)

    def test_as_dict(self):
        data = LogMagnitude.from_log(2.0).as_dict()
        self.assertEqual(data["log_tower"], -math.inf)
        self.assertEqual(data["log_rest"], 2.0)
        self.assertEqual(data["log_value"], 2.0)
