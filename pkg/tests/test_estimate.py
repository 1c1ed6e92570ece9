"""
Tests for the Monte Carlo estimators

Covers:
- Clopper-Pearson intervals and MCEstimate
- Tube probabilities (grid-restricted and bridge-corrected) on synthetic paths
- Terminal tails and small balls
- Log-slope fits with explicit exclusions
- Exponential moments and the single-path share flag
- Kernel density with NaN where samples are too sparse
"""
import math

import numpy as np
from django.test import SimpleTestCase

from lsv.exceptions import EstimationError
from lsv.services.curves import optimal_curves
from lsv.services.estimate import (
    BRIDGE_CORRECTED,
    GRID_RESTRICTED,
    MCEstimate,
    clopper_pearson,
    exp_moment,
    fit_log_slope,
    increment_scaling,
    kde_log_density,
    small_ball,
    tail_slope,
    terminal_tail,
    tube_probability,
)
from lsv.services.model import make_heston
from lsv.services.simulate import KEEP_FULL, KEEP_TERMINAL, PathBatch, Scheme

HESTON = dict(kappa=1.0, theta=0.09, xi=0.3, rho=-0.5, V0=0.09, T=1.0)


def _batch(spec, grid, x, v, keep=KEEP_FULL):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return PathBatch(
        spec=spec,
        n_paths=x.shape[0],
        n_steps=len(grid) - 1 if keep == KEEP_FULL else 1,
        grid=np.asarray(grid, dtype=float),
        x_paths=x,
        v_paths=v,
        seed=0,
        scheme=Scheme.EULER_FULL_TRUNCATION,
        keep=keep,
    )


def _terminal(spec, x_terminal, v_terminal=None):
    x_terminal = np.asarray(x_terminal, dtype=float)
    if v_terminal is None:
        v_terminal = np.full_like(x_terminal, spec.V0)
    x = np.column_stack([np.zeros_like(x_terminal), x_terminal])
    v = np.column_stack([np.full_like(x_terminal, spec.V0), v_terminal])
    return _batch(spec, [0.0, spec.T], x, v, keep=KEEP_TERMINAL)


class ClopperPearsonTest(SimpleTestCase):
    """Tests for exact binomial intervals."""

    def test_zero_hits(self):
        low, high = clopper_pearson(0, 10)
        self.assertEqual(low, 0.0)
        self.assertAlmostEqual(high, 1.0 - 0.025 ** 0.1, places=10)

    def test_all_hits(self):
        low, high = clopper_pearson(10, 10)
        self.assertAlmostEqual(low, 0.025 ** 0.1, places=10)
        self.assertEqual(high, 1.0)

    def test_interior(self):
        low, high = clopper_pearson(50, 100)
        self.assertLess(low, 0.5)
        self.assertGreater(high, 0.5)
        self.assertAlmostEqual(low + high, 1.0, places=10)

    def test_invalid(self):
        with self.assertRaises(EstimationError):
            clopper_pearson(0, 0)
        with self.assertRaises(EstimationError):
            clopper_pearson(11, 10)

    def test_estimate_from_counts(self):
        est = MCEstimate.from_counts(5, 100)
        self.assertEqual(est.p_hat, 0.05)
        self.assertLess(est.ci_low, 0.05)
        self.assertGreater(est.ci_high, 0.05)
        self.assertEqual(est.estimator, GRID_RESTRICTED)
        self.assertEqual(est.as_dict()["hits"], 5)


class TubeProbabilityTest(SimpleTestCase):
    """
    Test suite for tube_probability.

    Verifies that:
    1. Paths sitting on the curve are all counted
    2. A displaced path is not counted
    3. The bridge-corrected weight never exceeds the grid count
    4. Grid mismatches raise EstimationError
    5. Streamed chunks give the same count as one batch
    """

    def setUp(self):
        self.spec = make_heston(**HESTON)
        self.curve = optimal_curves(1.0, self.spec, steps=20)
        on_x = np.tile(self.curve.x_tilde, (5, 1))
        on_v = np.tile(self.curve.v_tilde, (5, 1))
        off_x = self.curve.x_tilde + 1.0
        self.batch = _batch(
            self.spec, self.curve.grid,
            np.vstack([on_x, off_x]), np.vstack([on_v, self.curve.v_tilde]),
        )

    def test_grid_restricted(self):
        est = tube_probability(self.batch, self.curve)
        self.assertEqual(est.hits, 5)
        self.assertEqual(est.n, 6)
        self.assertAlmostEqual(est.p_hat, 5.0 / 6.0)

    def test_bridge_corrected(self):
        est = tube_probability(self.batch, self.curve, estimator=BRIDGE_CORRECTED)
        self.assertGreater(est.hits, 0.0)
        self.assertLessEqual(est.hits, 5.0)
        self.assertEqual(est.estimator, BRIDGE_CORRECTED)

    def test_chunks_add_up(self):
        first = _batch(self.spec, self.curve.grid, self.batch.x_paths[:3], self.batch.v_paths[:3])
        second = _batch(self.spec, self.curve.grid, self.batch.x_paths[3:], self.batch.v_paths[3:])
        est = tube_probability([first, second], self.curve)
        self.assertEqual(est.hits, 5)
        self.assertEqual(est.n, 6)

    def test_off_grid_batch_uses_closed_form(self):
        fine = optimal_curves(1.0, self.spec, steps=40)
        batch = _batch(self.spec, fine.grid, np.tile(fine.x_tilde, (2, 1)), np.tile(fine.v_tilde, (2, 1)))
        self.assertEqual(tube_probability(batch, self.curve).hits, 2)

    def test_horizon_mismatch(self):
        grid = np.linspace(0.0, 0.5, 21)
        batch = _batch(self.spec, grid, np.zeros((2, 21)), np.full((2, 21), 0.09))
        with self.assertRaises(EstimationError):
            tube_probability(batch, self.curve)

    def test_unknown_estimator(self):
        with self.assertRaises(EstimationError):
            tube_probability(self.batch, self.curve, estimator="exact")

    def test_empty_stream(self):
        with self.assertRaises(EstimationError):
            tube_probability([], self.curve)


class TerminalEstimatorTest(SimpleTestCase):
    """Tests for terminal_tail and small_ball."""

    def setUp(self):
        self.spec = make_heston(**HESTON)

    def test_terminal_tail(self):
        batch = _terminal(self.spec, [-3.0, -1.0, 0.0, 1.0, 3.0])
        right, left = terminal_tail(batch, 2.0)
        self.assertEqual(right.hits, 1)
        self.assertEqual(left.hits, 1)
        self.assertAlmostEqual(right.p_hat, 0.2)
        with self.assertRaises(EstimationError):
            terminal_tail(batch, 0.0)

    def test_small_ball(self):
        batch = _terminal(self.spec, [20.0, 20.5, 25.0], [20.09, 20.09, 20.09])
        est = small_ball(batch, 20.0, 1.0)
        self.assertEqual(est.hits, 2)
        with self.assertRaises(EstimationError):
            small_ball(batch, 20.0, 0.0)


class SlopeFitTest(SimpleTestCase):
    """
    Test suite for fit_log_slope and tail_slope.

    Verifies that:
    1. An exact exponential is fitted exactly
    2. Non-positive probabilities are excluded with a reason
    3. tail_slope fits between the lowest and highest qualifying y and lists every drop
    4. Too few qualifying points raise EstimationError
    """

    def test_exact_exponential(self):
        ys = [1.0, 2.0, 3.0, 4.0]
        fit = fit_log_slope(ys, [math.exp(1.0 - 2.0 * y) for y in ys])
        self.assertAlmostEqual(fit.slope, -2.0, places=12)
        self.assertAlmostEqual(fit.intercept, 1.0, places=12)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=12)

    def test_non_positive_excluded(self):
        fit = fit_log_slope([1.0, 2.0, 3.0, 4.0], [0.1, 0.01, 0.001, 0.0])
        self.assertEqual(fit.excluded, [(4.0, "non-positive probability")])
        self.assertEqual(fit.y_range, (1.0, 3.0))

    def test_too_few_points(self):
        with self.assertRaises(EstimationError):
            fit_log_slope([1.0, 2.0], [0.1, 0.01])

    def test_tail_slope_range(self):
        n = 10_000
        tails = [
            (1.0, MCEstimate.from_counts(1000, n)),
            (2.0, MCEstimate.from_counts(20, n)),
            (3.0, MCEstimate.from_counts(300, n)),
            (4.0, MCEstimate.from_counts(100, n)),
            (5.0, MCEstimate.from_counts(10, n)),
        ]
        fit = tail_slope(tails)
        self.assertEqual([p[0] for p in fit.points], [1.0, 3.0, 4.0])
        self.assertEqual(dict(fit.excluded), {2.0: "fewer than 30 hits", 5.0: "outside fit range"})
        self.assertLess(fit.slope, 0.0)

    def test_tail_slope_needs_points(self):
        tails = [(y, MCEstimate.from_counts(5, 1000)) for y in (1.0, 2.0, 3.0)]
        with self.assertRaises(EstimationError):
            tail_slope(tails)


class MomentTest(SimpleTestCase):
    """Tests for exp_moment and increment_scaling validation."""

    def test_exp_moment_of_constant(self):
        est = exp_moment(np.zeros(200), 3.0)
        self.assertAlmostEqual(est.estimate, 1.0, places=12)
        self.assertAlmostEqual(est.std_error, 0.0, places=12)
        self.assertAlmostEqual(est.max_share, 1.0 / 200.0, places=12)
        self.assertFalse(est.unreliable)

    def test_heavy_path_flagged(self):
        x = np.zeros(1000)
        x[0] = 5.0
        est = exp_moment(x, 1.0)
        self.assertTrue(est.unreliable)
        self.assertAlmostEqual(est.estimate, (999.0 + math.exp(5.0)) / 1000.0, places=10)

    def test_exp_moment_from_batch(self):
        spec = make_heston(**HESTON)
        est = exp_moment(_terminal(spec, [0.0, math.log(3.0)]), 1.0)
        self.assertAlmostEqual(est.estimate, 2.0, places=12)
        self.assertEqual(est.n, 2)

    def test_exp_moment_empty(self):
        with self.assertRaises(EstimationError):
            exp_moment(np.array([]), 1.0)

    def test_increment_scaling_validation(self):
        spec = make_heston(**HESTON)
        with self.assertRaises(EstimationError):
            increment_scaling(spec, 1, [0.01, 0.1], 100)
        with self.assertRaises(EstimationError):
            increment_scaling(spec, 1, [0.01, 0.02, 0.05], 100)
        with self.assertRaises(EstimationError):
            increment_scaling(spec, 0, [0.001, 0.01, 0.1], 100)
        with self.assertRaises(EstimationError):
            increment_scaling(spec, 1, [0.01, 0.1, 2.0], 100)

    def test_increment_scaling_shape(self):
        spec = make_heston(**HESTON)
        fit = increment_scaling(spec, 1, [0.1, 0.01, 0.001], 500, seed=1, steps_per_interval=10)
        self.assertEqual(fit.dts, [0.001, 0.01, 0.1])
        self.assertEqual(len(fit.moments), 3)
        self.assertTrue(all(m > 0 for m in fit.moments))
        self.assertGreater(fit.slope, 0.0)


class KernelDensityTest(SimpleTestCase):
    """Tests for kde_log_density."""

    def test_standard_normal(self):
        samples = np.random.default_rng(0).standard_normal(20_000)
        values = dict(kde_log_density(samples, [0.0, 1.0, 10.0]))
        self.assertAlmostEqual(values[0.0], -0.5 * math.log(2.0 * math.pi), delta=0.05)
        self.assertAlmostEqual(values[1.0], -0.5 - 0.5 * math.log(2.0 * math.pi), delta=0.05)
        self.assertTrue(math.isnan(values[10.0]))

    def test_validation(self):
        with self.assertRaises(EstimationError):
            kde_log_density(np.zeros(10), [])
        with self.assertRaises(EstimationError):
            kde_log_density(np.zeros(1), [0.0])
