import math

import numpy as np
from django.test import SimpleTestCase

from apps.averaging.coefficients import (
    AveragedCoeffs,
    AveragedPoint,
    averaged_coefficients,
    averaged_diffusion,
    averaged_drift,
    averaged_header,
    build_averaged,
    sqrt_psd,
)
from apps.averaging.estimates import Estimate, batch_means
from apps.averaging.exceptions import (
    AsymmetricMatrixError,
    AveragingError,
    DissipativityError,
    NotPositiveSemidefiniteError,
)
from apps.averaging.invariant import AveragingConfig, estimate_invariant, gaussian_expectation
from apps.averaging.poisson import (
    KappaConfig,
    fit_kappa_bound,
    kappa,
    lipschitz_probe,
    poisson_residual,
    second_moment_bound,
)

from .helpers import example_system, scalar_system

S, NU = 0.3, 0.5
CFG = AveragingConfig()
SMALL = AveragingConfig(n=2000, chains=8)
# stationary variance of the Euler chain for dY = (s - Y/2)dt + nu dW
EULER_VAR = NU ** 2 / (1.0 - CFG.dt / 4.0)


class EstimateTests(SimpleTestCase):
    def test_negative_stderr_rejected(self):
        with self.assertRaises(ValueError):
            Estimate(value=1.0, stderr=-0.1, n_samples=3)

    def test_constant_samples_are_exact(self):
        samples = np.full((40, 4), 0.1)
        estimate = batch_means(samples)
        self.assertEqual(float(estimate.value), 0.1)
        self.assertEqual(float(estimate.stderr), 0.0)
        self.assertEqual(estimate.n_samples, 160)

    def test_batch_means_of_iid_noise(self):
        rng = np.random.default_rng(3)
        estimate = batch_means(rng.standard_normal((2000, 8)))
        self.assertLess(abs(float(estimate.value)), 4 * float(estimate.stderr))
        self.assertAlmostEqual(float(estimate.stderr), 1 / math.sqrt(16000), delta=0.004)

    def test_agrees_with(self):
        a = Estimate(value=[1.0, 2.0], stderr=[0.1, 0.1], n_samples=10)
        self.assertTrue(a.agrees_with([1.2, 2.0]))
        self.assertFalse(a.agrees_with([1.5, 2.0]))


class InvariantMeasureTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.measure = estimate_invariant(example_system(), [0.0], CFG)

    def test_example_moments(self):
        mean = self.measure.mean
        self.assertLessEqual(abs(float(mean.value[0]) - 2 * S), 3 * float(mean.stderr[0]))
        variance = self.measure.expect(lambda y: (y[0] - 2 * S) ** 2)
        self.assertLessEqual(abs(float(variance.value) - EULER_VAR), 3 * float(variance.stderr))
        self.assertAlmostEqual(float(self.measure.covariance[0, 0]) / NU ** 2, 1.0, delta=0.1)
        self.assertAlmostEqual(self.measure.alpha_hat, 0.5, delta=1e-9)
        self.assertEqual(self.measure.samples.shape, (CFG.per_chain, CFG.chains, 1))
        self.assertGreater(self.measure.n_effective, 100)

    def test_point_mass(self):
        spec = scalar_system(b1='0', sigma1='1', b2='-y', sigma2='0', y0=1.0)
        cfg = AveragingConfig(n=1000, chains=4, burn_in=40.0, override=True)
        measure = estimate_invariant(spec, [0.0], cfg)
        self.assertLessEqual(float(measure.covariance[0, 0]), 1e-10)

    def test_dissipativity_precondition(self):
        spec = scalar_system(b1='0', sigma1='1', b2='y', sigma2='1')
        with self.assertRaises(DissipativityError):
            estimate_invariant(spec, [0.0], SMALL)

    def test_thread_count_does_not_change_samples(self):
        spec = example_system()
        one = estimate_invariant(spec, [0.0], SMALL, threads=1)
        many = estimate_invariant(spec, [0.0], SMALL, threads=4)
        np.testing.assert_array_equal(one.samples, many.samples)

    def test_second_moment_fit(self):
        report = second_moment_bound(example_system(), [[0.0], [1.0], [2.0]], SMALL)
        self.assertAlmostEqual(report.C_hat, 4 * S ** 2 + NU ** 2, delta=0.06)
        self.assertEqual(report.C_hat, report.ratios[0])


class AveragedCoefficientTests(SimpleTestCase):
    def test_drift_without_fast_dependence_is_exact(self):
        spec = example_system(b1='x + 1')
        estimate = averaged_drift(spec, [0.5], CFG)
        self.assertEqual(float(estimate.value[0]), 1.5)
        self.assertEqual(float(estimate.stderr[0]), 0.0)

    def test_example_drift_vanishes(self):
        self.assertEqual(float(averaged_drift(example_system(), [0.0]).value[0]), 0.0)

    def test_cosine_drift(self):
        estimate = averaged_drift(example_system(b1='cos(y)'), [0.0], CFG)
        oracle = gaussian_expectation(np.cos, 2 * S, math.sqrt(EULER_VAR))
        self.assertAlmostEqual(oracle, math.cos(2 * S) * math.exp(-NU ** 2 / 2), delta=1e-3)
        self.assertLessEqual(abs(float(estimate.value[0]) - oracle), 3 * float(estimate.stderr[0]))

    def test_example_diffusion(self):
        estimate = averaged_diffusion(example_system(), [0.0], CFG)
        oracle = 0.5 * (1 + math.cos(4 * S) * math.exp(-2 * NU ** 2))
        quadrature = gaussian_expectation(lambda y: np.cos(y) ** 2, 2 * S, math.sqrt(EULER_VAR))
        self.assertAlmostEqual(quadrature, oracle, delta=1e-3)
        self.assertLessEqual(abs(float(estimate.value[0, 0]) - quadrature), 3 * float(estimate.stderr[0, 0]))

    def test_constant_and_zero_diffusion(self):
        self.assertEqual(float(averaged_diffusion(example_system(sigma1='0.7'), [0.0]).value[0, 0]), 0.7 * 0.7)
        self.assertEqual(float(averaged_diffusion(example_system(sigma1='0'), [0.0]).value[0, 0]), 0.0)

    def test_disjoint_seeds_agree(self):
        spec = example_system()
        one = averaged_diffusion(spec, [0.0], CFG.replace(seed=1))
        two = averaged_diffusion(spec, [0.0], CFG.replace(seed=2))
        self.assertTrue(one.agrees_with(two, sigmas=3.0))

    def test_point_factorisation(self):
        point = averaged_coefficients(example_system(), [0.0], SMALL)
        np.testing.assert_allclose(point.sigma_bar @ point.sigma_bar, point.a_bar.value, atol=1e-8)
        self.assertEqual(len(point.row()), len(averaged_header(1)))
        self.assertEqual(averaged_header(1)[:3], ['x0', 'bbar0', 'abar0'])


class SqrtPsdTests(SimpleTestCase):
    def test_identity(self):
        np.testing.assert_allclose(sqrt_psd(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            g = rng.standard_normal((4, 3))
            a = g @ g.T
            root = sqrt_psd(a)
            self.assertLessEqual(np.linalg.norm(root @ root - a), 1e-8)
            self.assertLessEqual(np.max(np.abs(root - root.T)), 1e-12)
            self.assertGreaterEqual(np.linalg.eigvalsh(root)[0], -1e-10)

    def test_tiny_negative_eigenvalue_clipped(self):
        root = sqrt_psd(np.diag([1.0, -1e-12]))
        np.testing.assert_allclose(root, np.diag([1.0, 0.0]), atol=1e-12)

    def test_rejections(self):
        with self.assertRaises(AsymmetricMatrixError):
            sqrt_psd([[1.0, 0.5], [0.0, 1.0]])
        with self.assertRaises(NotPositiveSemidefiniteError):
            sqrt_psd(np.diag([1.0, -1e-6]))


def _point(x, b, a):
    return AveragedPoint(
        x=np.array([x]), b_bar=Estimate.exact([b]), a_bar=Estimate.exact([[a]]), sigma_bar=np.array([[math.sqrt(a)]]),
    )


class AveragedCoeffsTests(SimpleTestCase):
    def test_constant_map(self):
        avg = AveragedCoeffs.constant([0.2], [[0.25]])
        np.testing.assert_array_equal(avg.drift([3.0]), [0.2])
        np.testing.assert_array_equal(avg.diffusion([3.0]), [[0.25]])
        np.testing.assert_allclose(avg.sigma([3.0]), [[0.5]])
        self.assertEqual(avg.drift(np.zeros((1, 5))).shape, (1, 5))
        self.assertEqual(avg.diffusion(np.zeros((1, 5))).shape, (1, 1, 5))

    def test_interpolation_hits_nodes_and_clamps(self):
        avg = AveragedCoeffs.interpolated([_point(1.0, 1.0, 0.5), _point(0.0, 0.0, 0.25), _point(2.0, 2.0, 1.0)])
        self.assertAlmostEqual(float(avg.drift([1.0])[0]), 1.0)
        self.assertAlmostEqual(float(avg.diffusion([2.0])[0, 0]), 1.0)
        self.assertAlmostEqual(float(avg.drift([5.0])[0]), 2.0)
        self.assertGreaterEqual(float(avg.diffusion([0.3])[0, 0]), 0.25)

    def test_interpolation_needs_two_points(self):
        with self.assertRaises(AveragingError):
            AveragedCoeffs.interpolated([_point(0.0, 0.0, 1.0)])

    def test_build_constant_for_example(self):
        avg = build_averaged(example_system(), SMALL)
        self.assertEqual(float(avg.drift([0.7])[0]), 0.0)
        self.assertAlmostEqual(float(avg.sigma([0.7])[0, 0]) ** 2, float(avg.diffusion([0.0])[0, 0]))

    def test_build_interpolated(self):
        spec = example_system(b1='-x + cos(y)')
        with self.assertRaises(AveragingError):
            build_averaged(spec, SMALL)
        avg = build_averaged(spec, SMALL, x_grid=[-1.0, 0.0, 1.0])
        shift = float(avg.drift([0.0])[0])
        self.assertAlmostEqual(float(avg.drift([1.0])[0]), shift - 1.0, places=9)


class KappaTests(SimpleTestCase):
    AVG = AveragedCoeffs.constant([0.0], [[0.5 * (1 + math.cos(4 * S) * math.exp(-2 * NU ** 2))]])

    def test_zero_momentum(self):
        estimate = kappa(example_system(), [0.0], np.linspace(-1, 1, 5), [0.0], self.AVG)
        np.testing.assert_array_equal(estimate.value, np.zeros(5))

    def test_fast_free_coefficients(self):
        spec = example_system(b1='x', sigma1='0.5')
        avg = AveragedCoeffs.constant([0.0], [[0.25]])
        estimate = kappa(spec, [0.0], [0.3], [1.0], avg)
        np.testing.assert_array_equal(estimate.value, [0.0])

    def test_generator_residual(self):
        y_grid = np.linspace(2 * S - 3 * NU, 2 * S + 3 * NU, 21)
        report = poisson_residual(example_system(), self.AVG, [0.0], [1.0], y_grid, KappaConfig())
        self.assertTrue(report.passed, report.max_residual)
        self.assertLessEqual(report.max_residual, 0.1)

    def test_growth_bound_holds_on_fine_grid(self):
        coarse = np.linspace(-0.9, 2.1, 11)
        fine = np.linspace(-0.9, 2.1, 110)
        report = fit_kappa_bound(
            example_system(), self.AVG, coarse, fine, KappaConfig(t_max=15.0, n_paths=100),
        )
        self.assertTrue(report.passed)
        self.assertGreater(report.C_hat, 0.0)


class LipschitzProbeTests(SimpleTestCase):
    def test_slow_free_of_x(self):
        report = lipschitz_probe(example_system(), [([0.0], [1.0]), ([-1.0], [0.5])], SMALL)
        self.assertLess(report.C_hat, 1e-12)

    def test_linear_drift(self):
        report = lipschitz_probe(example_system(b1='x + cos(y)'), [([0.0], [1.0]), ([-1.0], [0.5])], SMALL)
        self.assertAlmostEqual(report.C_hat, 1.0, places=9)
        self.assertEqual(len(report.errors), 2)
