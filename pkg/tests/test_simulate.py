import os
import tempfile

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from apps.expr.fields import CoeffField
from apps.monotone.operators import NormalConeBall, NormalConeBox, SubdiffQuadratic, Zero, graph_sample
from apps.simulate.exceptions import (
    FastScaleInstabilityError,
    InvalidConfigError,
    InvalidScaleError,
    InvalidSystemError,
    NotInteriorError,
)
from apps.simulate.noise import BlockNoise, Channel, NoiseStream
from apps.simulate.parallel import ordered_map, path_blocks
from apps.simulate.scheme import (
    Coupling,
    SlowFastPath,
    run_ensemble,
    run_frozen,
    run_paths,
    run_system,
    step_slow,
    write_paths_csv,
)
from apps.simulate.system import ScaleParams, SimConfig, SystemSpec
from apps.simulate.verifiers import (
    verify_discrete_vi,
    verify_dissipativity,
    verify_interior_estimate,
    verify_lyapunov,
    verify_slow_coefficients,
)

from .helpers import example_system, scalar_system, unit_box

SLOW = ScaleParams(epsilon=0.1, gamma=0.5)


class SystemValidationTest(SimpleTestCase):

    def test_initial_state_must_be_in_domain(self):
        with self.assertRaises(InvalidSystemError):
            scalar_system('0', '0', '0', '0', operator=unit_box(), x0=1.5)

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidSystemError):
            SystemSpec.from_sources((1, 1), b1='0', sigma1='0', b2='0', sigma2='0', A=Zero(2), x0=[0.0], y0=[0.0])

    def test_scale_params_open_interval(self):
        with self.assertRaises(InvalidScaleError):
            ScaleParams(epsilon=1.0, gamma=0.1)
        with self.assertRaises(InvalidScaleError):
            ScaleParams(epsilon=0.1, gamma=0.0)

    def test_sim_config(self):
        cfg = SimConfig(dt=0.01, horizon=1.0)
        self.assertEqual(cfg.steps, 100)
        with self.assertRaises(InvalidConfigError):
            SimConfig(dt=0.3, horizon=1.0)
        with self.assertRaises(InvalidConfigError):
            SimConfig(dt=2.0, horizon=1.0)

    def test_with_horizon_rounds_to_grid(self):
        cfg = SimConfig(dt=0.01, horizon=1.0).with_horizon(0.5)
        self.assertEqual(cfg.steps, 50)
        self.assertEqual(cfg.dt, 0.01)

    def test_with_horizon_keeps_requested_time(self):
        cfg = SimConfig(dt=0.0032, horizon=0.0032).with_horizon(0.5)
        self.assertEqual(cfg.horizon, 0.5)
        self.assertEqual(cfg.steps, 157)
        self.assertAlmostEqual(cfg.dt, 0.5 / 157, places=15)
        self.assertLessEqual(cfg.dt, 0.0032)
        self.assertAlmostEqual(float(cfg.times[-1]), 0.5, places=12)


class NoiseTest(SimpleTestCase):

    def test_stream_reproducible(self):
        first = NoiseStream(7, 3, Channel.W1).increments(50, 2, 0.01)
        second = NoiseStream(7, 3, Channel.W1).increments(50, 2, 0.01)
        np.testing.assert_array_equal(first, second)

    def test_channels_and_paths_differ(self):
        base = NoiseStream(7, 3, Channel.W1).increments(20, 1, 0.01)
        self.assertFalse(np.array_equal(base, NoiseStream(7, 3, Channel.W2).increments(20, 1, 0.01)))
        self.assertFalse(np.array_equal(base, NoiseStream(7, 4, Channel.W1).increments(20, 1, 0.01)))

    def test_block_chunks_match_stream(self):
        noise = BlockNoise(11, [2, 5], Channel.W2, 1, 0.04)
        chunked = np.concatenate([noise.take(30), noise.take(70)])
        for b, path in enumerate([2, 5]):
            np.testing.assert_array_equal(chunked[:, :, b], NoiseStream(11, path, Channel.W2).increments(100, 1, 0.04))

    def test_increment_variance(self):
        draws = NoiseStream(1, 0, Channel.W1).increments(200_000, 1, 0.25)
        self.assertAlmostEqual(float(draws.var()), 0.25, delta=0.005)


class ParallelTest(SimpleTestCase):

    def test_blocks_cover_paths(self):
        blocks = path_blocks(600, block_size=256)
        self.assertEqual([len(b) for b in blocks], [256, 256, 88])

    def test_ordered_map_keeps_order(self):
        self.assertEqual(ordered_map(lambda v: v * v, range(20), threads=4), [v * v for v in range(20)])


class StepSlowTest(SimpleTestCase):

    def test_zero_everything(self):
        spec = scalar_system('0', '0', '0', '0')
        x_next, dk = step_slow(spec, np.array([0.3]), np.array([0.0]), 0.1, 0.5, np.array([0.7]))
        np.testing.assert_array_equal(x_next, [0.3])
        np.testing.assert_array_equal(dk, [0.0])

    def test_box_absorbs_excess_drift(self):
        spec = scalar_system('10', '0', '0', '0', operator=unit_box())
        x_next, dk = step_slow(spec, np.array([0.95]), np.array([0.0]), 0.01, 0.5, np.array([0.0]))
        self.assertEqual(float(x_next[0]), 1.0)
        self.assertAlmostEqual(float(dk[0]), 0.05, places=12)

    def test_quadratic_resolvent(self):
        spec = scalar_system('0', '0', '0', '0', operator=SubdiffQuadratic([[1.0]]), x0=1.0)
        x_next, _ = step_slow(spec, np.array([1.0]), np.array([0.0]), 0.5, 0.5, np.array([0.0]))
        self.assertAlmostEqual(float(x_next[0]), 1.0 / 1.5, places=14)


class RunSystemTest(SimpleTestCase):

    def test_constant_when_coefficients_vanish(self):
        spec = scalar_system('0', '0', '0', '0', x0=0.4, y0=-1.0)
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=0.5, seed=3))
        self.assertTrue(np.all(path.X == 0.4))
        self.assertTrue(np.all(path.Y == -1.0))
        self.assertTrue(np.all(path.dK == 0.0))
        self.assertEqual(path.X.shape, (51, 1))
        self.assertEqual(path.dK.shape, (50, 1))

    def test_instability_guard(self):
        spec = example_system()
        with self.assertRaises(FastScaleInstabilityError):
            run_system(spec, ScaleParams(0.1, 0.01), SimConfig(dt=0.01, horizon=0.1))

    def test_fast_mean_of_example(self):
        spec = example_system(b1='r - 0.5*cos(y)^2')
        gamma = 0.005
        path = run_system(spec, ScaleParams(0.1, gamma), SimConfig(dt=gamma / 20, horizon=2.0, seed=42))
        tail = path.Y[len(path.times) // 2:, 0]
        self.assertAlmostEqual(float(tail.mean()), 0.6, delta=0.25)

    def test_zero_operator_matches_euler_maruyama(self):
        spec = scalar_system('r - 0.5*cos(y)^2', 'cos(y)', 's - 0.5*y', 'nu', params={'r': 0.1, 's': 0.3, 'nu': 0.5})
        scales = ScaleParams(0.2, 0.4)
        cfg = SimConfig(dt=0.01, horizon=1.0, seed=9)
        path = run_system(spec, scales, cfg, path=2)
        dw1 = NoiseStream(9, 2, Channel.W1).increments(cfg.steps, 1, cfg.dt)[:, 0]
        dw2 = NoiseStream(9, 2, Channel.W2).increments(cfg.steps, 1, cfg.dt)[:, 0]
        x, y = 0.0, 0.0
        for k in range(cfg.steps):
            x, y = (
                x + (0.1 - 0.5 * np.cos(y) ** 2) * cfg.dt + np.sqrt(0.2) * np.cos(y) * dw1[k],
                y + (0.3 - 0.5 * y) * cfg.dt / 0.4 + 0.5 * dw2[k] / np.sqrt(0.4),
            )
            self.assertAlmostEqual(float(path.X[k + 1, 0]), x, delta=1e-12)
            self.assertAlmostEqual(float(path.Y[k + 1, 0]), y, delta=1e-12)

    def test_paths_stay_in_domain(self):
        for operator in (unit_box(), NormalConeBox([-0.5], [0.2])):
            spec = scalar_system('3*cos(y)', '1', 's - 0.5*y', 'nu', operator=operator, params={'s': 0.3, 'nu': 0.5})
            for path in run_paths(spec, SLOW, SimConfig(dt=0.01, horizon=2.0, seed=5, path_count=4)):
                self.assertLessEqual(path.max_domain_distance(operator), 1e-9)

    def test_ball_paths_stay_in_domain(self):
        ball = NormalConeBall([0.0, 0.0], 1.0)
        spec = SystemSpec.from_sources(
            (2, 1), b1=['2', '1'], sigma1=[['1'], ['0.5']], b2='-y', sigma2='1',
            A=ball, x0=[0.0, 0.0], y0=[0.0],
        )
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=2.0, seed=1))
        self.assertLessEqual(path.max_domain_distance(ball), 1e-9)
        self.assertGreater(path.total_variation, 0.0)


class EnsembleTest(SimpleTestCase):

    def setUp(self):
        self.spec = example_system(b1='r - 0.5*cos(y)^2', operator=unit_box())
        self.scales = ScaleParams(0.2, 0.04)
        self.cfg = SimConfig(dt=0.002, horizon=0.2, seed=17, path_count=600)

    def test_bit_identical_across_thread_counts(self):
        single = run_ensemble(self.spec, self.scales, self.cfg, threads=1)
        many = run_ensemble(self.spec, self.scales, self.cfg, threads=8)
        np.testing.assert_array_equal(single.terminal_x, many.terminal_x)
        np.testing.assert_array_equal(single.terminal_y, many.terminal_y)
        np.testing.assert_array_equal(single.sup_norm, many.sup_norm)

    @override_settings(MVLDP={**settings.MVLDP, 'THREADS': 8})
    def test_threads_from_settings(self):
        result = run_ensemble(self.spec, self.scales, self.cfg.replace(path_count=300))
        self.assertEqual(result.path_count, 300)

    def test_matches_single_path_runs(self):
        result = run_ensemble(self.spec, self.scales, self.cfg.replace(path_count=40))
        for i in (0, 13, 39):
            path = run_system(self.spec, self.scales, self.cfg, path=i)
            np.testing.assert_allclose(result.terminal_x[i], path.X[-1], rtol=0, atol=1e-12)
            self.assertAlmostEqual(result.total_variation[i], path.total_variation, delta=1e-12)

    def test_sup_norm_dominates_terminal(self):
        result = run_ensemble(self.spec, self.scales, self.cfg.replace(path_count=50))
        self.assertTrue(np.all(result.sup_norm >= np.abs(result.terminal_x[:, 0])))

    def test_horizon_not_a_multiple_of_dt(self):
        result = run_ensemble(self.spec, self.scales, self.cfg.replace(path_count=20), t=0.105)
        self.assertEqual(result.horizon, 0.105)


class FrozenTest(SimpleTestCase):

    def test_constant_without_coefficients(self):
        spec = scalar_system('0', '0', '0', '0')
        states = run_frozen(spec, [0.0], [2.5], SimConfig(dt=0.1, horizon=1.0))
        self.assertTrue(np.all(states == 2.5))
        self.assertEqual(states.shape, (11, 1))

    def test_synchronous_coupling_contracts(self):
        spec = example_system()
        cfg = SimConfig(dt=0.01, horizon=5.0, seed=4)
        states = run_frozen(spec, [0.0], np.array([[-3.0, 4.0]]), cfg, coupling=Coupling.SYNCHRONOUS)
        gap_sq = (states[:, 0, 0] - states[:, 0, 1]) ** 2
        slope = np.polyfit(cfg.times, np.log(gap_sq), 1)[0]
        self.assertGreaterEqual(-slope, 0.45)

    def test_stationary_variance(self):
        spec = example_system()
        cfg = SimConfig(dt=0.01, horizon=20.0, seed=8)
        y0 = np.full((1, 2000), 0.6)
        states = run_frozen(spec, [0.0], y0, cfg, sample_every=cfg.steps)
        terminal = states[-1, 0]
        stderr = 0.25 * np.sqrt(2.0 / terminal.size)
        self.assertAlmostEqual(float(terminal.var()), 0.25 / (1 - cfg.dt / 4), delta=3 * stderr)
        self.assertAlmostEqual(float(terminal.mean()), 0.6, delta=3 * 0.5 / np.sqrt(terminal.size))

    def test_observer_sees_every_step(self):
        spec = example_system()
        seen = []
        run_frozen(spec, [0.0], [0.0], SimConfig(dt=0.1, horizon=1.0), observer=lambda k, y: seen.append(k))
        self.assertEqual(seen, list(range(11)))


class DiscreteViTest(SimpleTestCase):

    def reflecting_path(self):
        spec = scalar_system('2', '0.5', '0', '0', operator=unit_box())
        return run_system(spec, SLOW, SimConfig(dt=0.01, horizon=2.0, seed=2))

    def test_zero_operator_has_no_violation(self):
        spec = scalar_system('1', '1', '0', '0')
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=1.0, seed=1))
        report = verify_discrete_vi(path, Zero(1), graph_sample(Zero(1), 0, 100))
        self.assertEqual(report.max_violation, 0.0)
        self.assertTrue(report.passed)

    def test_box_path_passes(self):
        path = self.reflecting_path()
        self.assertGreater(path.total_variation, 0.0)
        report = verify_discrete_vi(path, unit_box(), graph_sample(unit_box(), 3, 500))
        self.assertTrue(report.passed, report)

    def test_flipped_increments_fail(self):
        path = self.reflecting_path()
        corrupted = SlowFastPath(times=path.times, X=path.X, Y=path.Y, dK=-path.dK)
        samples = [(np.array([0.2]), np.array([0.0]))] + graph_sample(unit_box(), 3, 100)
        self.assertFalse(verify_discrete_vi(corrupted, unit_box(), samples).passed)


class InteriorEstimateTest(SimpleTestCase):

    def test_box_reflection(self):
        spec = scalar_system('2', '0.5', '0', '0', operator=unit_box())
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=2.0, seed=2))
        report = verify_interior_estimate(path, unit_box(), [0.0])
        self.assertTrue(report.passed)
        self.assertGreaterEqual(report.lhs, path.total_variation - 1e-8)

    def test_no_reflection(self):
        spec = scalar_system('0', '0', '0', '0', operator=unit_box())
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=0.5))
        report = verify_interior_estimate(path, unit_box(), [0.0])
        self.assertEqual((report.lhs, report.rhs), (0.0, 0.0))
        self.assertTrue(report.passed)

    def test_ball_radial_geometry(self):
        ball = NormalConeBall([0.0, 0.0], 1.0)
        spec = SystemSpec.from_sources(
            (2, 1), b1=['2', '-1'], sigma1=[['1'], ['1']], b2='0', sigma2='0',
            A=ball, x0=[0.0, 0.0], y0=[0.0],
        )
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=2.0, seed=6))
        self.assertTrue(verify_interior_estimate(path, ball, [0.0, 0.0]).passed)

    def test_reference_point_must_be_interior(self):
        spec = scalar_system('0', '0', '0', '0', operator=unit_box())
        path = run_system(spec, SLOW, SimConfig(dt=0.01, horizon=0.5))
        with self.assertRaises(NotInteriorError):
            verify_interior_estimate(path, unit_box(), [1.0])


class DissipativityTest(SimpleTestCase):

    def test_example_constants(self):
        report = verify_dissipativity(example_system(), sample_count=1000, seed=0)
        self.assertGreaterEqual(report.beta_hat, 1 - 1e-9)
        self.assertAlmostEqual(report.L_hat, 0.25, delta=1e-9)
        self.assertAlmostEqual(report.alpha_hat, 0.5, delta=1e-8)
        self.assertTrue(report.passed)
        self.assertEqual(report.violations, 0)

    def test_explosive_drift_flagged(self):
        spec = scalar_system('0', '0', 'y', '1')
        report = verify_dissipativity(spec, sample_count=200, seed=1)
        self.assertLess(report.beta_hat, 0)
        self.assertFalse(report.passed)
        self.assertEqual(report.violations, 200)

    def test_constant_diffusion_contributes_nothing(self):
        spec = scalar_system('0', '0', '-y', '3')
        report = verify_dissipativity(spec, sample_count=200, seed=2)
        self.assertAlmostEqual(report.beta_hat, 2.0, delta=1e-9)

    def test_sample_count_floor(self):
        with self.assertRaises(ValueError):
            verify_dissipativity(example_system(), sample_count=10, seed=0)


class LyapunovTest(SimpleTestCase):

    def setUp(self):
        self.spec = example_system()
        self.grid = np.linspace(-10.0, 10.0, 401)

    def zeta(self, source):
        return CoeffField.parse(source, (1, 1), {'s': 0.3})

    def test_example_zeta(self):
        report = verify_lyapunov(self.spec, self.zeta('abs(y/2 - s)^1.5'), self.grid,
                                 L1=0.7, L2=1.0, ball_center=[0.6], ball_radius=2.6)
        self.assertTrue(report.passed, report)
        self.assertGreaterEqual(report.excluded, 1)
        self.assertTrue(any(abs(k[0] - 0.6) < 1e-6 for k in report.kinks))

    def test_quadratic_zeta(self):
        report = verify_lyapunov(self.spec, self.zeta('y^2'), self.grid,
                                 L1=0.5, L2=1.0, ball_center=[0.0], ball_radius=2.0)
        self.assertTrue(report.passed, report)
        self.assertEqual(report.excluded, 0)

    def test_constant_zeta_fails(self):
        report = verify_lyapunov(self.spec, self.zeta('1'), self.grid,
                                 L1=0.5, L2=0.0, ball_center=[0.0], ball_radius=1.0)
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.max_violation, 0.5, places=9)


class SlowCoefficientTest(SimpleTestCase):

    def test_example_is_bounded(self):
        report = verify_slow_coefficients(example_system(b1='r - 0.5*cos(y)^2'), sample_count=500, seed=3)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.sup_sigma1_sq, 1.0)
        self.assertLessEqual(report.sup_b1_sq, 0.16 + 1e-12)

    def test_bound(self):
        report = verify_slow_coefficients(example_system(), sample_count=200, seed=3, bound=1e-3)
        self.assertFalse(report.passed)


class PathCsvTest(SimpleTestCase):

    def test_single_and_long_format(self):
        spec = example_system(operator=unit_box())
        cfg = SimConfig(dt=0.01, horizon=0.03, seed=1, path_count=2)
        paths = run_paths(spec, SLOW, cfg)
        with tempfile.TemporaryDirectory() as tmp:
            one = os.path.join(tmp, 'one.csv')
            write_paths_csv(paths[:1], one)
            with open(one, newline='') as handle:
                text = handle.read()
            self.assertNotIn('\r', text)
            lines = text.splitlines()
            self.assertEqual(lines[0], 't,x0,y0,dk0')
            self.assertEqual(len(lines), 5)

            many = os.path.join(tmp, 'many.csv')
            write_paths_csv(paths, many)
            with open(many, newline='') as handle:
                lines = handle.read().splitlines()
            self.assertEqual(lines[0], 'path_id,t,x0,y0,dk0')
            self.assertEqual(len(lines), 9)
            self.assertTrue(lines[-1].startswith('1,'))
