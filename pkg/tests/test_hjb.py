import numpy as np
from django.test import SimpleTestCase

from apps.averaging.coefficients import AveragedCoeffs
from apps.hjb.exceptions import CflViolationError, UnsupportedDomainError
from apps.hjb.hamiltonian import (
    boundary_hamiltonian,
    hamiltonian,
    hamiltonian_sup,
    hopf_lax,
    reflected_hamiltonian,
)
from apps.hjb.solver import GridConfig, kink_mask, residual_check, solve_1d
from apps.ldp.optimize import TestFunction, variational_value
from apps.monotone.operators import NormalConeBall, NormalConeBox, Zero

A_BAR = 0.6
AVG = AveragedCoeffs.constant([0.0], [[A_BAR]])
S = np.sqrt(A_BAR)
WIDE_Y = np.linspace(-6, 6, 120001)


def varying_coeffs():
    return AveragedCoeffs.from_callables(
        1,
        lambda x: np.sin(x),
        lambda x: (0.5 + 0.25 * np.cos(x))[None],
    )


class HamiltonianTests(SimpleTestCase):
    def test_zero_momentum(self):
        self.assertEqual(hamiltonian(varying_coeffs(), [0.3], [0.0]), 0.0)

    def test_pure_diffusion(self):
        self.assertAlmostEqual(hamiltonian(AVG, [1.0], [1.0]), -A_BAR / 2)

    def test_batch(self):
        values = hamiltonian(AVG, np.zeros((1, 3)), np.array([[0.0, 1.0, -2.0]]))
        np.testing.assert_allclose(values, [0.0, -0.3, -1.2])

    def test_duality(self):
        rng = np.random.default_rng(7)
        avg = varying_coeffs()
        z_grid = np.linspace(-10, 10, 20001)
        for _ in range(100):
            x, p = rng.uniform(-3, 3), rng.uniform(-3, 3)
            self.assertAlmostEqual(hamiltonian_sup(avg, [x], [p], z_grid), hamiltonian(avg, [x], [p]), delta=1e-3)


class BoundaryHamiltonianTests(SimpleTestCase):
    def test_pure_diffusion_endpoints(self):
        self.assertAlmostEqual(boundary_hamiltonian(AVG, [1.0], 1.0, 1.0), -A_BAR / 2)
        self.assertEqual(boundary_hamiltonian(AVG, [1.0], 1.0, -1.0), 0.0)
        self.assertAlmostEqual(boundary_hamiltonian(AVG, [-1.0], -1.0, -1.0), -A_BAR / 2)
        self.assertEqual(boundary_hamiltonian(AVG, [-1.0], -1.0, 1.0), 0.0)

    def test_brute_force(self):
        rng = np.random.default_rng(3)
        z = np.linspace(-20, 20, 400001)
        for _ in range(50):
            b, a, q = rng.uniform(-1, 1), rng.uniform(0.1, 1), rng.uniform(-2, 2)
            brute = float(np.min(0.5 * z ** 2 + np.minimum(b + np.sqrt(a) * z, 0.0) * q))
            self.assertAlmostEqual(reflected_hamiltonian(b, a, q), brute, delta=1e-3)

    def test_without_diffusion(self):
        self.assertEqual(reflected_hamiltonian(0.5, 0.0, 2.0), 0.0)
        self.assertEqual(reflected_hamiltonian(-0.5, 0.0, 2.0), -1.0)

    def test_normal_must_be_signed(self):
        with self.assertRaises(ValueError):
            boundary_hamiltonian(AVG, [1.0], 0.0, 1.0)


class SolverTests(SimpleTestCase):
    def test_constant_is_preserved(self):
        sol = solve_1d(AVG, Zero(1), TestFunction.parse('0.7', 1), GridConfig(dx=0.05))
        self.assertEqual(float(np.max(np.abs(sol.values - 0.7))), 0.0)
        self.assertEqual(residual_check(sol, AVG, Zero(1)).max_residual, 0.0)

    def test_initial_row_is_h(self):
        h = TestFunction.parse('min(1, abs(x - 0.4))', 1)
        sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=0.02))
        np.testing.assert_array_equal(sol.values[0], h(sol.x[None, :]))

    def test_maximum_principle(self):
        h = TestFunction.parse('min(1, abs(x - 0.4))', 1)
        sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=0.02))
        self.assertGreaterEqual(sol.values.min(), -1e-12)
        self.assertLessEqual(sol.values.max(), 1.0 + 1e-12)

    def test_hopf_lax_agreement(self):
        h = TestFunction.parse('min(1, abs(x - 0.4))', 1)
        sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=0.01, T=0.5, window=(-2.5, 3.3)))
        probes = np.linspace(-0.4, 1.2, 9)
        oracle = hopf_lax(probes, 0.5, S, h, WIDE_Y)
        self.assertLessEqual(float(np.max(np.abs(sol.at(probes) - oracle))), 2e-2)

    def test_variational_agreement(self):
        h = TestFunction.parse('min(1, abs(x - 0.4))', 1)
        sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=0.01, T=0.5, window=(-2.5, 3.3)))
        for x0 in (-0.2, 0.4, 1.0):
            value = variational_value(AVG, Zero(1), [x0], 0.5, h).value
            self.assertAlmostEqual(float(sol.at([x0])[0]), value, delta=2e-2)

    def test_first_order_refinement(self):
        h = TestFunction.parse('exp(-x^2)', 1)
        probes = np.linspace(-1, 1, 41)
        oracle = hopf_lax(probes, 0.3, S, h, WIDE_Y)
        errors = []
        for dx in (0.02, 0.01):
            sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=dx, T=0.3, window=(-4.0, 4.0)))
            errors.append(float(np.max(np.abs(sol.at(probes) - oracle))))
        self.assertTrue(1.5 <= errors[0] / errors[1] <= 2.5, errors)

    def test_box_reflection(self):
        box = NormalConeBox([-1.0], [1.0])
        sol = solve_1d(AVG, box, TestFunction.parse('x', 1), GridConfig(dx=0.01, T=0.5))
        at = A_BAR * 0.5
        exact = np.where(sol.x - at >= -1, sol.x - at / 2, (sol.x + 1) ** 2 / (2 * at) - 1)
        self.assertLessEqual(float(np.max(np.abs(sol.final - exact))), 2e-2)
        self.assertEqual(float(sol.final[0]), -1.0)
        self.assertEqual(sol.boundary, 'box')

    def test_cfl_violation(self):
        with self.assertRaises(CflViolationError):
            solve_1d(AVG, Zero(1), TestFunction.parse('x', 1), GridConfig(dx=0.01, dt=0.1, T=0.5))

    def test_unsupported_operator(self):
        with self.assertRaises(UnsupportedDomainError):
            solve_1d(AVG, NormalConeBall([0.0], 1.0), TestFunction.parse('x', 1))

    def test_rows(self):
        sol = solve_1d(AVG, Zero(1), TestFunction.parse('0', 1), GridConfig(dx=0.5, T=0.5, window=(-1.0, 1.0)))
        rows = list(sol.rows())
        self.assertEqual(len(rows), len(sol.t) * len(sol.x))
        self.assertEqual(rows[0], [0.0, -1.0, 0.0])


class ResidualTests(SimpleTestCase):
    def test_smooth_quadratic(self):
        h = TestFunction.parse('x^2', 1)
        residuals = []
        for dx in (0.04, 0.02):
            sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=dx, T=0.3))
            report = residual_check(sol, AVG, Zero(1))
            self.assertEqual(report.excluded, 0)
            self.assertLessEqual(report.max_residual, 5 * dx)
            residuals.append(report.max_residual)
        self.assertGreater(residuals[0] / residuals[1], 1.5)

    def test_kinks_are_excluded(self):
        h = TestFunction.parse('min(1, abs(x - 0.4))', 1)
        sol = solve_1d(AVG, Zero(1), h, GridConfig(dx=0.01, T=0.5, window=(-2.5, 3.3)))
        report = residual_check(sol, AVG, Zero(1))
        self.assertGreater(report.excluded, 0)
        self.assertLessEqual(report.max_residual, 10 * 0.01)

    def test_kink_mask(self):
        x = np.linspace(-1, 1, 21)
        mask = kink_mask(np.abs(x), 0.1)
        self.assertEqual(list(np.flatnonzero(mask)), [8, 9, 10])
