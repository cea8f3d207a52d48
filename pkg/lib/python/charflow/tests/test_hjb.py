"""Tests for the semi-Lagrangian HJB solver, the Hopf-Lax oracle and the viscosity residual"""
import unittest

import numpy as np
import pytest

from charflow.errors import CFLViolationError, ExtrapolationError, SpecError
from charflow.expr import parse
from charflow.hjb import (
    GridSpec,
    SemigroupOp,
    cfl_limit,
    control_samples,
    hopf_lax_on_grid,
    hopf_lax_oracle,
    lattice_controls,
    semigroup_apply,
    solve_hjb,
    value_at,
    viscosity_residual,
)
from charflow.problem import ControlProblem
from charflow.tests.conftest import quadratic_problem


def sup_error_against_oracle(h: float, dt: float) -> float:
    prob = quadratic_problem(half_width=2.0)
    phi0 = parse("x0^2/2", (1, 1))
    grid = GridSpec.with_spacing([-2.0], [2.0], h)
    vg = solve_hjb(prob, phi0, grid, 1.0, dt)
    # every other node keeps the oracle sweep short
    points = grid.points()[::2]
    exact = hopf_lax_on_grid(phi0, 1.0, points, prob)
    computed = np.array([value_at(vg, 1.0, p) for p in points])
    return float(np.max(np.abs(computed - exact)))


class TestGrid(unittest.TestCase):
    def test_spacing_and_points(self):
        grid = GridSpec.with_spacing([-2.0], [2.0], 0.02)
        self.assertEqual(grid.nodes, (201,))
        self.assertAlmostEqual(grid.h, 0.02)
        self.assertEqual(grid.points().shape, (201, 1))

    def test_too_coarse(self):
        with self.assertRaises(SpecError):
            GridSpec.over([0.0], [1.0], [2])

    def test_three_dimensions_rejected(self):
        with self.assertRaises(SpecError):
            GridSpec.over([0.0] * 3, [1.0] * 3, [5] * 3)

    def test_node_index(self):
        grid = GridSpec.over([0.0, 0.0], [1.0, 2.0], [3, 5])
        self.assertEqual(grid.node_index([0.5, 1.5]), (1, 3))
        with self.assertRaises(SpecError):
            grid.node_index([0.25, 0.0])


class TestControls(unittest.TestCase):
    def test_bounded_samples(self):
        U = control_samples(quadratic_problem(control_bound=1.0), per_dim=5)
        np.testing.assert_allclose(U[:, 0], [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_unbounded_samples_are_cut(self):
        U = control_samples(quadratic_problem(), per_dim=3, radius=2.0)
        np.testing.assert_allclose(U[:, 0], [-2.0, 0.0, 2.0])

    def test_lattice_velocities(self):
        grid = GridSpec.over([-2.0], [2.0], [5])
        v = lattice_controls(quadratic_problem(), grid, 0.5)
        np.testing.assert_allclose(v[:, 0], 2.0 * np.arange(-4, 5))

    def test_cfl_limit(self):
        grid = GridSpec.with_spacing([-2.0], [2.0], 0.02)
        self.assertAlmostEqual(cfl_limit(quadratic_problem(), grid), 0.01)


class TestSolver(unittest.TestCase):
    def setUp(self):
        self.prob = quadratic_problem(half_width=2.0)
        self.grid = GridSpec.with_spacing([-2.0], [2.0], 0.02)

    def test_matches_hopf_lax(self):
        self.assertLessEqual(sup_error_against_oracle(0.02, 0.01), 1e-2)

    @pytest.mark.slow
    def test_refinement_improves_error(self):
        coarse = sup_error_against_oracle(0.02, 0.01)
        fine = sup_error_against_oracle(0.01, 0.005)
        self.assertGreaterEqual(coarse / max(fine, 1e-15), 1.5)

    def test_zero_data_stays_zero(self):
        vg = solve_hjb(self.prob, parse("0", (1, 1)), self.grid, 1.0, 0.01)
        np.testing.assert_allclose(vg.final, 0.0, atol=1e-12)

    def test_zero_horizon(self):
        phi0 = parse("x0^2/2", (1, 1))
        vg = solve_hjb(self.prob, phi0, self.grid, 0.0, 0.01)
        self.assertEqual(vg.steps, 0)
        self.assertAlmostEqual(value_at(vg, 0.0, [1.0]), 0.5)

    def test_interpolated_value(self):
        vg = solve_hjb(self.prob, parse("x0^2/2", (1, 1)), self.grid, 1.0, 0.01)
        # x^2 / (2 (1 + t))
        self.assertAlmostEqual(value_at(vg, 1.0, [1.0]), 0.25, delta=1e-2)
        self.assertAlmostEqual(value_at(vg, 0.505, [1.0]), 1.0 / 3.01, delta=1e-2)
        with self.assertRaises(ExtrapolationError):
            value_at(vg, 1.0, [2.5])
        with self.assertRaises(ExtrapolationError):
            value_at(vg, 1.5, [0.0])

    def test_semigroup_property(self):
        op = SemigroupOp(self.prob, self.grid, 0.01)
        phi0 = parse("x0^2/2", (1, 1))
        once = semigroup_apply(op, phi0, 0.6)
        twice = op.apply(op.apply(phi0, 0.3), 0.3)
        self.assertLessEqual(float(np.max(np.abs(once - twice))), 1e-2)

    def test_unit_horizon_splits_in_halves(self):
        op = SemigroupOp(self.prob, self.grid, 0.01)
        phi0 = parse("x0^2/2", (1, 1))
        once = op.apply(phi0, 1.0)
        twice = op.apply(op.apply(phi0, 0.5), 0.5)
        self.assertLessEqual(float(np.max(np.abs(once - twice))), 1e-2)

    def test_step_is_monotone(self):
        xs = self.grid.points()[:, 0]
        phi = 0.5 * xs**2
        # touches phi wherever sin(3x) <= 0
        psi = phi + np.maximum(0.0, np.sin(3.0 * xs))
        lower = solve_hjb(self.prob, phi, self.grid, 0.01, 0.01, inject=False).final
        upper = solve_hjb(self.prob, psi, self.grid, 0.01, 0.01, inject=False).final
        self.assertGreaterEqual(float(np.min(upper - lower)), -1e-9)

    def test_constant_shift_commutes(self):
        phi = 0.5 * self.grid.points()[:, 0] ** 2
        base = solve_hjb(self.prob, phi, self.grid, 0.1, 0.01).final
        shifted = solve_hjb(self.prob, phi + 0.75, self.grid, 0.1, 0.01).final
        np.testing.assert_allclose(shifted - base, 0.75, atol=1e-9)

    def test_semigroup_rejects_off_step_times(self):
        op = SemigroupOp(self.prob, self.grid, 0.01)
        with self.assertRaises(SpecError):
            op.apply(parse("0", (1, 1)), 0.015)

    def test_cfl_violation(self):
        with self.assertRaises(CFLViolationError) as ctx:
            solve_hjb(self.prob, parse("0", (1, 1)), self.grid, 1.0, 0.05)
        self.assertAlmostEqual(ctx.exception.limit, 0.01)

    def test_horizon_not_multiple_of_step(self):
        with self.assertRaises(SpecError):
            solve_hjb(self.prob, parse("0", (1, 1)), self.grid, 1.0, 0.003)

    def test_grid_dimension_mismatch(self):
        grid = GridSpec.over([-1.0, -1.0], [1.0, 1.0], [5, 5])
        with self.assertRaises(SpecError):
            solve_hjb(self.prob, parse("0", (1, 1)), grid, 0.1, 0.01)

    def test_thread_count_does_not_change_result(self):
        phi0 = parse("abs(x0)", (1, 1))
        one = solve_hjb(self.prob, phi0, self.grid, 0.2, 0.01, threads=1)
        four = solve_hjb(self.prob, phi0, self.grid, 0.2, 0.01, threads=4)
        np.testing.assert_array_equal(one.values, four.values)

    def test_periodic_edges_agree(self):
        prob = quadratic_problem(half_width=1.0, boundary="periodic")
        grid = GridSpec.with_spacing([-1.0], [1.0], 0.02)
        vg = solve_hjb(prob, parse("sin(pi*x0)", (1, 1)), grid, 0.5, 0.01)
        self.assertEqual(vg.final[0], vg.final[-1])


class TestArgmaxInjection(unittest.TestCase):
    """Costates beyond the sampled control radius still reach their maximiser"""

    def setUp(self):
        self.prob = ControlProblem.build(["u0"], "u0^2/2 + u0^4/1000", ["-inf"], ["inf"], [-4], [4])
        self.grid = GridSpec.over([-4.0], [4.0], [81])
        self.phi0 = parse("3*x0", (1, 1))
        us = np.linspace(0.0, 4.0, 400001)
        # u(t, x) = 3x - t H(3) for linear data
        self.H3 = float(np.max(3.0 * us - us**2 / 2 - us**4 / 1000))

    def sup_error(self, inject):
        vg = solve_hjb(self.prob, self.phi0, self.grid, 0.2, 0.02, inject=inject)
        xs = self.grid.points()[:, 0]
        interior = np.abs(xs) <= 3.0
        return float(np.max(np.abs(vg.final[interior] - (3.0 * xs[interior] - 0.2 * self.H3))))

    def test_non_quadratic_cost_is_exact_by_default(self):
        self.assertFalse(self.prob.control_affine_quadratic)
        self.assertLessEqual(self.sup_error(None), 1e-6)

    def test_sampled_controls_alone_fall_short(self):
        self.assertGreater(self.sup_error(False), 1e-2)


class TestOracleAndResidual(unittest.TestCase):
    def test_oracle_smooth_data(self):
        phi0 = parse("x0^2/2", (1, 1))
        self.assertAlmostEqual(hopf_lax_oracle(phi0, 1.0, [1.0]), 0.25, places=8)
        self.assertAlmostEqual(hopf_lax_oracle(phi0, 0.0, [1.0]), 0.5)

    def test_oracle_kinked_data(self):
        # |x| evolves to |x| - t/2 outside [-t, t]
        phi0 = parse("abs(x0)", (1, 1))
        self.assertAlmostEqual(hopf_lax_oracle(phi0, 1.0, [1.5]), 1.0, places=8)
        self.assertAlmostEqual(hopf_lax_oracle(phi0, 1.0, [0.0]), 0.0, places=8)

    def test_oracle_two_dimensions(self):
        phi0 = parse("(x0^2 + x1^2)/2", (2, 2))
        self.assertAlmostEqual(hopf_lax_oracle(phi0, 1.0, [1.0, 1.0]), 0.5, places=6)

    def test_oracle_rejects_other_problems(self):
        with self.assertRaises(SpecError):
            hopf_lax_oracle(parse("0", (1, 1)), 1.0, [0.0], quadratic_problem(control_bound=1.0))

    def test_smooth_residual_is_small(self):
        prob = quadratic_problem(half_width=2.0)
        grid = GridSpec.with_spacing([-2.0], [2.0], 0.02)
        vg = solve_hjb(prob, parse("x0^2/2", (1, 1)), grid, 0.5, 0.01)
        report = viscosity_residual(vg, prob)
        self.assertGreater(report.count, 0)
        self.assertLess(report.median, 0.05)

    def test_kinks_are_excluded(self):
        prob = quadratic_problem(half_width=2.0)
        grid = GridSpec.with_spacing([-2.0], [2.0], 0.02)
        vg = solve_hjb(prob, parse("abs(x0)", (1, 1)), grid, 0.2, 0.01)
        self.assertGreater(viscosity_residual(vg, prob).excluded, 0)


if __name__ == "__main__":
    unittest.main()
