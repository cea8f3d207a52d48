"""Tests for control costs: shooting, transcription, the DP oracle and cost matrices"""
import math
import unittest

import numpy as np
import pytest

from charflow.characteristics import integrate_from
from charflow.cost import (
    CostMatrix,
    CostQuery,
    closed_form_quadratic,
    cost_dp_oracle,
    cost_function,
    cost_matrix,
    cost_query,
    cost_shooting,
    cost_time,
    cost_transcription,
    starting_costates,
)
from charflow.errors import SpecError
from charflow.models import CostMethod, CostStatus
from charflow.problem import ControlProblem
from charflow.tests.conftest import double_integrator, quadratic_problem


def node_pairs(count: int, seed: int):
    """Random (x, y) pairs in [-1, 1] on the 0.01 lattice, so the DP oracle can use them."""
    rng = np.random.default_rng(seed)
    return rng.integers(-100, 101, size=(count, 2)) / 100.0


class TestCostQuery(unittest.TestCase):
    def test_dimension_mismatch(self):
        with self.assertRaises(SpecError):
            CostQuery([0.0], [0.0, 1.0])

    def test_empty_horizon(self):
        with self.assertRaises(SpecError):
            CostQuery([0.0], [1.0], 1.0, 1.0)

    def test_starting_costates(self):
        P = starting_costates(2, 8, seed=3)
        self.assertEqual(P.shape, (8, 2))
        np.testing.assert_array_equal(P[0], [0.0, 0.0])
        np.testing.assert_array_equal(P[1], [1.0, 0.0])
        np.testing.assert_array_equal(P, starting_costates(2, 8, seed=3))


class TestQuadraticFamily(unittest.TestCase):
    """f = u, L = |u|^2/2: c(x, y) = |x - y|^2 / (2 t1)"""

    def setUp(self):
        self.prob = quadratic_problem(half_width=2.0)
        self.q = CostQuery([0.0], [1.0])

    def test_shooting(self):
        result = cost_shooting(self.prob, self.q)
        self.assertEqual(result.method, CostMethod.SHOOTING)
        self.assertTrue(result.ok)
        self.assertAlmostEqual(result.value, 0.5, delta=1e-6)
        np.testing.assert_allclose(result.p0, [1.0], atol=1e-6)
        self.assertAlmostEqual(float(result.trajectory[-1, 0]), 1.0, delta=1e-6)

    def test_transcription(self):
        result = cost_transcription(self.prob, self.q, 50)
        self.assertTrue(result.ok)
        self.assertAlmostEqual(result.value, 0.5, delta=1e-3)
        self.assertLessEqual(result.terminal_gap, 1e-3)

    def test_dp_oracle(self):
        result = cost_dp_oracle(self.prob, self.q, h=0.01)
        self.assertEqual(result.method, CostMethod.ORACLE)
        self.assertAlmostEqual(result.value, 0.5, delta=5e-3)

    def test_dp_oracle_needs_nodes(self):
        with self.assertRaises(SpecError):
            cost_dp_oracle(self.prob, CostQuery([0.005], [1.0]), h=0.01)

    def test_transcription_interval_floor(self):
        with self.assertRaises(SpecError):
            cost_transcription(self.prob, self.q, 5)

    def test_shorter_horizon_costs_more(self):
        self.assertAlmostEqual(cost_time(self.prob, [0.0], [1.0], 0.5), 1.0, delta=1e-6)
        self.assertAlmostEqual(cost_time(self.prob, [0.0], [1.0], 2.0), 0.25, delta=1e-6)

    def test_methods_agree_in_two_dimensions(self):
        prob = quadratic_problem(n=2, half_width=2.0)
        q = CostQuery([0.5, -0.5], [-0.25, 0.75])
        exact = closed_form_quadratic(1.0)(q.x, q.y)
        self.assertAlmostEqual(cost_shooting(prob, q).value, exact, delta=1e-6)
        self.assertAlmostEqual(cost_transcription(prob, q).value, exact, delta=1e-3)

    def test_closed_form_policy(self):
        result = cost_query(self.prob, CostQuery([0.0], [3.0], 0.0, 2.0), "closed_form")
        self.assertEqual(result.value, 2.25)

    def test_closed_form_rejected_elsewhere(self):
        with self.assertRaises(SpecError):
            cost_query(double_integrator(), CostQuery([0.0, 0.0], [1.0, 0.0]), "closed_form")

    def test_unknown_policy(self):
        with self.assertRaises(SpecError):
            cost_query(self.prob, self.q, "bisection")

    def test_random_pairs_match_closed_form(self):
        for x, y in node_pairs(20, seed=11):
            exact = 0.5 * (x - y) ** 2
            q = CostQuery([x], [y])
            self.assertAlmostEqual(cost_shooting(self.prob, q).value, exact, delta=1e-6)
            self.assertAlmostEqual(cost_transcription(self.prob, q, 50).value, exact, delta=1e-3)

    @pytest.mark.slow
    def test_random_pairs_dp_oracle(self):
        for x, y in node_pairs(20, seed=11):
            result = cost_dp_oracle(self.prob, CostQuery([x], [y]), h=0.01)
            self.assertAlmostEqual(result.value, 0.5 * (x - y) ** 2, delta=5e-3)

    def test_symmetry(self):
        prob = quadratic_problem(half_width=2.0)
        steep = ControlProblem.build(["u0"], "u0^2", ["-inf"], ["inf"], [-2], [2])
        for x, y in node_pairs(6, seed=4):
            for p in (prob, steep):
                forward = cost_shooting(p, CostQuery([x], [y])).value
                backward = cost_shooting(p, CostQuery([y], [x])).value
                self.assertLessEqual(abs(forward - backward), 1e-6)

    def test_concatenation_bound(self):
        x, z, s = -0.5, 0.8, 0.4
        whole = cost_shooting(self.prob, CostQuery([x], [z])).value
        for y in np.linspace(-1.0, 1.0, 9):
            first = cost_shooting(self.prob, CostQuery([x], [y], 0.0, s)).value
            second = cost_shooting(self.prob, CostQuery([y], [z], s, 1.0)).value
            self.assertLessEqual(whole, first + second + 5e-3)
        # the straight-line midpoint is tight
        y_line = x + s * (z - x)
        first = cost_shooting(self.prob, CostQuery([x], [y_line], 0.0, s)).value
        second = cost_shooting(self.prob, CostQuery([y_line], [z], s, 1.0)).value
        self.assertAlmostEqual(whole, first + second, delta=1e-6)

    def test_reintegrated_costate_reproduces_cost(self):
        q = CostQuery([-0.3], [0.9])
        result = cost_shooting(self.prob, q)
        traj = integrate_from(self.prob, q.x, result.p0, 0.0, q.duration, q.duration / 100)
        self.assertLessEqual(abs(float(traj.U[-1]) - result.value), 1e-8)
        self.assertLessEqual(abs(float(traj.X[-1, 0]) - 0.9), 1e-6)


class TestOtherDynamics(unittest.TestCase):
    def test_double_integrator_rest_to_rest(self):
        # minimum energy for a unit move between rest states in unit time
        result = cost_shooting(double_integrator(), CostQuery([1.0, 0.0], [0.0, 0.0]))
        self.assertTrue(result.ok)
        self.assertAlmostEqual(result.value, 6.0, delta=0.1)

    def test_double_integrator_self_consistency(self):
        prob = double_integrator()
        q = CostQuery([1.0, 0.0], [0.0, 0.0])
        result = cost_shooting(prob, q)
        traj = integrate_from(prob, q.x, result.p0, 0.0, q.duration, q.duration / 100)
        self.assertLessEqual(abs(float(traj.U[-1]) - result.value), 1e-8)
        np.testing.assert_allclose(traj.X[-1], q.y, atol=1e-6)

    def test_double_integrator_concatenation(self):
        prob = double_integrator()
        x, z, s = [1.0, 0.0], [0.0, 0.0], 0.5
        whole = cost_shooting(prob, CostQuery(x, z)).value
        for y in ([0.5, 0.0], [0.5, -1.5], [0.2, -1.0]):
            first = cost_shooting(prob, CostQuery(x, y, 0.0, s)).value
            second = cost_shooting(prob, CostQuery(y, z, s, 1.0)).value
            self.assertLessEqual(whole, first + second + 5e-3)

    def test_double_integrator_transcription(self):
        result = cost_transcription(double_integrator(), CostQuery([1.0, 0.0], [0.0, 0.0]), 100)
        self.assertAlmostEqual(result.value, 6.0, delta=0.1)

    def test_unreachable_target_is_infeasible(self):
        prob = quadratic_problem(half_width=2.0, control_bound=0.5)
        result = cost_shooting(prob, CostQuery([0.0], [1.0]))
        self.assertTrue(result.infeasible)
        self.assertEqual(result.value, math.inf)

    def test_reachable_target_with_bounded_controls(self):
        prob = quadratic_problem(half_width=2.0, control_bound=1.0)
        result = cost_shooting(prob, CostQuery([0.0], [0.5]))
        self.assertTrue(result.ok)
        self.assertAlmostEqual(result.value, 0.125, delta=1e-6)


class TestCostMatrix(unittest.TestCase):
    def test_closed_form_matrix(self):
        prob = quadratic_problem(half_width=3.0)
        cm = cost_matrix(prob, [0.0, 1.0], [0.5, 1.5, 2.5], policy="closed_form")
        self.assertEqual(cm.shape, (2, 3))
        np.testing.assert_allclose(cm.values, [[0.125, 1.125, 3.125], [0.125, 0.125, 1.125]])
        self.assertTrue(cm.allowed.all())
        self.assertEqual(cm.failures, [])

    def test_shooting_matrix_matches_closed_form(self):
        prob = quadratic_problem(half_width=3.0)
        cm = cost_matrix(prob, [0.0, 1.0], [0.5, -1.0], policy="shooting", threads=2)
        expected = [[0.125, 0.5], [0.125, 2.0]]
        np.testing.assert_allclose(cm.values, expected, atol=1e-6)

    def test_unreachable_entries_are_forbidden(self):
        prob = quadratic_problem(half_width=2.0, control_bound=0.5)
        cm = cost_matrix(prob, [0.0], [0.25, 1.5])
        self.assertTrue(cm.allowed[0, 0])
        self.assertFalse(cm.allowed[0, 1])
        self.assertEqual(cm.status[0, 1], CostStatus.INFEASIBLE)
        self.assertEqual(len(cm.failures), 1)

    def test_unknown_policy(self):
        with self.assertRaises(SpecError):
            cost_matrix(quadratic_problem(), [0.0], [0.0], policy="bisection")

    def test_from_values(self):
        cm = CostMatrix.from_values([[0.0, math.inf], [1.0, 2.0]])
        self.assertEqual(cm.status[0, 1], CostStatus.INFEASIBLE)
        self.assertEqual(cm.xs.shape, (2, 1))

    def test_cost_function(self):
        c = cost_function(quadratic_problem(half_width=2.0), "shooting")
        self.assertAlmostEqual(c(np.array([0.0]), np.array([1.0])), 0.5, delta=1e-6)


if __name__ == "__main__":
    unittest.main()
