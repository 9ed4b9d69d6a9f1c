# -*- coding: utf-8 -*-
# pylint: disable=wrong-import-position
"""Test smooth oracles, problem instances and solution certificates."""

# python stuff
import os
import sys
import unittest

# 3rd party stuff
import numpy as np
from scipy.optimize import approx_fprime, lsq_linear


HERE = os.path.abspath(os.path.dirname(__file__))
PYTHON_ROOT = os.path.dirname(os.path.dirname(HERE))
if PYTHON_ROOT not in sys.path:
    sys.path.append(PYTHON_ROOT)  # noqa: E402

# our stuff
from proxlast.bench import gen_lasso  # noqa: E402
from proxlast.exceptions import ProxLastConvergenceError, ProxLastValueError  # noqa: E402
from proxlast.oracles import (  # noqa: E402
    OracleKind,
    ProblemInstance,
    certify_solution,
    component_grads,
    component_values,
    full_grad,
    full_smoothness_constant,
    grad_component,
    least_squares,
    load_csv_problem,
    logistic,
    recompute_sigma_star_sq,
    separable,
    sigma_star_sq,
    smoothness_constant,
    value,
)
from proxlast.prox_core import box, l1, prox, zero  # noqa: E402
from proxlast.regularizers import DecomposableRegularizer  # noqa: E402
from proxlast.tests.test_setup import get_test_path, tiny_lasso  # noqa: E402


def random_oracles(seed: int = 0):
    """One oracle of every kind."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((8, 4))  # pylint: disable=invalid-name
    return [
        least_squares(A, rng.standard_normal(8)),
        logistic(A, rng.choice([-1.0, 1.0], size=8), scale=2.0),
        separable(rng.standard_normal((3, 4, 2)), rng.standard_normal((3, 4))),
    ]


class TestOracles(unittest.TestCase):
    """Test gradients, values and constants."""

    def test_gradients_match_finite_differences(self):
        """Test every component gradient against finite differences."""
        rng = np.random.default_rng(1)
        for oracle in random_oracles():
            x = rng.standard_normal(oracle.n)
            for i in range(oracle.N):

                def f_i(z, i=i, oracle=oracle):
                    return float(component_values(oracle, z)[i])

                np.testing.assert_allclose(
                    grad_component(oracle, i, x), approx_fprime(x, f_i, 1e-7), atol=1e-5, err_msg=oracle.kind.value
                )

    def test_stacked_and_full_gradients(self):
        """Test that component_grads stacks grad_component and full_grad averages them."""
        rng = np.random.default_rng(2)
        for oracle in random_oracles():
            x = rng.standard_normal(oracle.n)
            grads = component_grads(oracle, x)
            self.assertEqual(grads.shape, (oracle.N, oracle.n))
            for i in range(oracle.N):
                np.testing.assert_allclose(grads[i], grad_component(oracle, i, x), atol=1e-12)
            np.testing.assert_allclose(full_grad(oracle, x), grads.mean(axis=0), atol=1e-12)
            self.assertAlmostEqual(value(oracle, x), float(np.mean(component_values(oracle, x))))
            self.assertAlmostEqual(sigma_star_sq(oracle, x), float(np.mean(np.sum(grads**2, axis=1))))

    def test_separable_touches_one_block(self):
        """Test that a separable component only has gradient on its own block."""
        oracle = random_oracles()[2]
        grad = grad_component(oracle, 1, np.ones(oracle.n))
        self.assertEqual(oracle.block_dim, 2)
        np.testing.assert_array_equal(grad[[0, 1, 4, 5]], 0.0)

    def test_smoothness_constants(self):
        """Test the componentwise and full constants."""
        A = np.array([[3.0, 4.0], [1.0, 0.0]])  # pylint: disable=invalid-name
        oracle = least_squares(A, np.zeros(2))
        self.assertAlmostEqual(smoothness_constant(oracle), 25.0)
        self.assertAlmostEqual(full_smoothness_constant(oracle), np.linalg.norm(A, 2) ** 2 / 2.0)
        self.assertAlmostEqual(smoothness_constant(logistic(A, [1.0, -1.0])), 25.0 / 4.0)
        for oracle in random_oracles():
            self.assertLessEqual(full_smoothness_constant(oracle), smoothness_constant(oracle) + 1e-12)

    def test_validation(self):
        """Test malformed data, labels, shapes and indices."""
        with self.assertRaises(ProxLastValueError):
            least_squares(np.ones((3, 2)), np.ones(2))
        with self.assertRaises(ProxLastValueError):
            logistic(np.ones((2, 2)), [1.0, 0.0])
        with self.assertRaises(ProxLastValueError):
            least_squares(np.array([[np.nan]]), [1.0])
        oracle = random_oracles()[0]
        with self.assertRaises(ProxLastValueError):
            grad_component(oracle, oracle.N, np.zeros(oracle.n))
        with self.assertRaises(ProxLastValueError):
            full_grad(oracle, np.zeros(oracle.n + 1))

    def test_component_gradient_checks_x(self):
        """Test that a wrong-length x is rejected for every oracle kind."""
        for oracle in random_oracles():
            for length in (oracle.n - 1, oracle.n + 1):
                with self.assertRaises(ProxLastValueError):
                    grad_component(oracle, 0, np.zeros(length))


class TestProblemInstance(unittest.TestCase):
    """Test h = f + g."""

    def test_objective(self):
        """Test that h adds f and g."""
        problem = tiny_lasso()
        x = np.ones(problem.dim)
        self.assertAlmostEqual(problem.objective(x), value(problem.oracle, x) + 0.1 * problem.dim)
        self.assertFalse(problem.is_decomposable)
        self.assertEqual(problem.m, 1)

    def test_validation(self):
        """Test that mismatched x0 and regularizer dimensions raise."""
        oracle = least_squares(np.ones((3, 2)), np.ones(3))
        with self.assertRaises(ProxLastValueError):
            ProblemInstance(oracle=oracle, regularizer=zero(), x0=np.zeros(3))
        with self.assertRaises(ProxLastValueError):
            ProblemInstance(
                oracle=oracle,
                regularizer=DecomposableRegularizer.from_components([l1(1.0)], dim=3),
                x0=np.zeros(2),
            )

    def test_with_x0(self):
        """Test that with_x0 keeps everything but the start point."""
        problem = tiny_lasso()
        moved = problem.with_x0(np.ones(problem.dim))
        self.assertIs(moved.oracle, problem.oracle)
        np.testing.assert_array_equal(moved.x0, np.ones(problem.dim))

    def test_load_csv_problem(self):
        """Test CSV loading with and without a header."""
        problem = load_csv_problem(get_test_path("tiny_ls.csv"), lam=0.5)
        self.assertEqual((problem.oracle.N, problem.dim), (4, 2))
        np.testing.assert_array_equal(problem.oracle.b, [1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(problem.regularizer.lam, 0.5)
        problem = load_csv_problem(get_test_path("tiny_logistic.csv"), kind="logistic")
        self.assertEqual(problem.oracle.kind, OracleKind.LOGISTIC)
        self.assertEqual(problem.oracle.N, 5)

    def test_load_csv_problem_errors(self):
        """Test non-numeric content and unknown kinds."""
        with self.assertRaises(ProxLastValueError):
            load_csv_problem(get_test_path("not_numeric.csv"))
        with self.assertRaises(ProxLastValueError):
            load_csv_problem(get_test_path("tiny_ls.csv"), kind="hinge")


class TestCertifySolution(unittest.TestCase):
    """Test the reference solver against independent solutions."""

    def test_least_squares(self):
        """Test against numpy's least squares solution."""
        rng = np.random.default_rng(3)
        A, b = rng.standard_normal((30, 4)), rng.standard_normal(30)  # pylint: disable=invalid-name
        problem = ProblemInstance(oracle=least_squares(A, b), regularizer=zero(), x0=np.zeros(4))
        certificate = certify_solution(problem)
        expected = np.linalg.lstsq(A, b, rcond=None)[0]
        np.testing.assert_allclose(certificate.x_star, expected, atol=1e-8)
        self.assertAlmostEqual(certificate.d_star_sq, float(expected @ expected), places=8)

    def test_box_least_squares(self):
        """Test against scipy's bounded least squares."""
        rng = np.random.default_rng(4)
        A = rng.standard_normal((40, 5))  # pylint: disable=invalid-name
        b = A @ np.array([2.0, -2.0, 0.3, 0.0, 1.5]) + 0.1 * rng.standard_normal(40)
        problem = ProblemInstance(
            oracle=least_squares(A, b), regularizer=box(-np.ones(5), np.ones(5)), x0=np.zeros(5)
        )
        certificate = certify_solution(problem)
        expected = lsq_linear(A, b, bounds=(-1.0, 1.0), tol=1e-12).x
        np.testing.assert_allclose(certificate.x_star, expected, atol=1e-6)

    def test_lasso_fixed_point(self):
        """Test that the certified point is a proximal gradient fixed point."""
        problem = tiny_lasso()
        certificate = certify_solution(problem)
        L = problem.full_smoothness_constant()  # pylint: disable=invalid-name
        x_star = certificate.x_star
        step = prox(problem.regularizer, x_star - problem.full_grad(x_star) / L, 1.0 / L)
        self.assertLess(L * np.linalg.norm(step - x_star), 1e-9)
        self.assertAlmostEqual(certificate.h_star, problem.objective(x_star))
        self.assertAlmostEqual(recompute_sigma_star_sq(problem.oracle, certificate), certificate.sigma_star_sq)

    def test_decomposable_matches_monolithic(self):
        """Test that splitting lam over components leaves h* unchanged."""
        problem = tiny_lasso()
        split = ProblemInstance(
            oracle=problem.oracle,
            regularizer=DecomposableRegularizer.from_components([l1(0.05), l1(0.05)], dim=problem.dim),
            x0=problem.x0,
        )
        self.assertAlmostEqual(certify_solution(split).h_star, certify_solution(problem).h_star, places=8)

    def test_lambda_above_critical_value(self):
        """Test that lam > max|A^T b| / N certifies x* = 0 from any start."""
        lasso = gen_lasso(n=5, N=40, sparsity=2, noise_std=0.1, lam=0.1, seed=6)
        oracle = lasso.oracle
        lam_max = float(np.max(np.abs(oracle.A.T @ oracle.b)) / oracle.N)
        problem = ProblemInstance(oracle=oracle, regularizer=l1(1.5 * lam_max), x0=np.zeros(5))
        np.testing.assert_array_equal(certify_solution(problem).x_star, np.zeros(5))
        start = np.random.default_rng(7).standard_normal(5)
        np.testing.assert_array_equal(certify_solution(problem, x0=start).x_star, np.zeros(5))

    def test_two_starts_agree(self):
        """Test that h* from a second random start matches within twice the tolerance."""
        problem = gen_lasso(n=20, N=50, sparsity=5, noise_std=0.1, lam=0.1, seed=8)
        tol = 1e-8
        first = certify_solution(problem, tol=tol)
        start = 3.0 * np.random.default_rng(9).standard_normal(problem.dim)
        second = certify_solution(problem, x0=start, tol=tol)
        self.assertLessEqual(abs(first.h_star - second.h_star), 2.0 * tol)

    def test_digest_is_stable(self):
        """Test that certifying twice yields the same digest."""
        problem = tiny_lasso()
        self.assertEqual(certify_solution(problem).digest, certify_solution(problem).digest)

    def test_iteration_cap(self):
        """Test that an exhausted iteration cap raises with the best point."""
        problem = tiny_lasso()
        with self.assertRaises(ProxLastConvergenceError) as context:
            certify_solution(problem, tol=1e-14, max_iter=2)
        self.assertEqual(context.exception.best_x.shape, (problem.dim,))
        self.assertLessEqual(context.exception.best_value, problem.objective(problem.x0))
