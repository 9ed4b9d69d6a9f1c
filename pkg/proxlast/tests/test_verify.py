# -*- coding: utf-8 -*-
# pylint: disable=wrong-import-position
"""Test the invariant grids behind `proxlast verify`."""

# python stuff
import json
import os
import sys
import unittest
from unittest.mock import patch

# 3rd party stuff
import numpy as np
import pytest


HERE = os.path.abspath(os.path.dirname(__file__))
PYTHON_ROOT = os.path.dirname(os.path.dirname(HERE))
if PYTHON_ROOT not in sys.path:
    sys.path.append(PYTHON_ROOT)  # noqa: E402

# our stuff
from proxlast.exceptions import ProxLastValueError  # noqa: E402
from proxlast.prox_core import edge_diff, l1, prox  # noqa: E402
from proxlast.verify import (  # noqa: E402
    CELL_HANDLERS,
    SCOPES,
    VerificationReport,
    brute_force_edge_prox,
    evaluate_cell,
    expand_scope,
    lasso_fixture,
    run_verification,
)


def _raise(params):
    raise ProxLastValueError(f"bad cell {params}")


class TestExpandScope(unittest.TestCase):
    """Test the grid sizes of each scope."""

    def test_counts(self):
        """Test the number of cells per scope."""
        expected = {"alpha": 76 + 45, "prox": 700 + 80, "variance": 100, "descent": 100, "bounds": 4}
        for scope in SCOPES:
            self.assertEqual(len(expand_scope(scope)), expected[scope], scope)
        self.assertEqual(len(expand_scope("all")), sum(expected.values()))

    def test_cell_names_are_unique(self):
        """Test that check/cell names identify a cell."""
        names = [f"{kind}/{name}" for kind, name, _ in expand_scope("all")]
        self.assertEqual(len(names), len(set(names)))

    def test_seed_reaches_cells(self):
        """Test that the seed is carried into seeded cells."""
        _, _, params = expand_scope("variance", seed=9)[0]
        self.assertEqual(params["seed"], 9)

    def test_unknown_scope(self):
        """Test that an unknown scope raises."""
        with self.assertRaises(ProxLastValueError):
            expand_scope("everything")


class TestBruteForce(unittest.TestCase):
    """Test the grid-search reference for edge proxes."""

    def test_matches_closed_form(self):
        """Test both norms and block sizes against prox."""
        rng = np.random.default_rng(0)
        for block_dim in (1, 2):
            for p in (1, 2):
                op = edge_diff(0, 1, 0.7, block_dim=block_dim, p=p)
                v = 2.0 * rng.standard_normal(2 * block_dim)
                np.testing.assert_allclose(brute_force_edge_prox(op, v, 0.5), prox(op, v, 0.5), atol=1e-4)

    def test_refuses_other_kinds(self):
        """Test that only small edge components are accepted."""
        with self.assertRaises(ProxLastValueError):
            brute_force_edge_prox(l1(1.0), np.zeros(2), 1.0)
        with self.assertRaises(ProxLastValueError):
            brute_force_edge_prox(edge_diff(0, 1, 1.0, block_dim=3), np.zeros(6), 1.0)


class TestEvaluateCell(unittest.TestCase):
    """Test single cells and failure capture."""

    def test_fixture(self):
        """Test the shared Lasso fixture in both shapes."""
        problem, certificate = lasso_fixture(0, False)
        self.assertEqual((problem.oracle.N, problem.dim), (20, 10))
        self.assertTrue(np.isfinite(certificate.h_star))
        split, _ = lasso_fixture(0, True)
        self.assertEqual(split.m, 3)

    def test_cells_pass(self):
        """Test one cell of each kind."""
        for cell in (
            ("bounds", "T=100", {"T": 100}),
            ("alpha", "T=10,a=0.5", {"T": 10, "a": 0.5}),
            ("ta_constant", "T=100,beta=0.5,C=3.0", {"T": 100, "beta": 0.5, "C": 3.0}),
            ("prox", "ball#0", {"kind": "ball", "probe": 0, "seed": 0}),
            ("edge_brute_force", "d=2,p=2#0", {"block_dim": 2, "p": 2, "case": 0, "seed": 0}),
            ("variance", "point#1", {"point": 1, "seed": 0}),
            ("descent", "ripm#0", {"variant": "ripm", "pair": 0, "seed": 0}),
        ):
            result = evaluate_cell(cell)
            self.assertTrue(result["passed"], result)
            self.assertEqual((result["check"], result["cell"]), cell[:2])

    def test_raising_cell_is_a_failure(self):
        """Test that an exception is recorded instead of propagated."""
        with patch.dict(CELL_HANDLERS, {"boom": _raise}):
            result = evaluate_cell(("boom", "only", {"x": 1}))
        self.assertFalse(result["passed"])
        self.assertIn("bad cell", result["error"])


class TestVerificationReport(unittest.TestCase):
    """Test the report and the scope runner."""

    def test_report(self):
        """Test counts, failures and the JSON view."""
        report = VerificationReport(
            scope="bounds",
            seed=0,
            cells=[
                {"check": "bounds", "cell": "T=10", "passed": True},
                {"check": "bounds", "cell": "T=100", "passed": False},
                {"check": "alpha", "cell": "T=10,a=0.5", "passed": True},
            ],
        )
        self.assertFalse(report.passed)
        self.assertEqual(report.failed_cells, ["bounds/T=100"])
        self.assertEqual(report.counts(), {"bounds": {"passed": 1, "total": 2}, "alpha": {"passed": 1, "total": 1}})
        payload = json.loads(report.to_json())
        self.assertEqual(payload["failed_cells"], ["bounds/T=100"])
        self.assertFalse(payload["passed"])

    def test_alpha_scope(self):
        """Test that every schedule cell passes."""
        report = run_verification("alpha")
        self.assertTrue(report.passed, report.failed_cells)
        self.assertEqual(len(report.cells), 121)

    def test_bounds_scope(self):
        """Test that every bound cell passes."""
        self.assertTrue(run_verification("bounds").passed)

    def test_variance_and_descent_scopes(self):
        """Test the empirical checks on the shared fixture."""
        for scope in ("variance", "descent"):
            report = run_verification(scope, seed=1)
            self.assertTrue(report.passed, report.failed_cells)

    @pytest.mark.slow
    def test_prox_scope(self):
        """Test every prox cell, brute force included."""
        report = run_verification("prox")
        self.assertTrue(report.passed, report.failed_cells)

    @pytest.mark.slow
    def test_parallel_matches_serial(self):
        """Test that a worker pool gives the same cells as a serial run."""
        serial = run_verification("bounds", jobs=1)
        parallel = run_verification("bounds", jobs=2)
        self.assertEqual(json.loads(serial.to_json()), json.loads(parallel.to_json()))
