# -*- coding: utf-8 -*-
# pylint: disable=wrong-import-position
"""Test utils."""

# python stuff
import json
import os
import sys
import tempfile
import unittest

# 3rd party stuff
import numpy as np


HERE = os.path.abspath(os.path.dirname(__file__))
PYTHON_ROOT = os.path.dirname(os.path.dirname(HERE))
if PYTHON_ROOT not in sys.path:
    sys.path.append(PYTHON_ROOT)  # noqa: E402

# our stuff
from proxlast.exceptions import (  # noqa: E402
    EXIT_CODE_MAP,
    ProxLastConfigurationError,
    ProxLastDivergenceError,
    ProxLastVerificationError,
)
from proxlast.utils import (  # noqa: E402
    atomic_write_text,
    exception_report,
    recursive_sort_dict,
    stable_digest,
    to_json,
)


class TestUtils(unittest.TestCase):
    """Test utils."""

    def test_to_json_numpy(self):
        """Test that numpy values serialize."""
        payload = {"a": np.arange(3), "b": np.float64(0.5), "c": np.int64(7), "d": np.bool_(True)}
        self.assertEqual(json.loads(to_json(payload)), {"a": [0, 1, 2], "b": 0.5, "c": 7, "d": True})

    def test_stable_digest(self):
        """Test that the digest ignores key order and tracks values."""
        self.assertEqual(stable_digest({"a": 1, "b": [1, 2]}), stable_digest({"b": [1, 2], "a": 1}))
        self.assertNotEqual(stable_digest({"a": 1}), stable_digest({"a": 2}))
        self.assertEqual(len(stable_digest({})), 64)

    def test_atomic_write_text(self):
        """Test that the file is written in full and no temp file is left behind."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "report.json")
            self.assertEqual(atomic_write_text(path, "first"), path)
            atomic_write_text(path, "second")
            with open(path, "r", encoding="utf-8") as file:
                self.assertEqual(file.read(), "second")
            self.assertEqual(os.listdir(tmp), ["report.json"])

    def test_exception_report(self):
        """Test the error payload."""
        try:
            raise ProxLastConfigurationError("bad config")
        except ProxLastConfigurationError as e:
            report = exception_report(e)
        self.assertEqual(report["error"], "bad config")
        self.assertEqual(report["type"], "ProxLastConfigurationError")
        self.assertIn("Traceback", report["description"])

    def test_recursive_sort_dict(self):
        """Test nested key sorting."""
        retval = recursive_sort_dict({"b": {"z": 1, "y": 2}, "a": 0})
        self.assertEqual(list(retval.keys()), ["a", "b"])
        self.assertEqual(list(retval["b"].keys()), ["y", "z"])


class TestExceptions(unittest.TestCase):
    """Test exception payloads and the exit code map."""

    def test_divergence_payload(self):
        """Test that divergence carries the iteration and the norm."""
        e = ProxLastDivergenceError("boom", iteration=12, norm=1e9)
        self.assertEqual((e.message, e.iteration, e.norm), ("boom", 12, 1e9))

    def test_verification_payload(self):
        """Test that verification errors carry the failed cells."""
        self.assertEqual(ProxLastVerificationError("failed").failed_cells, [])
        self.assertEqual(ProxLastVerificationError("failed", ["alpha/T=10"]).failed_cells, ["alpha/T=10"])

    def test_exit_codes(self):
        """Test the exit code contract."""
        self.assertEqual(EXIT_CODE_MAP[ProxLastVerificationError][0], 1)
        self.assertEqual(EXIT_CODE_MAP[ProxLastConfigurationError][0], 2)
        self.assertEqual(EXIT_CODE_MAP[FileNotFoundError][0], 2)
        self.assertEqual(EXIT_CODE_MAP[Exception][0], 1)
