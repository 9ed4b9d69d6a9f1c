# -*- coding: utf-8 -*-
# pylint: disable=wrong-import-position
"""Test configuration Settings class and the experiment-file reader."""

# python stuff
import os
import re
import sys
import unittest
from unittest.mock import patch

# 3rd party stuff
from pydantic_core import ValidationError as PydanticValidationError


HERE = os.path.abspath(os.path.dirname(__file__))
PYTHON_ROOT = os.path.dirname(os.path.dirname(HERE))
if PYTHON_ROOT not in sys.path:
    sys.path.append(PYTHON_ROOT)  # noqa: E402

# our stuff
from proxlast.bench import load_experiment_spec  # noqa: E402
from proxlast.conf import (  # noqa: E402
    Algorithms,
    Settings,
    SettingsDefaults,
    SingletonSettings,
    get_semantic_version,
    read_config_file,
)
from proxlast.const import ENV_SEED  # noqa: E402
from proxlast.exceptions import ProxLastConfigurationError  # noqa: E402
from proxlast.tests.test_setup import get_test_path  # noqa: E402


class TestConfiguration(unittest.TestCase):
    """Test configuration."""

    def setUp(self):
        # Save current environment variables
        self.saved_env = dict(os.environ)

    def tearDown(self):
        # Restore environment variables
        os.environ.clear()
        os.environ.update(self.saved_env)

    def test_conf_defaults(self):
        """Test that settings == SettingsDefaults when no environment is set."""
        os.environ.pop(ENV_SEED, None)
        mock_settings = Settings()

        self.assertIsNone(mock_settings.seed)
        self.assertEqual(mock_settings.divergence_factor, SettingsDefaults.DIVERGENCE_FACTOR)
        self.assertEqual(mock_settings.checkpoints_per_run, SettingsDefaults.CHECKPOINTS_PER_RUN)
        self.assertEqual(mock_settings.certify_tol, SettingsDefaults.CERTIFY_TOL)
        self.assertEqual(mock_settings.exact_expectation_threshold, SettingsDefaults.EXACT_EXPECTATION_THRESHOLD)
        self.assertEqual(mock_settings.descent_rtol, SettingsDefaults.DESCENT_RTOL)
        self.assertGreaterEqual(mock_settings.jobs, 1)

    @patch.dict(os.environ, {ENV_SEED: "42"})
    def test_env_seed(self):
        """Test that PROXLAST_SEED overrides the seed."""
        mock_settings = Settings()
        self.assertEqual(mock_settings.seed, 42)

    @patch.dict(os.environ, {ENV_SEED: ""})
    def test_env_seed_empty(self):
        """Test that an empty PROXLAST_SEED means no override."""
        mock_settings = Settings()
        self.assertIsNone(mock_settings.seed)

    @patch.dict(os.environ, {ENV_SEED: "-1"})
    def test_env_seed_negative(self):
        """Test that a negative seed is rejected."""
        with self.assertRaises(PydanticValidationError):
            Settings()

    @patch.dict(os.environ, {ENV_SEED: "not-a-number"})
    def test_env_seed_garbage(self):
        """Test that a non-integer seed is rejected."""
        with self.assertRaises(PydanticValidationError):
            Settings()

    def test_settings_are_frozen(self):
        """Test that settings cannot be reassigned."""
        mock_settings = Settings()
        with self.assertRaises(PydanticValidationError):
            mock_settings.seed = 3

    def test_dump(self):
        """Test that dump reports environment, algorithms and defaults."""
        dump = Settings().dump
        self.assertIn("algorithms", dump)
        self.assertIn("environment", dump)
        self.assertIn("settings_defaults", dump)
        self.assertEqual(dump["seed"]["env_var"], ENV_SEED)
        self.assertEqual(list(dump.keys()), sorted(dump.keys()))

    def test_singleton(self):
        """Test that SingletonSettings hands out one instance."""
        self.assertIs(SingletonSettings().settings, SingletonSettings().settings)

    def test_semantic_version(self):
        """Test the semantic version format."""
        self.assertRegex(get_semantic_version(), re.compile(r"^\d+\.\d+\.\d+$"))


class TestAlgorithms(unittest.TestCase):
    """Test the algorithm registry."""

    def test_enabled(self):
        """Test which algorithms are enabled."""
        self.assertTrue(Algorithms.enabled("spgd"))
        self.assertTrue(Algorithms.enabled(Algorithms.RIPM))
        self.assertFalse(Algorithms.enabled("spp"))
        self.assertFalse(Algorithms.enabled("adam"))
        self.assertEqual(sorted(Algorithms.enabled_algorithms()), ["blockprox", "proj_sgd", "ripm", "spgd"])

    def test_raise_error_on_disabled(self):
        """Test that disabled and unknown algorithms raise."""
        Algorithms.raise_error_on_disabled("spgd")
        with self.assertRaises(ProxLastConfigurationError):
            Algorithms.raise_error_on_disabled("spp")
        with self.assertRaises(ProxLastConfigurationError):
            Algorithms.raise_error_on_disabled("adam")

    def test_to_dict(self):
        """Test the registry dict."""
        registry = Algorithms.to_dict()
        self.assertEqual(registry["SPP"], ("spp", False))
        self.assertEqual(registry["SPGD"], ("spgd", True))


class TestConfigFile(unittest.TestCase):
    """Test the flat key=value experiment file."""

    def test_read_config_file(self):
        """Test values and line numbers."""
        values, line_map = read_config_file(get_test_path("good_config.env"))
        self.assertEqual(values["problem"], "lasso")
        self.assertEqual(values["T_grid"], "10,20")
        self.assertEqual(line_map["problem"], 2)
        self.assertEqual(line_map["master_seed"], 11)

    def test_missing_file(self):
        """Test that a missing file raises FileNotFoundError."""
        with self.assertRaises(FileNotFoundError):
            read_config_file(get_test_path("does_not_exist.env"))

    def test_diagnostics_name_lines_and_fields(self):
        """Test that validation errors point at file lines."""
        path = get_test_path("bad_config.env")
        with self.assertRaises(ProxLastConfigurationError) as context:
            load_experiment_spec(path)
        message = context.exception.message
        self.assertIn(f"{path}:6: trials", message)
        self.assertIn(f"{path}:7: T_grid", message)

    def test_unknown_key(self):
        """Test that keys outside the schema are rejected."""
        path = get_test_path("unknown_key.env")
        with self.assertRaises(ProxLastConfigurationError) as context:
            load_experiment_spec(path)
        self.assertIn(f"{path}:2: horizon", context.exception.message)

    def test_unknown_algorithm(self):
        """Test that an unknown algorithm is a configuration error."""
        with self.assertRaises(ProxLastConfigurationError) as context:
            load_experiment_spec(get_test_path("bad_algorithm.env"))
        self.assertIn("algorithm", context.exception.message)

    def test_seed_override(self):
        """Test that a seed override replaces master_seed."""
        path = get_test_path("good_config.env")
        self.assertEqual(load_experiment_spec(path).master_seed, 3)
        self.assertEqual(load_experiment_spec(path, seed_override=11).master_seed, 11)
