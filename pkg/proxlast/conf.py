# -*- coding: utf-8 -*-
# pylint: disable=no-member
"""
Configuration for proxlast.

This module configures the package. It uses the pydantic_settings library to
validate the configuration values. The configuration values are initialized
according to the following prioritization sequence:
    1. constructor
    2. environment variables
    3. dotenv file
    4. defaults

The only environment variable that is read is PROXLAST_SEED, the master seed
override for experiment runs. Numerical knobs (divergence factor, exact-expectation
threshold, certification tolerances) are read-only SettingsDefaults constants.

Experiment configuration lives in flat key=value text files. read_config_file()
parses them and keeps the line number of every key so that validation errors
can point at the offending line.

The Settings class also provides a dump property that returns a dictionary of all
configuration values. It is embedded into every run manifest.
"""

# python stuff
import importlib.util
import logging
import os
import platform
import re
from importlib import metadata
from typing import Any, Dict, List, Optional, Tuple, Union

# 3rd party stuff
from dotenv import dotenv_values, load_dotenv
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# our stuff
from proxlast.const import ENV_SEED, HERE
from proxlast.exceptions import ProxLastConfigurationError
from proxlast.utils import recursive_sort_dict


logger = logging.getLogger(__name__)
DOT_ENV_LOADED = load_dotenv()
REPORTED_PACKAGES = ["numpy", "scipy", "pandas", "pydantic", "pydantic-settings", "python-dotenv"]


def load_version() -> Dict[str, str]:
    """Stringify the __version__ module."""
    version_file_path = os.path.join(HERE, "__version__.py")
    if not os.path.exists(version_file_path):
        return {}
    spec = importlib.util.spec_from_file_location("__version__", version_file_path)
    version_module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(version_module)
    return version_module.__dict__


VERSION = load_version()


def get_semantic_version() -> str:
    """
    Return the semantic version number.

    Example valid values of __version__.py are:
    0.1.0
    0.1.0-next.1
    0.1.0-next-major.1
    """
    if not isinstance(VERSION, dict):
        return "unknown"

    version = VERSION.get("__version__")
    if not version:
        return "unknown"
    version = re.sub(r"-next\.\d+", "", version)
    return re.sub(r"-next-major\.\d+", "", version)


class Algorithms:
    """Algorithms known to the experiment runner. This is intended to be permanently read-only"""

    SPGD = ("spgd", True)
    PROJ_SGD = ("proj_sgd", True)
    RIPM = ("ripm", True)
    BLOCKPROX = ("blockprox", True)
    # gradient-free; reachable through solvers.run_spp only
    SPP = ("spp", False)

    @classmethod
    def enabled(cls, algorithm: Union[str, Tuple[str, bool]]) -> bool:
        """Is the algorithm enabled?"""
        if isinstance(algorithm, tuple):
            algorithm = algorithm[0]
        return algorithm in cls.enabled_algorithms()

    @classmethod
    def raise_error_on_disabled(cls, algorithm: Union[str, Tuple[str, bool]]) -> None:
        """Raise an error if the algorithm is unknown or disabled"""
        if not cls.enabled(algorithm):
            raise ProxLastConfigurationError(f"{algorithm} is not an enabled algorithm. See conf.Algorithms")

    @classmethod
    def to_dict(cls):
        """Convert Algorithms to dict"""
        return {
            key: value
            for key, value in Algorithms.__dict__.items()
            if not key.startswith("__")
            and not callable(key)
            and key not in ["enabled", "raise_error_on_disabled", "to_dict", "enabled_algorithms"]
        }

    @classmethod
    def enabled_algorithms(cls) -> List[str]:
        """Return a list of enabled algorithms"""
        return [
            getattr(cls, key)[0]
            for key in dir(cls)
            if not key.startswith("__")
            and not callable(getattr(cls, key))
            and key not in ["enabled", "raise_error_on_disabled", "to_dict", "enabled_algorithms"]
            and getattr(cls, key)[1] is True
        ]


class SettingsDefaults:
    """Default values for Settings"""

    SEED = None
    DUMP_DEFAULTS: bool = True

    # solvers
    DIVERGENCE_FACTOR: float = 1e6
    CHECKPOINTS_PER_RUN: int = 50

    # reference solver
    CERTIFY_TOL: float = 1e-10
    CERTIFY_TOL_DECOMPOSABLE: float = 1e-5
    CERTIFY_MAX_ITER: int = 200_000
    PROX_SUM_TOL: float = 1e-10
    PROX_SUM_MAX_ITER: int = 5_000

    # theory checks
    EXACT_EXPECTATION_THRESHOLD: int = 10_000
    DESCENT_RESAMPLES: int = 10_000
    PROX_OPTIMALITY_TOL: float = 1e-9
    VARIANCE_TRANSFER_RTOL: float = 1e-8
    DESCENT_RTOL: float = 1e-8

    # worker pool
    JOBS: int = os.cpu_count() or 1

    @classmethod
    def to_dict(cls):
        """Convert SettingsDefaults to dict"""
        return {
            key: value
            for key, value in SettingsDefaults.__dict__.items()
            if not key.startswith("__") and not callable(key) and key != "to_dict"
        }


class Settings(BaseSettings):
    """Settings for proxlast"""

    model_config = SettingsConfigDict(env_prefix="PROXLAST_", frozen=True)

    _dump: Optional[dict] = None

    seed: Optional[int] = Field(SettingsDefaults.SEED, description=f"master seed override, read from {ENV_SEED}")
    dump_defaults: bool = Field(SettingsDefaults.DUMP_DEFAULTS)

    def __init__(self, **data: Any):
        super().__init__(**data)
        # pylint: disable=logging-fstring-interpolation
        logger.debug(f"initialized settings: seed={self.seed}")

    @property
    def divergence_factor(self) -> float:
        """Iterates with norm above factor * (1 + ||x0||) are treated as diverged."""
        return SettingsDefaults.DIVERGENCE_FACTOR

    @property
    def checkpoints_per_run(self) -> int:
        """Default number of gap checkpoints recorded by a solver run."""
        return SettingsDefaults.CHECKPOINTS_PER_RUN

    @property
    def certify_tol(self) -> float:
        """Gradient-mapping tolerance of the reference solver for closed-form regularizers."""
        return SettingsDefaults.CERTIFY_TOL

    @property
    def certify_tol_decomposable(self) -> float:
        """Gradient-mapping tolerance when the prox of g is itself computed iteratively."""
        return SettingsDefaults.CERTIFY_TOL_DECOMPOSABLE

    @property
    def certify_max_iter(self) -> int:
        """Iteration cap of the reference solver."""
        return SettingsDefaults.CERTIFY_MAX_ITER

    @property
    def prox_sum_tol(self) -> float:
        """Distance to the exact prox of a sum at which prox_sum stops."""
        return SettingsDefaults.PROX_SUM_TOL

    @property
    def prox_sum_max_iter(self) -> int:
        """Iteration cap of the prox of a sum."""
        return SettingsDefaults.PROX_SUM_MAX_ITER

    @property
    def exact_expectation_threshold(self) -> int:
        """Largest N*m for which expectations are enumerated instead of sampled."""
        return SettingsDefaults.EXACT_EXPECTATION_THRESHOLD

    @property
    def descent_resamples(self) -> int:
        """Monte Carlo sample count of the descent check."""
        return SettingsDefaults.DESCENT_RESAMPLES

    @property
    def prox_optimality_tol(self) -> float:
        """Absolute tolerance of the prox optimality inequality."""
        return SettingsDefaults.PROX_OPTIMALITY_TOL

    @property
    def variance_transfer_rtol(self) -> float:
        """Relative tolerance of the variance transfer inequality."""
        return SettingsDefaults.VARIANCE_TRANSFER_RTOL

    @property
    def descent_rtol(self) -> float:
        """Relative tolerance of the exact-enumeration descent check."""
        return SettingsDefaults.DESCENT_RTOL

    @property
    def jobs(self) -> int:
        """Default worker pool size."""
        return SettingsDefaults.JOBS

    @property
    def is_using_dotenv_file(self) -> bool:
        """Is the dotenv file being used?"""
        return DOT_ENV_LOADED

    @property
    def version(self) -> str:
        """proxlast version"""
        return get_semantic_version()

    @property
    def dump(self) -> dict:
        """Dump all settings."""

        def get_installed_packages():
            packages = []
            for name in REPORTED_PACKAGES:
                try:
                    packages.append({"name": name, "version": metadata.version(name)})
                except metadata.PackageNotFoundError:
                    packages.append({"name": name, "version": "not installed"})
            return packages

        if self._dump:
            return self._dump

        self._dump = {
            "algorithms": Algorithms.enabled_algorithms(),
            "environment": {
                "is_using_dotenv_file": self.is_using_dotenv_file,
                "os": os.name,
                "system": platform.system(),
                "release": platform.release(),
                "version": self.version,
                "python_version": platform.python_version(),
                "python_implementation": platform.python_implementation(),
                "python_installed_packages": get_installed_packages(),
            },
            "seed": {
                "env_var": ENV_SEED,
                "override": self.seed,
            },
        }
        if self.dump_defaults:
            self._dump["settings_defaults"] = SettingsDefaults.to_dict()

        self._dump = recursive_sort_dict(self._dump)
        return self._dump

    @field_validator("seed", mode="before")
    @classmethod
    def parse_seed(cls, v) -> Optional[int]:
        """Parse seed"""
        if v in [None, ""]:
            return SettingsDefaults.SEED
        v = int(v)
        if not 0 <= v < 2**63:
            raise ValueError(f"{ENV_SEED} must be in [0, 2**63), got {v}")
        return v


def read_config_file(path: str) -> Tuple[Dict[str, Optional[str]], Dict[str, int]]:
    """
    Read a flat key=value experiment config.

    Returns the raw values and the line number of every key. Blank lines and
    lines starting with '#' are ignored; a repeated key keeps its last value.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file not found: {path}")
    values = dotenv_values(path)
    line_map: Dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as file:
        for lineno, raw in enumerate(file, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key = line.split("=", 1)[0].strip()
            if key.startswith("export "):
                key = key[len("export ") :].strip()
            line_map[key] = lineno
    return dict(values), line_map


def config_error(exc: ValidationError, path: str, line_map: Dict[str, int]) -> ProxLastConfigurationError:
    """Convert a pydantic ValidationError into a diagnostic that names file lines and fields."""
    diagnostics = []
    for error in exc.errors():
        field = str(error["loc"][0]) if error.get("loc") else "<config>"
        lineno = line_map.get(field)
        where = f"{path}:{lineno}" if lineno else path
        diagnostics.append(f"{where}: {field}: {error['msg']}")
    return ProxLastConfigurationError("invalid configuration\n" + "\n".join(diagnostics))


class SingletonSettings:
    """Singleton for Settings"""

    _instance = None

    def __new__(cls):
        """Create a new instance of Settings"""
        if cls._instance is None:
            cls._instance = super(SingletonSettings, cls).__new__(cls)
            try:
                cls._instance._settings = Settings()
            except ValidationError as e:
                raise ProxLastConfigurationError("Invalid configuration: " + str(e)) from e
        return cls._instance

    @property
    def settings(self):
        """Return the settings"""
        return self._settings


settings = SingletonSettings().settings
