# -*- coding: utf-8 -*-
"""Module exceptions.py"""

# 3rd party stuff
from pydantic import ValidationError


class ProxLastConfigurationError(Exception):
    """Exception raised for errors in the configuration."""

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class ProxLastValueError(Exception):
    """Exception raised for invalid arguments: nonpositive steps, nonfinite input, bad indices."""

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class ProxLastAdmissionError(Exception):
    """Exception raised when a regularizer fails the Lipschitz admission check of a solver."""

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class ProxLastDivergenceError(Exception):
    """Exception raised when a solver iterate becomes nonfinite or leaves the divergence radius."""

    def __init__(self, message, iteration: int, norm: float):
        self.message = message
        self.iteration = iteration
        self.norm = norm
        super().__init__(self.message)


class ProxLastConvergenceError(Exception):
    """Exception raised when the reference solver exhausts its iteration cap."""

    def __init__(self, message, best_x, best_value: float, best_residual: float):
        self.message = message
        self.best_x = best_x
        self.best_value = best_value
        self.best_residual = best_residual
        super().__init__(self.message)


class ProxLastVerificationError(Exception):
    """Exception raised when one or more invariant checks fail."""

    def __init__(self, message, failed_cells=None):
        self.message = message
        self.failed_cells = failed_cells or []
        super().__init__(self.message)


# exception type -> (process exit code, label)
EXIT_CODE_MAP = {
    ProxLastVerificationError: (1, "VerificationFailed"),
    ProxLastConfigurationError: (2, "ConfigurationError"),
    ProxLastValueError: (2, "InvalidArgument"),
    ProxLastAdmissionError: (2, "ConfigurationError"),
    ValidationError: (2, "ConfigurationError"),
    FileNotFoundError: (2, "FileNotFound"),
    IsADirectoryError: (2, "FileNotFound"),
    Exception: (1, "InternalError"),
}
