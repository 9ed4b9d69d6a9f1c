# -*- coding: utf-8 -*-
"""Deterministic reference solver: accelerated proximal gradient with adaptive restart."""

# python stuff
import logging
from typing import TYPE_CHECKING, Tuple, Union

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastConvergenceError, ProxLastValueError


if TYPE_CHECKING:
    from proxlast.oracles import ProblemInstance


logger = logging.getLogger(__name__)


# pylint: disable=too-many-locals
def run_fista(
    problem: "ProblemInstance", x0, tol: float, max_iter: int, return_iterations: bool = False
) -> Union[Tuple[np.ndarray, float], Tuple[np.ndarray, float, int]]:
    """
    Minimize h = f + g until the composite gradient mapping
    L * ||y - prox_{g/L}(y - grad f(y) / L)|| drops to tol.

    Returns (x, h(x)), or (x, h(x), iterations) with return_iterations. Raises
    ProxLastConvergenceError with the best point seen when max_iter is exhausted.
    """
    if not tol > 0:
        raise ProxLastValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ProxLastValueError(f"max_iter must be >= 1, got {max_iter}")

    lipschitz = problem.full_smoothness_constant()
    if lipschitz <= 0:
        # f is constant; any positive step works for the proximal point iteration
        lipschitz = 1.0
    step = 1.0 / lipschitz
    prox_g = problem.reference_prox()
    accuracy = 0.1 * tol / lipschitz

    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    t = 1.0
    best_x, best_value, best_residual = x.copy(), problem.objective(x), float("inf")
    restarts = 0

    for iteration in range(1, max_iter + 1):
        x_new = prox_g(y - step * problem.full_grad(y), step, accuracy)
        residual = lipschitz * float(np.linalg.norm(y - x_new))
        h_new = problem.objective(x_new)
        if h_new <= best_value:
            best_x, best_value, best_residual = x_new.copy(), h_new, residual

        if residual <= tol:
            logger.debug(
                "fista converged in %d iterations (%d restarts), residual %.3e, h %.12g",
                iteration,
                restarts,
                residual,
                h_new,
            )
            if return_iterations:
                return x_new, h_new, iteration
            return x_new, h_new

        # gradient-based adaptive restart
        if np.dot(y - x_new, x_new - x) > 0:
            restarts += 1
            t = 1.0
            y = x_new.copy()
        else:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y = x_new + ((t - 1.0) / t_next) * (x_new - x)
            t = t_next
        x = x_new

    raise ProxLastConvergenceError(
        f"fista did not reach tol={tol:.3e} within {max_iter} iterations; best h={best_value:.12g}, "
        f"residual={best_residual:.3e}",
        best_x=best_x,
        best_value=best_value,
        best_residual=best_residual,
    )
