# -*- coding: utf-8 -*-
"""
Stochastic proximal gradient descent and its projected special case.

    x_{t+1} = prox_{tau g}(x_t - tau * grad f_{i_t}(x_t)),  i_t ~ Uniform[0, N)
"""

# python stuff
import logging
from typing import Optional

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastConfigurationError
from proxlast.oracles import ProblemInstance, SolutionCertificate, grad_component, smoothness_constant
from proxlast.prox_core import ProxKind, ProxOperator, is_indicator, prox
from proxlast.solvers.base import IterateTrace, SolverConfig, TraceRecorder, resolve_step_size, sampling_streams


logger = logging.getLogger(__name__)


def _monolithic(problem: ProblemInstance, algorithm: str) -> ProxOperator:
    if problem.is_decomposable:
        raise ProxLastConfigurationError(
            f"{algorithm} needs a regularizer with a closed-form prox; got a sum of {problem.m} components"
        )
    return problem.regularizer


def _run(
    algorithm: str,
    problem: ProblemInstance,
    op: ProxOperator,
    certificate: SolutionCertificate,
    config: SolverConfig,
    x0: Optional[np.ndarray],
) -> IterateTrace:
    oracle = problem.oracle
    tau = resolve_step_size(config.step_rule, smoothness_constant(oracle), config.horizon_T)
    rng_i, _ = sampling_streams(config.seed)
    indices = rng_i.integers(oracle.N, size=config.horizon_T)

    x = (problem.x0 if x0 is None else np.asarray(x0, dtype=float)).copy()
    recorder = TraceRecorder(algorithm, problem.objective, certificate.h_star, x, config, tau)
    logger.debug("%s on %s: T=%d tau=%.4e seed=%d", algorithm, problem.name, config.horizon_T, tau, config.seed)

    for t in range(1, config.horizon_T + 1):
        y = x - tau * grad_component(oracle, indices[t - 1], x)
        recorder.guard(t, y)
        x = prox(op, y, tau)
        recorder.record(t, x)
    return recorder.finish(x, config.seed)


def run_spgd(
    problem: ProblemInstance, certificate: SolutionCertificate, config: SolverConfig, x0=None
) -> IterateTrace:
    """
    Run exactly T SPGD steps from problem.x0 (or x0) with a constant step size.

    Raises ProxLastConfigurationError for a decomposable g or an invalid step rule
    and ProxLastDivergenceError when an iterate blows up.
    """
    op = _monolithic(problem, "spgd")
    return _run("spgd", problem, op, certificate, config, x0)


def run_proj_sgd(
    problem: ProblemInstance, certificate: SolutionCertificate, config: SolverConfig, x0=None
) -> IterateTrace:
    """Projected SGD: SPGD where g is the indicator of a box or a ball (or zero, the whole space)."""
    op = _monolithic(problem, "proj_sgd")
    if not (is_indicator(op) or op.kind == ProxKind.ZERO):
        raise ProxLastConfigurationError(f"proj_sgd needs an indicator regularizer, got {op.kind.value}")
    return _run("proj_sgd", problem, op, certificate, config, x0)
