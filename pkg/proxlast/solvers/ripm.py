# -*- coding: utf-8 -*-
"""
Randomized incremental proximal method for g = sum_j g_j.

    x_{t+1} = prox_{tau m g_{j_t}}(x_t - tau * grad f_{i_t}(x_t))

i_t and j_t come from independent streams; i_t uses the same stream as SPGD
so that m = 1 reproduces SPGD exactly.
"""

# python stuff
import logging

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastConfigurationError
from proxlast.oracles import ProblemInstance, SolutionCertificate, grad_component, smoothness_constant
from proxlast.prox_core import prox
from proxlast.regularizers import sample_component
from proxlast.solvers.base import IterateTrace, SolverConfig, TraceRecorder, resolve_step_size, sampling_streams


logger = logging.getLogger(__name__)


def run_ripm(problem: ProblemInstance, certificate: SolutionCertificate, config: SolverConfig, x0=None) -> IterateTrace:
    """
    Run exactly T RIPM steps. The sampled component's prox is taken with step m * tau.

    Raises ProxLastConfigurationError when g is not decomposable, ProxLastAdmissionError
    when a component is not Lipschitz and ProxLastDivergenceError when an iterate blows up.
    """
    if not problem.is_decomposable:
        raise ProxLastConfigurationError("ripm needs a DecomposableRegularizer")
    reg = problem.regularizer
    reg.require_lipschitz()
    oracle = problem.oracle

    tau = resolve_step_size(config.step_rule, smoothness_constant(oracle), config.horizon_T)
    prox_step = tau * reg.m
    rng_i, rng_j = sampling_streams(config.seed)
    indices = rng_i.integers(oracle.N, size=config.horizon_T)

    x = (problem.x0 if x0 is None else np.asarray(x0, dtype=float)).copy()
    recorder = TraceRecorder("ripm", problem.objective, certificate.h_star, x, config, tau)
    logger.debug("ripm on %s: T=%d tau=%.4e m=%d seed=%d", problem.name, config.horizon_T, tau, reg.m, config.seed)

    for t in range(1, config.horizon_T + 1):
        y = x - tau * grad_component(oracle, indices[t - 1], x)
        recorder.guard(t, y)
        _, op = sample_component(reg, rng_j)
        x = prox(op, y, prox_step)
        recorder.record(t, x)
    return recorder.finish(x, config.seed)
