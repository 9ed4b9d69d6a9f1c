# -*- coding: utf-8 -*-
"""
Stochastic proximal point method: RIPM with f = 0.

    x_{t+1} = prox_{tau g_{j_t}}(x_t)

The objective tracked is the mean (1/m) sum_j g_j, which each sampled
component estimates without bias.
"""

# python stuff
import logging
from typing import Optional

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastValueError
from proxlast.prox_core import prox
from proxlast.regularizers import DecomposableRegularizer, eval_sum, sample_component
from proxlast.solvers.base import IterateTrace, SolverConfig, TraceRecorder, resolve_step_size, sampling_streams


logger = logging.getLogger(__name__)


def run_spp(
    regularizer: DecomposableRegularizer, config: SolverConfig, x0, reference_value: Optional[float] = None
) -> IterateTrace:
    """
    Run exactly T proximal steps on randomly drawn components.

    Horizon step rules are resolved with L = 1. Gaps are measured against
    reference_value (the minimum of the mean objective) or against 0 when it is unknown.
    """
    regularizer.require_lipschitz()
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (regularizer.dim,):
        raise ProxLastValueError(f"x0 must have length {regularizer.dim}, got shape {x.shape}")
    if reference_value is None:
        logger.debug("spp without a reference value; gaps are raw objective values")
        reference_value = 0.0

    def objective(z):
        return eval_sum(regularizer, z) / regularizer.m

    tau = resolve_step_size(config.step_rule, 1.0, config.horizon_T)
    _, rng_j = sampling_streams(config.seed)
    recorder = TraceRecorder("spp", objective, reference_value, x, config, tau)

    for t in range(1, config.horizon_T + 1):
        _, op = sample_component(regularizer, rng_j)
        x = prox(op, x, tau)
        recorder.record(t, x)
    return recorder.finish(x, config.seed)
