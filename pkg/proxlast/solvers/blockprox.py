# -*- coding: utf-8 -*-
"""
BlockProx: a full gradient step on a node-separable f, then one randomized edge
prox per node.

    y_t = x_t - tau * grad f(x_t)
    x_{t+1}^(i) = [prox_{m tau g_{j_i}}(y_t)]_i   if i is in the support of g_{j_i}
                  y_t^(i)                          otherwise

Every node draws its own edge j_i. Nodes that drew the same edge share one prox
evaluation; all node updates read y_t only.
"""

# python stuff
import logging
from typing import Dict

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastConfigurationError
from proxlast.oracles import OracleKind, ProblemInstance, SolutionCertificate
from proxlast.prox_core import ProxKind, prox, support_nodes
from proxlast.solvers.base import (
    Fixed,
    IterateTrace,
    PowerLaw,
    SolverConfig,
    TraceRecorder,
    resolve_step_size,
    sampling_streams,
)


logger = logging.getLogger(__name__)


def blockprox_step_size(config: SolverConfig, lipschitz: float) -> float:
    """
    Fixed and PowerLaw rules are used as given. Horizon rules give 1/(C L T**beta)
    with blockprox_step="horizon" and 1/(C L) with blockprox_step="constant".
    """
    rule = config.step_rule
    if isinstance(rule, (Fixed, PowerLaw)):
        return resolve_step_size(rule, lipschitz, config.horizon_T)
    if not lipschitz > 0 or not np.isfinite(lipschitz):
        raise ProxLastConfigurationError(f"blockprox needs a finite positive L, got {lipschitz}")
    if config.blockprox_step == "constant":
        return 1.0 / (rule.C * lipschitz)
    return 1.0 / (rule.C * lipschitz * float(config.horizon_T) ** rule.beta)


# pylint: disable=too-many-locals
def run_blockprox(
    problem: ProblemInstance, certificate: SolutionCertificate, config: SolverConfig, x0=None
) -> IterateTrace:
    """
    Run exactly T BlockProx steps.

    A graph without edges is written as the regularizer [zero()]: zero()
    supports no node, so every block keeps y_t and the run is gradient descent.
    Edges of weight 0 give the same iterates.

    Raises ProxLastConfigurationError for a non-separable f, a monolithic g or a
    block dimension mismatch between f and the edge components.
    """
    oracle = problem.oracle
    if oracle.kind != OracleKind.SEPARABLE:
        raise ProxLastConfigurationError(f"blockprox needs a node-separable f, got {oracle.kind.value}")
    if not problem.is_decomposable:
        raise ProxLastConfigurationError("blockprox needs a DecomposableRegularizer")
    reg = problem.regularizer
    reg.require_lipschitz()
    d = oracle.block_dim
    num_nodes = oracle.N
    for op in reg.components:
        if op.kind == ProxKind.EDGE_DIFF and (op.block_dim != d or max(op.i, op.j) >= num_nodes):
            raise ProxLastConfigurationError(
                f"edge ({op.i}, {op.j}) with block_dim {op.block_dim} does not match {num_nodes} nodes of size {d}"
            )
    supports = [support_nodes(op, num_nodes) for op in reg.components]

    tau = blockprox_step_size(config, problem.full_smoothness_constant())
    prox_step = reg.m * tau
    _, rng_j = sampling_streams(config.seed)

    x = (problem.x0 if x0 is None else np.asarray(x0, dtype=float)).copy()
    recorder = TraceRecorder("blockprox", problem.objective, certificate.h_star, x, config, tau)
    logger.debug("blockprox on %s: T=%d tau=%.4e nodes=%d m=%d", problem.name, config.horizon_T, tau, num_nodes, reg.m)

    for t in range(1, config.horizon_T + 1):
        y = x - tau * problem.full_grad(x)
        recorder.guard(t, y)
        drawn = rng_j.integers(reg.m, size=num_nodes)
        cache: Dict[int, np.ndarray] = {}
        x = y.copy()
        for node, j in enumerate(drawn):
            j = int(j)
            if node not in supports[j]:
                continue
            if j not in cache:
                cache[j] = prox(reg.components[j], y, prox_step)
            block = slice(node * d, (node + 1) * d)
            x[block] = cache[j][block]
        recorder.record(t, x)
    return recorder.finish(x, config.seed)
