# -*- coding: utf-8 -*-
"""
Decomposable regularizers g = sum_j g_j.

Every component is a ProxOperator, so the stochastic solvers only ever touch
per-component proximal maps. The full prox of the sum is available through
DecomposableRegularizer.prox_sum() for the deterministic reference solver; it
runs an accelerated projected gradient method on the dual, where each component
is a support function w * ||D_j z - c_j|| whose dual set is a ball or a box.
"""

# python stuff
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

# 3rd party stuff
import numpy as np
import pandas as pd

# our stuff
from proxlast.conf import settings
from proxlast.exceptions import ProxLastAdmissionError, ProxLastValueError
from proxlast.prox_core import (
    ProxKind,
    ProxOperator,
    component_lipschitz,
    edge_diff,
    eval_g,
    is_indicator,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CollaborationGraph:
    """Undirected weighted graph over num_nodes blocks of length block_dim."""

    num_nodes: int
    block_dim: int
    edges: Tuple[Tuple[int, int, float], ...]

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ProxLastValueError(f"num_nodes must be >= 1, got {self.num_nodes}")
        if self.block_dim < 1:
            raise ProxLastValueError(f"block_dim must be >= 1, got {self.block_dim}")
        normalized = []
        for i, j, weight in self.edges:
            i, j, weight = int(i), int(j), float(weight)
            if i == j:
                raise ProxLastValueError(f"self-loop at node {i}")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ProxLastValueError(f"edge ({i}, {j}) references a node outside [0, {self.num_nodes})")
            if not np.isfinite(weight) or weight <= 0:
                raise ProxLastValueError(f"edge ({i}, {j}) has non-positive weight {weight}")
            normalized.append((i, j, weight))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def dim(self) -> int:
        """Length of the node-stacked variable."""
        return self.num_nodes * self.block_dim

    def degrees(self) -> np.ndarray:
        """Number of edges incident to every node."""
        deg = np.zeros(self.num_nodes, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def graph_path(num_nodes: int, block_dim: int = 1, weight: float = 1.0) -> CollaborationGraph:
    """0 - 1 - ... - (num_nodes - 1)"""
    edges = tuple((k, k + 1, weight) for k in range(num_nodes - 1))
    return CollaborationGraph(num_nodes=num_nodes, block_dim=block_dim, edges=edges)


def graph_cycle(num_nodes: int, block_dim: int = 1, weight: float = 1.0) -> CollaborationGraph:
    """Path graph closed into a ring. Needs at least 3 nodes."""
    if num_nodes < 3:
        raise ProxLastValueError(f"a cycle needs at least 3 nodes, got {num_nodes}")
    edges = tuple((k, (k + 1) % num_nodes, weight) for k in range(num_nodes))
    return CollaborationGraph(num_nodes=num_nodes, block_dim=block_dim, edges=edges)


def graph_complete(num_nodes: int, block_dim: int = 1, weight: float = 1.0) -> CollaborationGraph:
    """All pairs i < j."""
    edges = tuple((i, j, weight) for i in range(num_nodes) for j in range(i + 1, num_nodes))
    return CollaborationGraph(num_nodes=num_nodes, block_dim=block_dim, edges=edges)


def graph_random(
    num_nodes: int, edge_prob: float, rng: np.random.Generator, block_dim: int = 1, weight: float = 1.0
) -> CollaborationGraph:
    """Random spanning tree plus Erdos-Renyi extra edges, so the graph is always connected."""
    if not 0.0 <= edge_prob <= 1.0:
        raise ProxLastValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    order = rng.permutation(num_nodes)
    pairs = set()
    for k in range(1, num_nodes):
        parent = order[int(rng.integers(k))]
        pairs.add(tuple(sorted((int(order[k]), int(parent)))))
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            if (i, j) not in pairs and rng.random() < edge_prob:
                pairs.add((i, j))
    edges = tuple((i, j, weight) for i, j in sorted(pairs))
    return CollaborationGraph(num_nodes=num_nodes, block_dim=block_dim, edges=edges)


def load_edge_list(path: str, block_dim: int = 1, num_nodes: Optional[int] = None) -> CollaborationGraph:
    """
    Load a graph from a text file with one "i j weight" line per edge.
    Lines starting with '#' are comments.
    """
    frame = pd.read_csv(path, sep=r"\s+", comment="#", header=None, names=["i", "j", "weight"])
    if frame.empty:
        raise ProxLastValueError(f"no edges found in {path}")
    if frame.isnull().values.any():
        raise ProxLastValueError(f"every line of {path} must read 'i j weight'")
    edges = tuple((int(row.i), int(row.j), float(row.weight)) for row in frame.itertuples(index=False))
    if num_nodes is None:
        num_nodes = int(max(max(i, j) for i, j, _ in edges)) + 1
    logger.debug("loaded %d edges over %d nodes from %s", len(edges), num_nodes, path)
    return CollaborationGraph(num_nodes=num_nodes, block_dim=block_dim, edges=edges)


@dataclass
class ProxSumState:
    """Dual iterate of prox_sum, reusable as a warm start."""

    u_l1: np.ndarray
    u_p2: np.ndarray
    u_p1: np.ndarray
    iterations: int = 0
    gap: float = float("inf")


@dataclass(frozen=True)
class _DualLayout:
    dim: int
    block_dim: int
    l1_lams: np.ndarray
    l1_centers: np.ndarray
    p2: Tuple[np.ndarray, np.ndarray, np.ndarray]
    p1: Tuple[np.ndarray, np.ndarray, np.ndarray]
    norm_sq: float


@dataclass(frozen=True, eq=False)
class DecomposableRegularizer:
    """g = sum_j g_j over a shared variable of length dim."""

    components: Tuple[ProxOperator, ...]
    dim: int
    lipschitz_g: float
    graph: Optional[CollaborationGraph] = field(default=None)

    def __post_init__(self):
        if len(self.components) < 1:
            raise ProxLastValueError("a decomposable regularizer needs at least one component")

    @classmethod
    def from_components(
        cls, components: Sequence[ProxOperator], dim: int, graph: Optional[CollaborationGraph] = None
    ) -> "DecomposableRegularizer":
        """Build a regularizer and compute L_g as the largest component Lipschitz constant."""
        components = tuple(components)
        lipschitz_g = max((component_lipschitz(op, dim) for op in components), default=0.0)
        return cls(components=components, dim=dim, lipschitz_g=lipschitz_g, graph=graph)

    @property
    def m(self) -> int:
        """Number of components."""
        return len(self.components)

    def require_lipschitz(self) -> None:
        """Reject components that are not real-valued Lipschitz functions."""
        for index, op in enumerate(self.components):
            if is_indicator(op):
                raise ProxLastAdmissionError(
                    f"component {index} is a {op.kind.value} indicator; randomized component access needs "
                    "every g_j to be Lipschitz"
                )
        if not np.isfinite(self.lipschitz_g):
            raise ProxLastAdmissionError(f"lipschitz_g must be finite, got {self.lipschitz_g}")

    @cached_property
    def _layout(self) -> _DualLayout:
        l1_ops = [op for op in self.components if op.kind == ProxKind.L1]
        edge_ops = [op for op in self.components if op.kind == ProxKind.EDGE_DIFF]
        unsupported = [
            op.kind.value for op in self.components if op.kind not in (ProxKind.L1, ProxKind.EDGE_DIFF, ProxKind.ZERO)
        ]
        if unsupported:
            raise ProxLastValueError(f"prox_sum does not support {sorted(set(unsupported))} components")
        block_dims = {op.block_dim for op in edge_ops}
        if len(block_dims) > 1:
            raise ProxLastValueError(f"edge components disagree on block_dim: {sorted(block_dims)}")
        block_dim = block_dims.pop() if block_dims else 1
        if self.dim % block_dim:
            raise ProxLastValueError(f"dim {self.dim} is not a multiple of block_dim {block_dim}")
        num_nodes = self.dim // block_dim
        for op in edge_ops:
            if max(op.i, op.j) >= num_nodes:
                raise ProxLastValueError(f"edge ({op.i}, {op.j}) does not fit {num_nodes} nodes")

        def edge_arrays(p: int):
            ops = [op for op in edge_ops if op.p == p]
            return (
                np.array([op.i for op in ops], dtype=int),
                np.array([op.j for op in ops], dtype=int),
                np.array([op.weight for op in ops], dtype=float),
            )

        degree = np.zeros(num_nodes)
        for op in edge_ops:
            degree[op.i] += 1
            degree[op.j] += 1
        # Gershgorin bound on ||D||^2 for the stacked component maps
        norm_sq = float(2.0 * degree.max(initial=0.0) + len(l1_ops))
        centers = np.zeros((len(l1_ops), self.dim))
        for row, op in enumerate(l1_ops):
            if op.center is not None:
                centers[row] = op.center
        return _DualLayout(
            dim=self.dim,
            block_dim=block_dim,
            l1_lams=np.array([op.lam for op in l1_ops], dtype=float),
            l1_centers=centers,
            p2=edge_arrays(2),
            p1=edge_arrays(1),
            norm_sq=max(norm_sq, 1.0),
        )

    def _closed_form_lam(self) -> Optional[float]:
        """Total lam when g is a sum of l1 terms sharing one center (or zeros); None otherwise."""
        layout = self._layout
        if layout.p2[0].size or layout.p1[0].size:
            return None
        if layout.l1_centers.size and np.any(layout.l1_centers != layout.l1_centers[0]):
            return None
        return float(layout.l1_lams.sum())

    def initial_state(self) -> ProxSumState:
        """All-zero dual iterate."""
        layout = self._layout
        d = layout.block_dim
        return ProxSumState(
            u_l1=np.zeros((layout.l1_lams.size, layout.dim)),
            u_p2=np.zeros((layout.p2[0].size, d)),
            u_p1=np.zeros((layout.p1[0].size, d)),
        )

    def prox_sum(
        self,
        v,
        step: float,
        state: Optional[ProxSumState] = None,
        accuracy: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> Tuple[np.ndarray, ProxSumState]:
        """
        Approximate prox of the whole sum, argmin_z g(z) + (1 / (2 * step)) * ||z - v||^2.

        Stops once the primal-dual gap certifies ||z - z*|| <= accuracy, or at the
        floating point floor of the gap. Returns z and the dual state for warm starts.
        """
        v = np.asarray(v, dtype=float)
        if not np.isfinite(step) or step <= 0:
            raise ProxLastValueError(f"step must be a finite positive scalar, got {step}")
        if v.shape != (self.dim,) or not np.all(np.isfinite(v)):
            raise ProxLastValueError(f"prox_sum expects a finite vector of length {self.dim}")
        accuracy = settings.prox_sum_tol if accuracy is None else accuracy
        max_iter = settings.prox_sum_max_iter if max_iter is None else max_iter

        layout = self._layout
        lam = self._closed_form_lam()
        if lam is not None:
            center = layout.l1_centers[0] if layout.l1_centers.size else 0.0
            offset = v - center
            z = center + np.sign(offset) * np.maximum(np.abs(offset) - lam * step, 0.0)
            return z, state if state is not None else self.initial_state()

        return self._dual_prox(v, step, state or self.initial_state(), accuracy, max_iter)

    # pylint: disable=too-many-locals
    def _dual_prox(
        self, v: np.ndarray, step: float, state: ProxSumState, accuracy: float, max_iter: int
    ) -> Tuple[np.ndarray, ProxSumState]:
        layout = self._layout
        d = layout.block_dim
        i2, j2, w2 = layout.p2
        i1, j1, w1 = layout.p1
        lams = layout.l1_lams[:, None]
        centers = layout.l1_centers

        def adjoint(u_l1, u_p2, u_p1):
            blocks = np.zeros((layout.dim // d, d))
            np.add.at(blocks, i2, u_p2)
            np.add.at(blocks, j2, -u_p2)
            np.add.at(blocks, i1, u_p1)
            np.add.at(blocks, j1, -u_p1)
            return blocks.reshape(-1) + u_l1.sum(axis=0)

        def project(u_l1, u_p2, u_p1):
            u_l1 = np.clip(u_l1, -lams, lams)
            norms = np.linalg.norm(u_p2, axis=1)
            scale = np.where(norms > w2, w2 / np.where(norms > 0, norms, 1.0), 1.0)
            u_p2 = u_p2 * scale[:, None]
            u_p1 = np.clip(u_p1, -w1[:, None], w1[:, None])
            return u_l1, u_p2, u_p1

        def residuals(z):
            zb = z.reshape(-1, d)
            return z[None, :] - centers, zb[i2] - zb[j2], zb[i1] - zb[j1]

        def primal_value(z, res):
            r_l1, r_p2, r_p1 = res
            g = np.sum(layout.l1_lams * np.abs(r_l1).sum(axis=1))
            g += np.sum(w2 * np.linalg.norm(r_p2, axis=1)) + np.sum(w1 * np.abs(r_p1).sum(axis=1))
            return float(g + np.dot(z - v, z - v) / (2.0 * step))

        def dual_value(u, q):
            return float(np.dot(q, v) - 0.5 * step * np.dot(q, q) - np.sum(u[0] * centers))

        dual_step = 1.0 / (step * layout.norm_sq)
        u = project(state.u_l1, state.u_p2, state.u_p1)
        w = u
        t = 1.0
        z = v - step * adjoint(*u)
        gap = float("inf")
        gap_target = accuracy**2 / (2.0 * step)
        iteration = 0
        for iteration in range(1, max_iter + 1):
            z_w = v - step * adjoint(*w)
            res = residuals(z_w)
            u_new = project(*(w_k + dual_step * r_k for w_k, r_k in zip(w, res)))
            # adaptive restart on the dual
            restart = sum(float(np.sum((w_k - n_k) * (n_k - u_k))) for w_k, n_k, u_k in zip(w, u_new, u)) > 0
            if restart:
                t = 1.0
                w = u_new
            else:
                t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
                w = tuple(n_k + ((t - 1.0) / t_new) * (n_k - u_k) for n_k, u_k in zip(u_new, u))
                t = t_new
            u = u_new

            q = adjoint(*u)
            z = v - step * q
            primal = primal_value(z, residuals(z))
            gap = primal - dual_value(u, q)
            if gap <= max(gap_target, 1e-15 * (1.0 + abs(primal))):
                break
        else:
            logger.debug("prox_sum stopped at max_iter=%d with gap %.3e", max_iter, gap)

        return z, ProxSumState(u_l1=u[0], u_p2=u[1], u_p1=u[2], iterations=iteration, gap=gap)


def build_network_lasso(graph: CollaborationGraph, p: int = 2) -> DecomposableRegularizer:
    """One edge_diff component per edge: g(x) = sum_(i,j) w_ij ||x_i - x_j||_p."""
    if not graph.edges:
        raise ProxLastValueError("network lasso needs at least one edge")
    components = [edge_diff(i, j, weight, block_dim=graph.block_dim, p=p) for i, j, weight in graph.edges]
    return DecomposableRegularizer.from_components(components, dim=graph.dim, graph=graph)


def eval_sum(reg: DecomposableRegularizer, x) -> float:
    """g(x) = sum_j g_j(x)"""
    return float(sum(eval_g(op, x) for op in reg.components))


def sample_component(reg: DecomposableRegularizer, rng: np.random.Generator) -> Tuple[int, ProxOperator]:
    """Draw j uniformly from [0, m) with a caller-owned generator."""
    j = int(rng.integers(reg.m))
    return j, reg.components[j]


def component_values(reg: DecomposableRegularizer, x) -> List[float]:
    """[g_1(x), ..., g_m(x)]"""
    return [eval_g(op, x) for op in reg.components]
