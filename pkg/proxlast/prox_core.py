# -*- coding: utf-8 -*-
"""
Proximal operators and projections.

A ProxOperator describes one closed convex function g together with its
closed-form proximal map

    prox(op, v, step) = argmin_z { g(z) + (1 / (2 * step)) * ||v - z||^2 }

Supported kinds:
    - l1: lam * ||x - center||_1, soft-thresholding around center
    - box: indicator of [lo, hi], componentwise clipping
    - ball: indicator of the Euclidean ball, radial projection
    - edge_diff: weight * ||x_i - x_j||_p on two blocks of a node-stacked vector
    - zero: g = 0, the identity map

All functions here are pure. They are safe to call from concurrent workers.
"""

# python stuff
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Set

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.exceptions import ProxLastValueError


logger = logging.getLogger(__name__)

FEASIBILITY_RTOL = 1e-12


class ProxKind(str, Enum):
    """Kinds of closed-form proximal operators."""

    L1 = "l1"
    BOX = "box"
    BALL = "ball"
    EDGE_DIFF = "edge_diff"
    ZERO = "zero"


INDICATOR_KINDS = (ProxKind.BOX, ProxKind.BALL)


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True, eq=False)
class ProxOperator:
    """
    A regularizer g with a closed-form prox. Build instances with the
    factory functions l1(), box(), ball(), edge_diff() and zero().
    """

    kind: ProxKind
    lam: float = 0.0
    center: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    radius: float = 0.0
    i: int = 0
    j: int = 0
    weight: float = 0.0
    block_dim: int = 1
    p: int = 2

    def __post_init__(self):
        if self.kind == ProxKind.L1:
            if not np.isfinite(self.lam) or self.lam < 0:
                raise ProxLastValueError(f"l1 requires a finite lam >= 0, got {self.lam}")
        elif self.kind == ProxKind.BOX:
            if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)):
                raise ProxLastValueError("box bounds must not be NaN")
            if np.any(self.lo > self.hi):
                raise ProxLastValueError("box requires lo <= hi componentwise")
        elif self.kind == ProxKind.BALL:
            if not np.isfinite(self.radius) or self.radius <= 0:
                raise ProxLastValueError(f"ball requires a finite radius > 0, got {self.radius}")
            if not np.all(np.isfinite(self.center)):
                raise ProxLastValueError("ball center must be finite")
        elif self.kind == ProxKind.EDGE_DIFF:
            if self.i == self.j:
                raise ProxLastValueError(f"edge_diff requires i != j, got i = j = {self.i}")
            if self.i < 0 or self.j < 0:
                raise ProxLastValueError("edge_diff node indices must be nonnegative")
            if not np.isfinite(self.weight) or self.weight < 0:
                raise ProxLastValueError(f"edge_diff requires a finite weight >= 0, got {self.weight}")
            if self.block_dim < 1:
                raise ProxLastValueError(f"edge_diff requires block_dim >= 1, got {self.block_dim}")
            if self.p not in (1, 2):
                raise ProxLastValueError(f"edge_diff supports p in (1, 2), got {self.p}")

    def describe(self) -> dict:
        """JSON-friendly description."""
        retval = {"kind": self.kind.value}
        if self.kind == ProxKind.L1:
            retval.update({"lam": self.lam, "center": self.center})
        elif self.kind == ProxKind.BOX:
            retval.update({"lo": self.lo, "hi": self.hi})
        elif self.kind == ProxKind.BALL:
            retval.update({"center": self.center, "radius": self.radius})
        elif self.kind == ProxKind.EDGE_DIFF:
            retval.update({"i": self.i, "j": self.j, "weight": self.weight, "block_dim": self.block_dim, "p": self.p})
        return retval


def _as_vector(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def l1(lam: float, center=None) -> ProxOperator:
    """lam * ||x - center||_1"""
    return ProxOperator(
        kind=ProxKind.L1, lam=float(lam), center=None if center is None else _as_vector(center).copy()
    )


def box(lo, hi) -> ProxOperator:
    """Indicator of {x : lo <= x <= hi}; infinite bounds are allowed."""
    return ProxOperator(kind=ProxKind.BOX, lo=_as_vector(lo).copy(), hi=_as_vector(hi).copy())


def ball(center, radius: float) -> ProxOperator:
    """Indicator of {x : ||x - center|| <= radius}"""
    return ProxOperator(kind=ProxKind.BALL, center=_as_vector(center).copy(), radius=float(radius))


def edge_diff(i: int, j: int, weight: float, block_dim: int = 1, p: int = 2) -> ProxOperator:
    """weight * ||x_i - x_j||_p where x_k is the k-th block of length block_dim."""
    return ProxOperator(
        kind=ProxKind.EDGE_DIFF, i=int(i), j=int(j), weight=float(weight), block_dim=int(block_dim), p=int(p)
    )


def zero() -> ProxOperator:
    """g = 0"""
    return ProxOperator(kind=ProxKind.ZERO)


def is_indicator(op: ProxOperator) -> bool:
    """True for the set-indicator kinds."""
    return op.kind in INDICATOR_KINDS


def _blocks(op: ProxOperator, size: int):
    d = op.block_dim
    if (max(op.i, op.j) + 1) * d > size:
        raise ProxLastValueError(f"edge ({op.i}, {op.j}) with block_dim {d} does not fit a vector of length {size}")
    return slice(op.i * d, (op.i + 1) * d), slice(op.j * d, (op.j + 1) * d)


def _check_input(v: np.ndarray, step: Optional[float] = None) -> None:
    if step is not None and (not np.isfinite(step) or step <= 0):
        raise ProxLastValueError(f"step must be a finite positive scalar, got {step}")
    if not np.all(np.isfinite(v)):
        raise ProxLastValueError("input vector must be finite")


def _soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def prox(op: ProxOperator, v, step: float) -> np.ndarray:
    """
    Return argmin_z g(z) + (1 / (2 * step)) * ||v - z||^2.

    Raises ProxLastValueError for a nonpositive step or a nonfinite v.
    """
    v = _as_vector(v)
    _check_input(v, step)

    if op.kind == ProxKind.ZERO:
        return v.copy()

    if op.kind == ProxKind.L1:
        if op.center is None:
            return _soft_threshold(v, op.lam * step)
        return op.center + _soft_threshold(v - op.center, op.lam * step)

    if op.kind == ProxKind.BOX:
        return np.clip(v, op.lo, op.hi)

    if op.kind == ProxKind.BALL:
        offset = v - op.center
        norm = np.linalg.norm(offset)
        if norm <= op.radius:
            return v.copy()
        return op.center + offset * (op.radius / norm)

    # edge_diff: only blocks i and j move, each toward their midpoint
    block_i, block_j = _blocks(op, v.size)
    retval = v.copy()
    delta = v[block_i] - v[block_j]
    if op.p == 2:
        norm = np.linalg.norm(delta)
        if norm == 0.0:
            return retval
        shift = delta * (min(op.weight * step, norm / 2.0) / norm)
    else:
        shift = np.sign(delta) * np.minimum(op.weight * step, np.abs(delta) / 2.0)
    retval[block_i] -= shift
    retval[block_j] += shift
    return retval


def eval_g(op: ProxOperator, x) -> float:
    """Return g(x). Indicator kinds return 0.0 inside the set and +inf outside."""
    x = _as_vector(x)
    _check_input(x)

    if op.kind == ProxKind.ZERO:
        return 0.0

    if op.kind == ProxKind.L1:
        offset = x if op.center is None else x - op.center
        return float(op.lam * np.sum(np.abs(offset)))

    if op.kind == ProxKind.BOX:
        slack_lo = FEASIBILITY_RTOL * (1.0 + np.abs(np.where(np.isfinite(op.lo), op.lo, 0.0)))
        slack_hi = FEASIBILITY_RTOL * (1.0 + np.abs(np.where(np.isfinite(op.hi), op.hi, 0.0)))
        inside = np.all(x >= op.lo - slack_lo) and np.all(x <= op.hi + slack_hi)
        return 0.0 if inside else float("inf")

    if op.kind == ProxKind.BALL:
        inside = np.linalg.norm(x - op.center) <= op.radius * (1.0 + FEASIBILITY_RTOL) + FEASIBILITY_RTOL
        return 0.0 if inside else float("inf")

    block_i, block_j = _blocks(op, x.size)
    return float(op.weight * np.linalg.norm(x[block_i] - x[block_j], ord=op.p))


def check_prox_optimality(
    op: ProxOperator,
    v,
    step: float,
    probes: Iterable,
    candidate=None,
    tol: float = 1e-9,
) -> bool:
    """
    Check the prox optimality inequality

        <x - p, v - p> <= step * (g(x) - g(p))

    for every probe x, with p = prox(op, v, step). Probes with g(x) = +inf pass.
    `candidate` replaces p; tests use it to inject a wrong prox output.
    """
    v = _as_vector(v)
    _check_input(v, step)
    p = prox(op, v, step) if candidate is None else _as_vector(candidate)
    g_p = eval_g(op, p)
    if not np.isfinite(g_p):
        logger.debug("prox candidate lies outside dom g")
        return False
    for probe in probes:
        x = _as_vector(probe)
        g_x = eval_g(op, x)
        if not np.isfinite(g_x):
            continue
        lhs = float(np.dot(x - p, v - p))
        rhs = step * (g_x - g_p)
        if lhs > rhs + tol:
            logger.debug("prox optimality violated: lhs=%s rhs=%s", lhs, rhs)
            return False
    return True


def component_lipschitz(op: ProxOperator, dim: int) -> float:
    """Lipschitz constant of g on R^dim; +inf for indicator kinds."""
    if op.kind == ProxKind.ZERO:
        return 0.0
    if op.kind == ProxKind.L1:
        return float(op.lam * np.sqrt(dim))
    if op.kind == ProxKind.EDGE_DIFF:
        if op.p == 2:
            return float(np.sqrt(2.0) * op.weight)
        return float(op.weight * np.sqrt(2.0 * op.block_dim))
    return float("inf")


def support_nodes(op: ProxOperator, num_nodes: int) -> Set[int]:
    """Node blocks a component depends on."""
    if op.kind == ProxKind.ZERO:
        return set()
    if op.kind == ProxKind.EDGE_DIFF:
        return {op.i, op.j}
    return set(range(num_nodes))
