# -*- coding: utf-8 -*-
"""
Smooth component oracles f_i and the problem instances built on them.

f(x) = (1/N) sum_i f_i(x) with one of
    - least_squares: f_i(x) = 1/2 (<a_i, x> - b_i)^2
    - logistic:      f_i(x) = scale * log(1 + exp(-y_i <a_i, x>))
    - separable:     f_i(x) = 1/2 ||M_i x_(i) - y_i||^2 on node block i

Oracles are immutable after construction. Sampling state lives in the solvers.
"""

# python stuff
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

# 3rd party stuff
import numpy as np
import pandas as pd
from scipy.special import expit

# our stuff
from proxlast.conf import settings
from proxlast.exceptions import ProxLastValueError
from proxlast.prox_core import ProxOperator, eval_g, l1, prox, zero
from proxlast.regularizers import DecomposableRegularizer, eval_sum
from proxlast.solvers.fista import run_fista
from proxlast.utils import stable_digest


logger = logging.getLogger(__name__)


class OracleKind(str, Enum):
    """Smooth oracle families."""

    LEAST_SQUARES = "least_squares"
    LOGISTIC = "logistic"
    SEPARABLE = "separable"


@dataclass(frozen=True, eq=False)
class SmoothOracle:
    """
    Finite family {f_i}. For the separable kind `A` holds the per-node
    matrices with shape (N, rows, block_dim) and `b` the targets with shape (N, rows).
    """

    kind: OracleKind
    A: np.ndarray
    b: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if self.A.shape[0] == 0:
            raise ProxLastValueError("an oracle needs at least one component")
        if self.kind == OracleKind.SEPARABLE:
            if self.A.ndim != 3 or self.b.shape != self.A.shape[:2]:
                raise ProxLastValueError("separable oracle expects A of shape (N, rows, d) and b of shape (N, rows)")
        elif self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise ProxLastValueError("oracle expects A of shape (N, n) and b of shape (N,)")
        if self.kind == OracleKind.LOGISTIC:
            if not np.all(np.isin(self.b, (-1.0, 1.0))):
                raise ProxLastValueError("logistic labels must be +1 or -1")
            if not self.scale > 0:
                raise ProxLastValueError(f"logistic scale must be positive, got {self.scale}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ProxLastValueError("oracle data must be finite")

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Component count."""
        return int(self.A.shape[0])

    @property
    def block_dim(self) -> int:
        """Block length; equals n for the non-separable kinds."""
        return int(self.A.shape[2]) if self.kind == OracleKind.SEPARABLE else self.n

    @property
    def n(self) -> int:
        """Dimension of x."""
        if self.kind == OracleKind.SEPARABLE:
            return int(self.A.shape[0] * self.A.shape[2])
        return int(self.A.shape[1])


def least_squares(A, b) -> SmoothOracle:  # pylint: disable=invalid-name
    """f_i(x) = 1/2 (<a_i, x> - b_i)^2"""
    return SmoothOracle(kind=OracleKind.LEAST_SQUARES, A=np.atleast_2d(np.asarray(A, float)), b=np.asarray(b, float))


def logistic(A, y, scale: float = 1.0) -> SmoothOracle:  # pylint: disable=invalid-name
    """f_i(x) = scale * log(1 + exp(-y_i <a_i, x>))"""
    return SmoothOracle(
        kind=OracleKind.LOGISTIC, A=np.atleast_2d(np.asarray(A, float)), b=np.asarray(y, float), scale=float(scale)
    )


def separable(matrices, targets) -> SmoothOracle:
    """f_i(x) = 1/2 ||M_i x_(i) - y_i||^2, one node block per component."""
    return SmoothOracle(kind=OracleKind.SEPARABLE, A=np.asarray(matrices, float), b=np.asarray(targets, float))


def _check_x(oracle: SmoothOracle, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (oracle.n,):
        raise ProxLastValueError(f"expected a vector of length {oracle.n}, got shape {x.shape}")
    return x


def _check_index(oracle: SmoothOracle, i) -> int:
    if not 0 <= i < oracle.N:
        raise ProxLastValueError(f"component index {i} out of range [0, {oracle.N})")
    return int(i)


def grad_component(oracle: SmoothOracle, i: int, x) -> np.ndarray:
    """Gradient of f_i at x."""
    i = _check_index(oracle, i)
    x = _check_x(oracle, x)
    if oracle.kind == OracleKind.LEAST_SQUARES:
        a = oracle.A[i]
        return a * (a @ x - oracle.b[i])
    if oracle.kind == OracleKind.LOGISTIC:
        a, y = oracle.A[i], oracle.b[i]
        return (-oracle.scale * y * expit(-y * (a @ x))) * a
    d = oracle.block_dim
    block = slice(i * d, (i + 1) * d)
    retval = np.zeros(oracle.n)
    retval[block] = oracle.A[i].T @ (oracle.A[i] @ x[block] - oracle.b[i])
    return retval


def component_grads(oracle: SmoothOracle, x) -> np.ndarray:
    """All component gradients stacked into an (N, n) array."""
    x = _check_x(oracle, x)
    if oracle.kind == OracleKind.LEAST_SQUARES:
        return oracle.A * (oracle.A @ x - oracle.b)[:, None]
    if oracle.kind == OracleKind.LOGISTIC:
        y = oracle.b
        return oracle.A * (-oracle.scale * y * expit(-y * (oracle.A @ x)))[:, None]
    d = oracle.block_dim
    blocks = x.reshape(oracle.N, d)
    residual = np.einsum("nrd,nd->nr", oracle.A, blocks) - oracle.b
    local = np.einsum("nrd,nr->nd", oracle.A, residual)
    retval = np.zeros((oracle.N, oracle.n))
    for i in range(oracle.N):
        retval[i, i * d : (i + 1) * d] = local[i]
    return retval


def full_grad(oracle: SmoothOracle, x) -> np.ndarray:
    """Gradient of f = (1/N) sum_i f_i."""
    x = _check_x(oracle, x)
    if oracle.kind == OracleKind.LEAST_SQUARES:
        return oracle.A.T @ (oracle.A @ x - oracle.b) / oracle.N
    if oracle.kind == OracleKind.LOGISTIC:
        y = oracle.b
        return oracle.A.T @ (-oracle.scale * y * expit(-y * (oracle.A @ x))) / oracle.N
    blocks = x.reshape(oracle.N, oracle.block_dim)
    residual = np.einsum("nrd,nd->nr", oracle.A, blocks) - oracle.b
    return np.einsum("nrd,nr->nd", oracle.A, residual).reshape(-1) / oracle.N


def component_values(oracle: SmoothOracle, x) -> np.ndarray:
    """[f_1(x), ..., f_N(x)]"""
    x = _check_x(oracle, x)
    if oracle.kind == OracleKind.LEAST_SQUARES:
        return 0.5 * (oracle.A @ x - oracle.b) ** 2
    if oracle.kind == OracleKind.LOGISTIC:
        return oracle.scale * np.logaddexp(0.0, -oracle.b * (oracle.A @ x))
    blocks = x.reshape(oracle.N, oracle.block_dim)
    residual = np.einsum("nrd,nd->nr", oracle.A, blocks) - oracle.b
    return 0.5 * np.sum(residual**2, axis=1)


def value(oracle: SmoothOracle, x) -> float:
    """f(x)"""
    return float(np.mean(component_values(oracle, x)))


def smoothness_constant(oracle: SmoothOracle) -> float:
    """Componentwise L: every f_i has an L-Lipschitz gradient."""
    if oracle.N == 0:
        raise ProxLastValueError("empty oracle")
    if oracle.kind == OracleKind.SEPARABLE:
        return float(max(np.linalg.norm(matrix, 2) ** 2 for matrix in oracle.A))
    row_norms = np.einsum("ij,ij->i", oracle.A, oracle.A)
    if oracle.kind == OracleKind.LOGISTIC:
        return float(oracle.scale * row_norms.max() / 4.0)
    return float(row_norms.max())


def full_smoothness_constant(oracle: SmoothOracle) -> float:
    """Lipschitz constant of the gradient of the average f."""
    if oracle.kind == OracleKind.SEPARABLE:
        return float(max(np.linalg.norm(matrix, 2) ** 2 for matrix in oracle.A) / oracle.N)
    spectral = np.linalg.norm(oracle.A, 2) ** 2 / oracle.N
    if oracle.kind == OracleKind.LOGISTIC:
        return float(oracle.scale * spectral / 4.0)
    return float(spectral)


def sigma_star_sq(oracle: SmoothOracle, x) -> float:
    """(1/N) sum_i ||grad f_i(x)||^2"""
    grads = component_grads(oracle, x)
    return float(np.mean(np.einsum("ij,ij->i", grads, grads)))


Regularizer = Union[ProxOperator, DecomposableRegularizer]


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """h = f + g with a declared starting point x0."""

    oracle: SmoothOracle
    regularizer: Regularizer
    x0: np.ndarray
    name: str = "problem"
    ground_truth: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (self.oracle.n,):
            raise ProxLastValueError(f"x0 must have length {self.oracle.n}, got shape {x0.shape}")
        if isinstance(self.regularizer, DecomposableRegularizer) and self.regularizer.dim != self.oracle.n:
            raise ProxLastValueError(f"regularizer dim {self.regularizer.dim} does not match oracle n {self.oracle.n}")
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        """Dimension of x."""
        return self.oracle.n

    @property
    def is_decomposable(self) -> bool:
        """Is g given as a sum of components?"""
        return isinstance(self.regularizer, DecomposableRegularizer)

    @property
    def m(self) -> int:
        """Number of regularizer components."""
        return self.regularizer.m if self.is_decomposable else 1

    def eval_g(self, x) -> float:
        """g(x)"""
        if self.is_decomposable:
            return eval_sum(self.regularizer, x)
        return eval_g(self.regularizer, x)

    def objective(self, x) -> float:
        """h(x) = f(x) + g(x)"""
        return value(self.oracle, x) + self.eval_g(x)

    def full_grad(self, x) -> np.ndarray:
        """Gradient of f."""
        return full_grad(self.oracle, x)

    def full_smoothness_constant(self) -> float:
        """Lipschitz constant of the gradient of f."""
        return full_smoothness_constant(self.oracle)

    def with_x0(self, x0) -> "ProblemInstance":
        """Copy with another starting point."""
        return ProblemInstance(
            oracle=self.oracle, regularizer=self.regularizer, x0=x0, name=self.name, ground_truth=self.ground_truth
        )

    def reference_prox(self) -> Callable[[np.ndarray, float, float], np.ndarray]:
        """
        prox of the whole g as a callable (v, step, accuracy) -> z. For a decomposable g
        the callable keeps the dual iterate between calls as a warm start.
        """
        if not self.is_decomposable:
            op = self.regularizer

            def closed_form(v, step, accuracy=None):  # pylint: disable=unused-argument
                return prox(op, v, step)

            return closed_form

        reg = self.regularizer
        warm = {"state": None}

        def dual(v, step, accuracy=None):
            z, state = reg.prox_sum(v, step, state=warm["state"], accuracy=accuracy)
            warm["state"] = state
            return z

        return dual


@dataclass(frozen=True, eq=False)
class SolutionCertificate:
    """Reference minimizer and the constants the bounds are evaluated with."""

    x_star: np.ndarray
    h_star: float
    sigma_star_sq: float
    d_star_sq: float
    solver_tolerance: float
    x0: np.ndarray
    iterations: int = 0

    def describe(self) -> dict:
        """JSON-friendly summary."""
        return {
            "h_star": self.h_star,
            "sigma_star_sq": self.sigma_star_sq,
            "d_star_sq": self.d_star_sq,
            "solver_tolerance": self.solver_tolerance,
            "iterations": self.iterations,
        }

    @property
    def digest(self) -> str:
        """Stable hash of the certificate contents."""
        return stable_digest({**self.describe(), "x_star": self.x_star, "x0": self.x0})


def recompute_sigma_star_sq(oracle: SmoothOracle, certificate: SolutionCertificate) -> float:
    """sigma*^2 recomputed at the certified minimizer."""
    return sigma_star_sq(oracle, certificate.x_star)


def certify_solution(
    problem: ProblemInstance, x0=None, tol: Optional[float] = None, max_iter: Optional[int] = None
) -> SolutionCertificate:
    """
    Run the deterministic reference solver and package h*, sigma*^2 and D*^2.

    h_star is the best value found; solver_tolerance records the gradient-mapping
    tolerance it was certified at. Raises ProxLastConvergenceError carrying the best
    point when the iteration cap is reached first.
    """
    x0 = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    if tol is None:
        tol = settings.certify_tol_decomposable if problem.is_decomposable else settings.certify_tol
    max_iter = settings.certify_max_iter if max_iter is None else max_iter

    x_star, h_star, iterations = run_fista(problem, x0, tol, max_iter, return_iterations=True)
    certificate = SolutionCertificate(
        x_star=x_star,
        h_star=h_star,
        sigma_star_sq=sigma_star_sq(problem.oracle, x_star),
        d_star_sq=float(np.sum((x_star - x0) ** 2)),
        solver_tolerance=tol,
        x0=x0.copy(),
        iterations=iterations,
    )
    logger.debug("certified %s: %s", problem.name, certificate.describe())
    return certificate


def load_csv_problem(path: str, kind: str = "least_squares", lam: float = 0.0, scale: float = 1.0) -> ProblemInstance:
    """
    Load a problem from a CSV file: one row per sample, last column b (least squares)
    or the +1/-1 label (logistic). An optional header row is skipped.
    """
    frame = pd.read_csv(path, header=None, comment="#")
    frame = frame.apply(pd.to_numeric, errors="coerce")
    if len(frame) and frame.iloc[0].isnull().all():
        frame = frame.iloc[1:]
    if frame.empty or frame.shape[1] < 2:
        raise ProxLastValueError(f"{path} needs at least one row with one feature column and one target column")
    if frame.isnull().values.any():
        raise ProxLastValueError(f"{path} contains non-numeric entries")
    data = frame.to_numpy(dtype=float)
    features, target = data[:, :-1], data[:, -1]
    if kind == OracleKind.LOGISTIC.value:
        oracle = logistic(features, target, scale=scale)
    elif kind == OracleKind.LEAST_SQUARES.value:
        oracle = least_squares(features, target)
    else:
        raise ProxLastValueError(f"unsupported CSV problem kind {kind}")
    regularizer = l1(lam) if lam > 0 else zero()
    logger.debug("loaded %s problem with N=%d n=%d from %s", kind, oracle.N, oracle.n, path)
    return ProblemInstance(oracle=oracle, regularizer=regularizer, x0=np.zeros(oracle.n), name=f"csv:{path}")
