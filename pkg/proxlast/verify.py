# -*- coding: utf-8 -*-
"""
Invariant grids behind `proxlast verify`.

Each scope expands into independent cells. Cells run on a process pool when
jobs > 1 and are always reported in expansion order. A cell is a plain tuple
(scope, name, params) so it pickles cheaply.
"""

# python stuff
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Tuple

# 3rd party stuff
import numpy as np
from scipy import optimize

# our stuff
from proxlast.bench import gen_lasso
from proxlast.conf import settings
from proxlast.exceptions import ProxLastValueError
from proxlast.oracles import ProblemInstance, SolutionCertificate, certify_solution, smoothness_constant
from proxlast.prox_core import ProxKind, ProxOperator, ball, box, check_prox_optimality, edge_diff, l1, prox, zero
from proxlast.theory import (
    alpha_schedule_report,
    bound_ripm,
    bound_ripm_simplified,
    bound_spgd,
    bound_spgd_simplified,
    check_descent,
    check_variance_transfer,
    compare_bounds,
    ta_constant_check,
)
from proxlast.utils import to_json


logger = logging.getLogger(__name__)

SCOPES = ("alpha", "prox", "variance", "descent", "bounds")

ALPHA_T_GRID = (10, 100, 1_000, 10_000)
ALPHA_A_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))
TA_T_GRID = (10, 100, 1_000, 10_000, 100_000)
TA_BETA_GRID = (0.25, 0.5, 1.0)
TA_C_GRID = (3.0, 5.0, 10.0)
PROX_KINDS = ("l1", "l1_centered", "box", "ball", "edge_diff_p2", "edge_diff_p1", "zero")
PROX_PROBES = 100
BRUTE_FORCE_BLOCK_DIMS = (1, 2)
BRUTE_FORCE_CASES = 20
BRUTE_FORCE_ATOL = 1e-4
VARIANCE_POINTS = 100
DESCENT_PAIRS = 50
BOUND_T_GRID = (10, 100, 1_000, 10_000)

# n=10, N=20 Lasso shared by the variance and descent grids
FIXTURE_N, FIXTURE_SAMPLES, FIXTURE_LAM = 10, 20, 0.1
FIXTURE_SHARES = (0.25, 0.25, 0.5)


Cell = Tuple[str, str, Dict[str, Any]]


def brute_force_edge_prox(op: ProxOperator, v, step: float, rounds: int = 8, points: int = 41) -> np.ndarray:
    """
    Edge prox by zooming grid search. Only blocks i and j move and their mean is fixed,
    so the search runs over the new difference u:

        min_u  weight * ||u||_p + (1 / (4 * step)) * ||u - delta||^2,   delta = v_i - v_j
    """
    if op.kind != ProxKind.EDGE_DIFF or op.block_dim > 2:
        raise ProxLastValueError("brute force covers edge_diff components with block_dim 1 or 2")
    v = np.asarray(v, dtype=float)
    d = op.block_dim
    block_i, block_j = slice(op.i * d, (op.i + 1) * d), slice(op.j * d, (op.j + 1) * d)
    delta = v[block_i] - v[block_j]
    mean = (v[block_i] + v[block_j]) / 2.0

    def objective(u):
        u = np.atleast_1d(u)
        return op.weight * np.linalg.norm(u, ord=op.p) + np.dot(u - delta, u - delta) / (4.0 * step)

    center = np.zeros(d)
    half_width = float(np.max(np.abs(delta))) + 1.0
    for _ in range(rounds):
        spacing = 2.0 * half_width / (points - 1)
        ranges = tuple(slice(c - half_width, c + half_width + 0.5 * spacing, spacing) for c in center)
        center = np.atleast_1d(optimize.brute(objective, ranges, finish=None))
        half_width *= 4.0 / (points - 1)

    retval = v.copy()
    retval[block_i] = mean + center / 2.0
    retval[block_j] = mean - center / 2.0
    return retval


@lru_cache(maxsize=4)
def lasso_fixture(seed: int, decomposable: bool) -> Tuple[ProblemInstance, SolutionCertificate]:
    """Certified n=10, N=20 Lasso; decomposable splits lam over three l1 components."""
    problem = gen_lasso(
        FIXTURE_N,
        FIXTURE_SAMPLES,
        sparsity=3,
        noise_std=0.5,
        lam=FIXTURE_LAM,
        seed=seed,
        lam_shares=FIXTURE_SHARES if decomposable else None,
    )
    return problem, certify_solution(problem, tol=settings.certify_tol)


def _make_operator(kind: str, rng: np.random.Generator, dim: int) -> ProxOperator:
    if kind == "l1":
        return l1(rng.uniform(0.1, 2.0))
    if kind == "l1_centered":
        return l1(rng.uniform(0.1, 2.0), center=rng.standard_normal(dim))
    if kind == "box":
        lo = rng.uniform(-2.0, 0.0, size=dim)
        return box(lo, lo + rng.uniform(0.1, 2.0, size=dim))
    if kind == "ball":
        return ball(rng.standard_normal(dim), rng.uniform(0.1, 2.0))
    if kind.startswith("edge_diff"):
        return edge_diff(0, 2, rng.uniform(0.1, 2.0), block_dim=2, p=2 if kind.endswith("p2") else 1)
    return zero()


def _prox_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    rng = np.random.default_rng([params["seed"], PROX_KINDS.index(params["kind"]), params["probe"]])
    dim = 6
    op = _make_operator(params["kind"], rng, dim)
    v = 3.0 * rng.standard_normal(dim)
    step = float(np.exp(rng.uniform(-3.0, 1.0)))
    raw = 3.0 * rng.standard_normal((10, dim))
    probes = list(raw) + [prox(op, point, 1.0) for point in raw]
    passed = check_prox_optimality(op, v, step, probes, tol=settings.prox_optimality_tol)
    return {"passed": passed, "step": step}


def _brute_force_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    d = params["block_dim"]
    rng = np.random.default_rng([params["seed"], d, params["case"]])
    op = edge_diff(0, 1, rng.uniform(0.1, 2.0), block_dim=d, p=params["p"])
    v = 2.0 * rng.standard_normal(2 * d)
    step = float(np.exp(rng.uniform(-2.0, 0.5)))
    error = float(np.max(np.abs(prox(op, v, step) - brute_force_edge_prox(op, v, step))))
    return {"passed": error <= BRUTE_FORCE_ATOL, "max_abs_error": error}


def _variance_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    problem, certificate = lasso_fixture(params["seed"], False)
    rng = np.random.default_rng([params["seed"], params["point"]])
    direction = rng.standard_normal(problem.dim)
    if params["point"] == 0:
        x = certificate.x_star.copy()
    elif params["point"] == 1:
        x = certificate.x_star + 1e3 * direction / np.linalg.norm(direction)
    else:
        x = certificate.x_star + rng.uniform(0.01, 10.0) * direction
    eps = float(np.exp(rng.uniform(-3.0, 3.0)))
    lhs, rhs, passed = check_variance_transfer(problem, certificate, x, eps)
    return {"passed": passed, "lhs": lhs, "rhs": rhs, "eps": eps}


def _descent_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    ripm = params["variant"] == "ripm"
    problem, certificate = lasso_fixture(params["seed"], ripm)
    rng = np.random.default_rng([params["seed"], params["pair"], int(ripm)])
    lipschitz = smoothness_constant(problem.oracle)
    C = 5.0 if ripm else 3.0  # pylint: disable=invalid-name
    tau = 1.0 / (C * lipschitz * math.sqrt(100.0))
    x_t = certificate.x_star + rng.uniform(0.1, 3.0) * rng.standard_normal(problem.dim)
    z_t = certificate.x_star + rng.uniform(0.0, 3.0) * rng.standard_normal(problem.dim)
    report = check_descent(problem, certificate, x_t, z_t, tau, seed=params["pair"], ripm=ripm)
    return {"passed": report.passed, **report.to_dict()}


def _bounds_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    T = params["T"]  # pylint: disable=invalid-name
    L, d_sq, sigma_sq, gap0, m, L_g = 2.0, 1.5, 0.7, 3.0, 4, 0.3  # pylint: disable=invalid-name
    spgd = compare_bounds(
        bound_spgd(T, 3.0, 0.5, L, d_sq, sigma_sq, gap0),
        bound_spgd_simplified(T, L, d_sq, sigma_sq, gap0),
    )
    ripm = compare_bounds(
        bound_ripm(T, 5.0, 0.5, L, d_sq, sigma_sq, gap0, m, L_g),
        bound_ripm_simplified(T, L, d_sq, sigma_sq, gap0, m, L_g),
    )
    base = bound_spgd(T, 3.0, 0.5, L, d_sq, sigma_sq, gap0)
    doubled = bound_spgd(T, 3.0, 0.5, L, 2.0 * d_sq, sigma_sq, gap0)
    linear = (
        doubled.distance_term == 2.0 * base.distance_term
        and doubled.initial_gap_term == base.initial_gap_term
        and doubled.variance_terms == base.variance_terms
    )
    vanishing = bound_spgd(T, 3.0, 0.5, L, 0.0, 0.0, 0.0).total == 0.0
    passed = (
        spgd["distance_term"]["dominated"]
        and spgd["initial_gap_term"]["dominated"]
        and all(entry["dominated"] for entry in ripm.values())
        and linear
        and vanishing
    )
    return {"passed": passed, "spgd": spgd, "ripm": ripm, "linear_in_d_star_sq": linear}


def _alpha_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    report = alpha_schedule_report(params["T"], params["a"])
    return {"passed": report.passed, **report.to_dict()}


def _ta_cell(params: Dict[str, Any]) -> Dict[str, Any]:
    return dict(ta_constant_check(params["T"], params["beta"], params["C"]))


CELL_HANDLERS = {
    "alpha": _alpha_cell,
    "ta_constant": _ta_cell,
    "prox": _prox_cell,
    "edge_brute_force": _brute_force_cell,
    "variance": _variance_cell,
    "descent": _descent_cell,
    "bounds": _bounds_cell,
}


def expand_scope(scope: str, seed: int = 0) -> List[Cell]:
    """All cells of one scope ("alpha", "prox", "variance", "descent", "bounds") or of "all"."""
    if scope == "all":
        return [cell for name in SCOPES for cell in expand_scope(name, seed)]
    if scope == "alpha":
        cells = [("alpha", f"T={T},a={a}", {"T": T, "a": a}) for T in ALPHA_T_GRID for a in ALPHA_A_GRID]
        cells += [
            ("ta_constant", f"T={T},beta={beta},C={C}", {"T": T, "beta": beta, "C": C})
            for T in TA_T_GRID
            for beta in TA_BETA_GRID
            for C in TA_C_GRID
        ]
        return cells
    if scope == "prox":
        cells = [
            ("prox", f"{kind}#{probe}", {"kind": kind, "probe": probe, "seed": seed})
            for kind in PROX_KINDS
            for probe in range(PROX_PROBES)
        ]
        cells += [
            ("edge_brute_force", f"d={d},p={p}#{case}", {"block_dim": d, "p": p, "case": case, "seed": seed})
            for d in BRUTE_FORCE_BLOCK_DIMS
            for p in (2, 1)
            for case in range(BRUTE_FORCE_CASES)
        ]
        return cells
    if scope == "variance":
        return [("variance", f"point#{k}", {"point": k, "seed": seed}) for k in range(VARIANCE_POINTS)]
    if scope == "descent":
        return [
            ("descent", f"{variant}#{k}", {"variant": variant, "pair": k, "seed": seed})
            for variant in ("spgd", "ripm")
            for k in range(DESCENT_PAIRS)
        ]
    if scope == "bounds":
        return [("bounds", f"T={T}", {"T": T}) for T in BOUND_T_GRID]
    raise ProxLastValueError(f"unknown verify scope {scope}; choose from {SCOPES + ('all',)}")


def evaluate_cell(cell: Cell) -> Dict[str, Any]:
    """Run one cell. Exceptions count as failures and are reported with the cell."""
    kind, name, params = cell
    try:
        result = CELL_HANDLERS[kind](params)
    except Exception as e:  # pylint: disable=broad-exception-caught
        logger.warning("verify cell %s/%s raised %s", kind, name, e)
        result = {"passed": False, "error": str(e)}
    return {"check": kind, "cell": name, **result, "passed": bool(result["passed"])}


@dataclass
class VerificationReport:
    """Every evaluated cell, in expansion order."""

    scope: str
    seed: int
    cells: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every cell passed."""
        return all(cell["passed"] for cell in self.cells)

    @property
    def failed_cells(self) -> List[str]:
        """check/cell names of the failures."""
        return [f"{cell['check']}/{cell['cell']}" for cell in self.cells if not cell["passed"]]

    def counts(self) -> Dict[str, Dict[str, int]]:
        """Passed and total cell counts per check."""
        retval: Dict[str, Dict[str, int]] = {}
        for cell in self.cells:
            entry = retval.setdefault(cell["check"], {"passed": 0, "total": 0})
            entry["total"] += 1
            entry["passed"] += int(cell["passed"])
        return retval

    def to_json(self) -> str:
        """Machine-readable report."""
        return to_json(
            {
                "scope": self.scope,
                "seed": self.seed,
                "passed": self.passed,
                "counts": self.counts(),
                "failed_cells": self.failed_cells,
                "cells": self.cells,
            }
        )


def run_verification(scope: str = "all", jobs: int = 1, seed: int = 0) -> VerificationReport:
    """Expand a scope and evaluate its cells, in parallel when jobs > 1."""
    cells = expand_scope(scope, seed)
    logger.info("verify scope=%s: %d cells on %d worker(s)", scope, len(cells), jobs)
    if jobs <= 1:
        results = [evaluate_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(evaluate_cell, cells, chunksize=8))
    report = VerificationReport(scope=scope, seed=seed, cells=results)
    if not report.passed:
        logger.warning("verify scope=%s: %d failed cell(s)", scope, len(report.failed_cells))
    return report
