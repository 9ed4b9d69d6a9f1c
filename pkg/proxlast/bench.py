# -*- coding: utf-8 -*-
"""
Desk-scale experiments: problem generators, the multi-trial runner, rate-slope
estimation and the last-iterate versus average-iterate comparison.

Protocol: the dataset is generated once from data_seed and certified once; every
(T, trial) cell then runs with its own sampling seed derived from
(master_seed, T, trial). Cells may run on a process pool; results are always
reduced in (T, trial) order, so a spec yields the same report bytes regardless
of worker count.
"""

# python stuff
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

# 3rd party stuff
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy import stats

# our stuff
from proxlast.conf import Algorithms, config_error, read_config_file
from proxlast.exceptions import ProxLastConfigurationError, ProxLastDivergenceError, ProxLastValueError
from proxlast.oracles import (
    OracleKind,
    ProblemInstance,
    SolutionCertificate,
    certify_solution,
    least_squares,
    load_csv_problem,
    logistic,
    separable,
    smoothness_constant,
)
from proxlast.prox_core import box, is_indicator, l1, zero
from proxlast.regularizers import (
    CollaborationGraph,
    DecomposableRegularizer,
    build_network_lasso,
    graph_complete,
    graph_cycle,
    graph_path,
    graph_random,
    load_edge_list,
)
from proxlast.solvers.base import (
    Fixed,
    HorizonRIPM,
    HorizonSPGD,
    PowerLaw,
    SolverConfig,
    trial_seed,
)
from proxlast.solvers.blockprox import run_blockprox
from proxlast.solvers.ripm import run_ripm
from proxlast.solvers.spgd import run_proj_sgd, run_spgd
from proxlast.theory import TheoryBound, bound_ripm, bound_spgd
from proxlast.utils import atomic_write_text, stable_digest, to_json


logger = logging.getLogger(__name__)

ALGORITHM_RUNNERS = {
    Algorithms.SPGD[0]: run_spgd,
    Algorithms.PROJ_SGD[0]: run_proj_sgd,
    Algorithms.RIPM[0]: run_ripm,
    Algorithms.BLOCKPROX[0]: run_blockprox,
}


###############################################################################
# problem generators
###############################################################################
# pylint: disable=too-many-arguments,invalid-name
def gen_lasso(
    n: int,
    N: int,
    sparsity: int,
    noise_std: float,
    lam: float,
    seed: int,
    design: str = "gaussian",
    lam_shares: Optional[Sequence[float]] = None,
) -> ProblemInstance:
    """
    h(x) = 1/(2N) ||Ax - b||^2 + lam ||x||_1 with a k-sparse +-1 ground truth and
    b = A x_nat + noise. design is "gaussian" (standard normal A) or "rademacher"
    (+-1 entries). With lam_shares the l1 term is split into components
    l1(lam * share) so that RIPM can sample it; shares must sum to 1.
    """
    if not 0 < sparsity <= n:
        raise ProxLastValueError(f"sparsity must lie in (0, {n}], got {sparsity}")
    if lam < 0 or noise_std < 0:
        raise ProxLastValueError("lam and noise_std must be nonnegative")
    rng = np.random.default_rng(seed)
    if design == "gaussian":
        A = rng.standard_normal((N, n))
    elif design == "rademacher":
        A = rng.choice([-1.0, 1.0], size=(N, n))
    else:
        raise ProxLastValueError(f"unknown design {design}")
    x_nat = np.zeros(n)
    support = rng.choice(n, size=sparsity, replace=False)
    x_nat[support] = rng.choice([-1.0, 1.0], size=sparsity)
    b = A @ x_nat + noise_std * rng.standard_normal(N)

    if lam_shares is None:
        regularizer = l1(lam) if lam > 0 else zero()
    else:
        shares = np.asarray(lam_shares, dtype=float)
        if shares.size < 1 or np.any(shares < 0) or not math.isclose(float(shares.sum()), 1.0, rel_tol=1e-9):
            raise ProxLastValueError(f"lam_shares must be nonnegative and sum to 1, got {list(shares)}")
        regularizer = DecomposableRegularizer.from_components([l1(lam * share) for share in shares], dim=n)
    return ProblemInstance(
        oracle=least_squares(A, b),
        regularizer=regularizer,
        x0=np.zeros(n),
        name=f"lasso(n={n},N={N},k={sparsity},seed={seed})",
        ground_truth=x_nat,
    )


def gen_logistic(
    n: int, N: int, lam: float, seed: int, scale: float = 1.0, sparsity: Optional[int] = None
) -> ProblemInstance:
    """l1-regularized logistic regression; labels are drawn from the logistic model of a sparse x_nat."""
    rng = np.random.default_rng(seed)
    sparsity = max(1, n // 5) if sparsity is None else sparsity
    if not 0 < sparsity <= n:
        raise ProxLastValueError(f"sparsity must lie in (0, {n}], got {sparsity}")
    A = rng.standard_normal((N, n))
    x_nat = np.zeros(n)
    support = rng.choice(n, size=sparsity, replace=False)
    x_nat[support] = rng.choice([-1.0, 1.0], size=sparsity)
    probability = 1.0 / (1.0 + np.exp(-(A @ x_nat)))
    y = np.where(rng.random(N) < probability, 1.0, -1.0)
    return ProblemInstance(
        oracle=logistic(A, y, scale=scale),
        regularizer=l1(lam) if lam > 0 else zero(),
        x0=np.zeros(n),
        name=f"logistic(n={n},N={N},seed={seed})",
        ground_truth=x_nat,
    )


def gen_box_least_squares(n: int, N: int, lo: float, hi: float, noise_std: float, seed: int) -> ProblemInstance:
    """Least squares over the box [lo, hi]^n; the unconstrained solution lies partly outside."""
    if not lo < hi:
        raise ProxLastValueError(f"box needs lo < hi, got [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, n))
    x_nat = rng.uniform(2.0 * lo - hi, 2.0 * hi - lo, size=n)
    b = A @ x_nat + noise_std * rng.standard_normal(N)
    x0 = np.clip(np.zeros(n), lo, hi)
    return ProblemInstance(
        oracle=least_squares(A, b),
        regularizer=box(np.full(n, lo), np.full(n, hi)),
        x0=x0,
        name=f"box_ls(n={n},N={N},seed={seed})",
        ground_truth=np.clip(x_nat, lo, hi),
    )


def make_graph(
    graph: str, num_nodes: int, block_dim: int, weight: float, rng: np.random.Generator, edge_prob: float = 0.3
) -> CollaborationGraph:
    """Named graph family: path, cycle, complete or random."""
    if graph == "path":
        return graph_path(num_nodes, block_dim, weight)
    if graph == "cycle":
        return graph_cycle(num_nodes, block_dim, weight)
    if graph == "complete":
        return graph_complete(num_nodes, block_dim, weight)
    if graph == "random":
        return graph_random(num_nodes, edge_prob, rng, block_dim, weight)
    raise ProxLastValueError(f"unknown graph family {graph}")


def gen_network_lasso(
    num_nodes: int,
    block_dim: int,
    seed: int,
    graph: Union[str, CollaborationGraph] = "random",
    rows_per_node: int = 5,
    edge_weight: float = 0.1,
    noise_std: float = 0.1,
    edge_prob: float = 0.3,
    clusters: int = 2,
    p: int = 2,
) -> ProblemInstance:
    """
    Node i holds f_i(x) = 1/2 ||M_i x_(i) - y_i||^2 with M_i ~ N(0, 1/rows); node
    targets come from a few shared cluster centers, so neighbors tend to agree.
    g(x) = sum over edges of edge_weight * ||x_i - x_j||_p.
    """
    rng = np.random.default_rng(seed)
    if isinstance(graph, CollaborationGraph):
        if graph.num_nodes != num_nodes or graph.block_dim != block_dim:
            raise ProxLastValueError("the supplied graph does not match num_nodes and block_dim")
        topology = graph
    else:
        topology = make_graph(graph, num_nodes, block_dim, edge_weight, rng, edge_prob)
    centers = rng.standard_normal((max(1, clusters), block_dim))
    assignment = rng.integers(len(centers), size=num_nodes)
    x_nat = centers[assignment]
    matrices = rng.standard_normal((num_nodes, rows_per_node, block_dim)) / np.sqrt(rows_per_node)
    targets = np.einsum("nrd,nd->nr", matrices, x_nat) + noise_std * rng.standard_normal((num_nodes, rows_per_node))
    return ProblemInstance(
        oracle=separable(matrices, targets),
        regularizer=build_network_lasso(topology, p=p),
        x0=np.zeros(num_nodes * block_dim),
        name=f"network_lasso(nodes={num_nodes},d={block_dim},edges={len(topology.edges)},seed={seed})",
        ground_truth=x_nat.reshape(-1),
    )


# pylint: enable=too-many-arguments,invalid-name


###############################################################################
# experiment spec
###############################################################################
class ExperimentSpec(BaseModel):
    """
    Schema of the flat key=value experiment file. Keys not listed here are rejected.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    # problem
    problem: Literal["lasso", "logistic", "network_lasso", "box_ls"] = "lasso"
    algorithm: str = "spgd"
    data_seed: int = Field(0, ge=0)
    data_csv: Optional[str] = None
    edge_list: Optional[str] = None
    n: int = Field(50, gt=0)
    N: int = Field(200, gt=0)  # pylint: disable=invalid-name
    sparsity: int = Field(5, gt=0)
    noise_std: float = Field(0.1, ge=0.0)
    lam: float = Field(0.1, ge=0.0)
    design: Literal["gaussian", "rademacher"] = "gaussian"
    lam_shares: Optional[List[float]] = None
    logistic_scale: float = Field(1.0, gt=0.0)
    num_nodes: int = Field(10, gt=0)
    block_dim: int = Field(2, gt=0)
    graph: Literal["random", "path", "cycle", "complete"] = "random"
    edge_prob: float = Field(0.3, ge=0.0, le=1.0)
    rows_per_node: int = Field(5, gt=0)
    edge_weight: float = Field(0.1, gt=0.0)
    edge_p: int = Field(2, ge=1, le=2)
    box_lo: float = -0.5
    box_hi: float = 0.5

    # protocol
    T_grid: List[int] = Field(default_factory=lambda: [100, 1000, 10000])  # pylint: disable=invalid-name
    trials: int = Field(20, ge=1)
    master_seed: int = Field(0, ge=0, lt=2**63)
    step_rule: Literal["horizon", "fixed", "power_law"] = "horizon"
    C: Optional[float] = None  # pylint: disable=invalid-name
    beta: float = Field(0.5, gt=0.0)
    tau: Optional[float] = Field(None, gt=0.0)
    step_c: float = Field(1.0, gt=0.0)
    x0: Literal["zero", "planted"] = "zero"
    checkpoint_stride: Optional[int] = Field(None, gt=0)
    record_average: bool = True
    blockprox_step: Literal["horizon", "constant"] = "horizon"

    @model_validator(mode="before")
    @classmethod
    def drop_empty_values(cls, data: Any) -> Any:
        """KEY= lines in the config file mean 'use the default'."""
        if isinstance(data, dict):
            return {key: value for key, value in data.items() if value not in (None, "")}
        return data

    @field_validator("T_grid", "lam_shares", mode="before")
    @classmethod
    def parse_list(cls, v) -> Any:
        """Accept comma separated lists."""
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("T_grid")
    @classmethod
    def check_t_grid(cls, v: List[int]) -> List[int]:
        """T_grid must be nonempty, positive and strictly increasing."""
        if not v:
            raise ValueError("T_grid must not be empty")
        if any(t < 1 for t in v):
            raise ValueError("every T must be >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("T_grid must be strictly increasing")
        return v

    @field_validator("algorithm")
    @classmethod
    def check_algorithm(cls, v: str) -> str:
        """Only enabled algorithms can be run from a config file."""
        if not Algorithms.enabled(v):
            choices = sorted(Algorithms.enabled_algorithms())
            raise ValueError(f"unknown or disabled algorithm {v}; choose from {choices}")
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentSpec":
        """Cross-field rules."""
        if self.step_rule == "fixed" and self.tau is None:
            raise ValueError("step_rule=fixed needs tau")
        if self.step_rule == "horizon" and self.C is not None:
            minimum = 4.0 if self.algorithm == Algorithms.RIPM[0] else 2.0
            if not self.C > minimum:
                raise ValueError(f"{self.algorithm} needs C > {minimum}, got {self.C}")
        if self.sparsity > self.n:
            raise ValueError(f"sparsity {self.sparsity} exceeds n {self.n}")
        if not self.box_lo < self.box_hi:
            raise ValueError("box_lo must be < box_hi")
        if self.x0 == "planted" and self.data_csv is not None:
            raise ValueError("x0=planted needs a generated problem with a ground truth")
        return self

    @property
    def digest(self) -> str:
        """Stable hash of the resolved spec."""
        return stable_digest(self.model_dump())

    @property
    def horizon_C(self) -> float:  # pylint: disable=invalid-name
        """C of the horizon step rule: the configured value or 3 (5 for ripm)."""
        if self.C is not None:
            return self.C
        return 5.0 if self.algorithm == Algorithms.RIPM[0] else 3.0

    def solver_config(self, horizon_T: int, trial: int) -> SolverConfig:  # pylint: disable=invalid-name
        """SolverConfig of one (T, trial) cell."""
        if self.step_rule == "fixed":
            rule = Fixed(tau=self.tau)
        elif self.step_rule == "power_law":
            rule = PowerLaw(c=self.step_c, beta=self.beta)
        elif self.algorithm == Algorithms.RIPM[0]:
            rule = HorizonRIPM(C=self.horizon_C, beta=self.beta)
        else:
            rule = HorizonSPGD(C=self.horizon_C, beta=self.beta)
        return SolverConfig(
            horizon_T=horizon_T,
            step_rule=rule,
            seed=trial_seed(self.master_seed, horizon_T, trial),
            checkpoint_stride=self.checkpoint_stride,
            record_average=self.record_average,
            blockprox_step=self.blockprox_step,
        )


def load_experiment_spec(path: str, seed_override: Optional[int] = None) -> ExperimentSpec:
    """
    Parse and validate an experiment file. seed_override replaces master_seed.
    Raises ProxLastConfigurationError naming lines and fields on invalid input.
    """
    values, line_map = read_config_file(path)
    if seed_override is not None:
        values["master_seed"] = seed_override
    try:
        return ExperimentSpec(**values)
    except ValidationError as e:
        raise config_error(e, path, line_map) from e


def build_problem(spec: ExperimentSpec) -> ProblemInstance:
    """Generate (or load) the fixed dataset of an experiment."""
    if spec.problem == "network_lasso":
        graph = None
        if spec.edge_list is not None:
            graph = load_edge_list(spec.edge_list, block_dim=spec.block_dim, num_nodes=spec.num_nodes)
        problem = gen_network_lasso(
            num_nodes=spec.num_nodes,
            block_dim=spec.block_dim,
            seed=spec.data_seed,
            graph=graph if graph is not None else spec.graph,
            rows_per_node=spec.rows_per_node,
            edge_weight=spec.edge_weight,
            noise_std=spec.noise_std,
            edge_prob=spec.edge_prob,
            p=spec.edge_p,
        )
    elif spec.data_csv is not None:
        kind = OracleKind.LOGISTIC.value if spec.problem == "logistic" else OracleKind.LEAST_SQUARES.value
        problem = load_csv_problem(spec.data_csv, kind=kind, lam=spec.lam, scale=spec.logistic_scale)
    elif spec.problem == "lasso":
        problem = gen_lasso(
            spec.n, spec.N, spec.sparsity, spec.noise_std, spec.lam, spec.data_seed, spec.design, spec.lam_shares
        )
    elif spec.problem == "logistic":
        problem = gen_logistic(spec.n, spec.N, spec.lam, spec.data_seed, scale=spec.logistic_scale)
    else:
        problem = gen_box_least_squares(spec.n, spec.N, spec.box_lo, spec.box_hi, spec.noise_std, spec.data_seed)
    if spec.x0 == "planted":
        problem = problem.with_x0(problem.ground_truth)
    return problem


def check_pairing(problem: ProblemInstance, algorithm: str) -> None:
    """Reject algorithm/problem combinations the solver would refuse."""
    if algorithm in (Algorithms.SPGD[0], Algorithms.PROJ_SGD[0]) and problem.is_decomposable:
        raise ProxLastConfigurationError(f"{algorithm} needs a closed-form regularizer; {problem.name} has a sum")
    if algorithm == Algorithms.PROJ_SGD[0] and not is_indicator(problem.regularizer):
        raise ProxLastConfigurationError(f"proj_sgd needs a constraint set; use problem=box_ls, not {problem.name}")
    if algorithm == Algorithms.RIPM[0] and not problem.is_decomposable:
        raise ProxLastConfigurationError(
            "ripm needs a decomposable regularizer; set lam_shares or problem=network_lasso"
        )
    if algorithm == Algorithms.BLOCKPROX[0] and problem.oracle.kind != OracleKind.SEPARABLE:
        raise ProxLastConfigurationError("blockprox needs problem=network_lasso")


def theory_bound(
    spec: ExperimentSpec, problem: ProblemInstance, certificate: SolutionCertificate, horizon_T: int
) -> Optional[TheoryBound]:  # pylint: disable=invalid-name
    """The matching last-iterate bound for horizon step rules; None when no bound applies."""
    if spec.step_rule != "horizon" or spec.algorithm == Algorithms.BLOCKPROX[0]:
        return None
    initial_gap = max(problem.objective(problem.x0) - certificate.h_star, 0.0)
    if not np.isfinite(initial_gap):
        return None
    lipschitz = smoothness_constant(problem.oracle)
    args = (
        horizon_T,
        spec.horizon_C,
        spec.beta,
        lipschitz,
        certificate.d_star_sq,
        certificate.sigma_star_sq,
        initial_gap,
    )
    if spec.algorithm == Algorithms.RIPM[0]:
        return bound_ripm(*args, problem.m, problem.regularizer.lipschitz_g)
    return bound_spgd(*args)


###############################################################################
# runner
###############################################################################
def _run_cell(payload) -> Dict[str, Any]:
    spec, problem, certificate, horizon_T, trial = payload  # pylint: disable=invalid-name
    config = spec.solver_config(horizon_T, trial)
    runner = ALGORITHM_RUNNERS[spec.algorithm]
    try:
        trace = runner(problem, certificate, config)
    except ProxLastDivergenceError as e:
        logger.warning("cell T=%d trial=%d diverged: %s", horizon_T, trial, e.message)
        return {
            "T": horizon_T,
            "trial": trial,
            "seed": config.seed,
            "gap_last": float("nan"),
            "gap_avg": float("nan"),
            "diverged": True,
            "message": e.message,
        }
    return {
        "T": horizon_T,
        "trial": trial,
        "seed": config.seed,
        "gap_last": trace.final_gap,
        "gap_avg": trace.final_average_gap if trace.final_average_gap is not None else float("nan"),
        "diverged": False,
        "message": "",
    }


def _run_cells(payloads: List[tuple], jobs: int) -> List[Dict[str, Any]]:
    if jobs <= 1 or len(payloads) <= 1:
        return [_run_cell(payload) for payload in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(_run_cell, payloads))


def _mean_and_se(values: np.ndarray):
    values = values[np.isfinite(values)]
    if values.size == 0:
        return float("nan"), float("nan")
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


# pylint: disable=too-many-instance-attributes
@dataclass
class RateReport:
    """Per-T mean gaps with standard errors, the fitted log-log slope and the bound at every T."""

    algorithm: str
    spec_digest: str
    certificate: Dict[str, Any]
    cells: List[Dict[str, Any]]
    per_T: List[Dict[str, Any]]  # pylint: disable=invalid-name
    slope: Optional[float] = None
    slope_ci: Optional[List[float]] = None
    intercept: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        """Long format, one row per (T, trial)."""
        return pd.DataFrame(self.cells, columns=["T", "trial", "seed", "gap_last", "gap_avg", "diverged"])

    def summary_frame(self) -> pd.DataFrame:
        """One row per T."""
        return pd.DataFrame([{key: value for key, value in row.items() if key != "bound_terms"} for row in self.per_T])

    def to_csv(self, path: str) -> str:
        """Write the long-format cell table atomically."""
        return atomic_write_text(path, self.to_frame().to_csv(index=False))

    def to_dict(self) -> dict:
        """JSON summary. Contains no timings, so equal specs give equal bytes."""
        return {
            "algorithm": self.algorithm,
            "spec_digest": self.spec_digest,
            "certificate": self.certificate,
            "per_T": self.per_T,
            "slope": self.slope,
            "slope_ci": self.slope_ci,
            "intercept": self.intercept,
            "warnings": self.warnings,
            "bound_dominance": self.bound_dominance(),
            "monotone_trend": self.monotone_trend(),
        }

    def to_json(self) -> str:
        """Serialized to_dict()."""
        return to_json(self.to_dict())

    def bound_dominance(self, n_se: float = 3.0) -> Optional[bool]:
        """mean gap <= bound + n_se standard errors at every T with a bound; None when no bound applies."""
        rows = [row for row in self.per_T if row["bound"] is not None]
        if not rows:
            return None
        return all(row["mean_last"] <= row["bound"] + n_se * row["se_last"] for row in rows)

    def monotone_trend(self, n_se: float = 2.0) -> bool:
        """Mean final gap nonincreasing in T up to n_se combined standard errors."""
        for prev, curr in zip(self.per_T, self.per_T[1:]):
            slack = n_se * math.hypot(prev["se_last"], curr["se_last"])
            if curr["mean_last"] > prev["mean_last"] + slack:
                return False
        return True


def fit_slope(t_values: Sequence[int], mean_gaps: Sequence[float], confidence: float = 0.95):
    """
    Least-squares slope of ln(mean gap) against ln T with its confidence interval.
    Returns (slope, [lo, hi], intercept); the interval is None with fewer than three points,
    and everything is None when fewer than two positive means are available.
    """
    points = [(t, g) for t, g in zip(t_values, mean_gaps) if np.isfinite(g) and g > 0]
    if len(points) < 2:
        return None, None, None
    log_t = np.log([t for t, _ in points])
    log_g = np.log([g for _, g in points])
    fit = stats.linregress(log_t, log_g)
    interval = None
    if len(points) > 2:
        half = stats.t.ppf(0.5 + confidence / 2.0, len(points) - 2) * fit.stderr
        interval = [float(fit.slope - half), float(fit.slope + half)]
    return float(fit.slope), interval, float(fit.intercept)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> RateReport:
    """
    Run `trials` independent solver runs for every T of the grid on one certified dataset,
    aggregate mean gaps and standard errors, fit the slope and evaluate the bound.
    Diverged cells are marked in the report; the experiment continues.
    """
    problem = build_problem(spec)
    check_pairing(problem, spec.algorithm)
    certificate = certify_solution(problem)
    logger.info("running %s on %s: T_grid=%s trials=%d", spec.algorithm, problem.name, spec.T_grid, spec.trials)

    payloads = [(spec, problem, certificate, T, trial) for T in spec.T_grid for trial in range(spec.trials)]
    cells = _run_cells(payloads, jobs)

    per_T, warnings = [], []
    for T in spec.T_grid:  # pylint: disable=invalid-name
        rows = [cell for cell in cells if cell["T"] == T]
        diverged = sum(cell["diverged"] for cell in rows)
        if diverged:
            warnings.append(f"T={T}: {diverged} of {len(rows)} trials diverged")
        mean_last, se_last = _mean_and_se(np.array([cell["gap_last"] for cell in rows]))
        mean_avg, se_avg = _mean_and_se(np.array([cell["gap_avg"] for cell in rows]))
        bound = theory_bound(spec, problem, certificate, T)
        per_T.append(
            {
                "T": T,
                "trials": len(rows),
                "diverged": diverged,
                "mean_last": mean_last,
                "se_last": se_last,
                "mean_avg": mean_avg,
                "se_avg": se_avg,
                "bound": None if bound is None else bound.total,
                "bound_terms": None if bound is None else bound.to_dict(),
            }
        )

    slope, slope_ci, intercept = fit_slope(spec.T_grid, [row["mean_last"] for row in per_T])
    return RateReport(
        algorithm=spec.algorithm,
        spec_digest=spec.digest,
        certificate={**certificate.describe(), "digest": certificate.digest},
        cells=cells,
        per_T=per_T,
        slope=slope,
        slope_ci=slope_ci,
        intercept=intercept,
        warnings=warnings,
    )


@dataclass
class LastVsAverage:
    """Per-trial final gaps of x_T and of the running average at the largest T of the grid."""

    algorithm: str
    T: int  # pylint: disable=invalid-name
    rows: List[Dict[str, Any]]

    @property
    def wins(self) -> int:
        """Trials where the last iterate has the strictly smaller gap."""
        return sum(row["last_wins"] for row in self.rows)

    @property
    def ties(self) -> int:
        """Trials with equal gaps."""
        return sum(row["gap_last"] == row["gap_avg"] for row in self.rows)

    @property
    def trials(self) -> int:
        """Number of non-diverged trials."""
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        """One row per trial."""
        return pd.DataFrame(self.rows, columns=["trial", "seed", "gap_last", "gap_avg", "last_wins"])

    def to_csv(self, path: str) -> str:
        """Write the comparison table atomically."""
        return atomic_write_text(path, self.to_frame().to_csv(index=False))

    def to_json(self) -> str:
        """JSON summary with the win counts."""
        return to_json(
            {
                "algorithm": self.algorithm,
                "T": self.T,
                "trials": self.trials,
                "last_wins": self.wins,
                "ties": self.ties,
                "rows": self.rows,
            }
        )


def compare_last_vs_avg(spec: ExperimentSpec, jobs: int = 1) -> LastVsAverage:
    """Final gaps of the last and the averaged iterate for every trial at the largest T."""
    if not spec.record_average:
        raise ProxLastConfigurationError("compare needs record_average=true")
    problem = build_problem(spec)
    check_pairing(problem, spec.algorithm)
    certificate = certify_solution(problem)
    horizon_T = spec.T_grid[-1]  # pylint: disable=invalid-name
    cells = _run_cells([(spec, problem, certificate, horizon_T, trial) for trial in range(spec.trials)], jobs)
    rows = [
        {
            "trial": cell["trial"],
            "seed": cell["seed"],
            "gap_last": cell["gap_last"],
            "gap_avg": cell["gap_avg"],
            "last_wins": bool(cell["gap_last"] < cell["gap_avg"]),
        }
        for cell in cells
        if not cell["diverged"]
    ]
    return LastVsAverage(algorithm=spec.algorithm, T=horizon_T, rows=rows)
