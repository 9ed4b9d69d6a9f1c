# -*- coding: utf-8 -*-
"""
Shared solver plumbing: step-size rules, SolverConfig, random streams and IterateTrace.

Every solver run draws its randomness from numpy SeedSequence children of
config.seed. Child 0 drives the smooth-component index i_t, child 1 drives
regularizer component (and BlockProx edge) sampling, so the two streams are
independent and a run is bitwise reproducible from its seed.
"""

# python stuff
import logging
import time
from dataclasses import dataclass, field
from typing import Annotated, Callable, List, Literal, Optional, Tuple, Union

# 3rd party stuff
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

# our stuff
from proxlast.conf import settings
from proxlast.exceptions import ProxLastConfigurationError, ProxLastDivergenceError
from proxlast.utils import atomic_write_text, to_json


logger = logging.getLogger(__name__)


class HorizonSPGD(BaseModel):
    """tau = 1 / (C * L * T**beta) with C > 2"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: Literal["horizon_spgd"] = "horizon_spgd"
    C: float = Field(3.0, gt=2.0)
    beta: float = Field(0.5, gt=0.0)


class HorizonRIPM(BaseModel):
    """tau = 1 / (C * L * T**beta) with C > 4"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: Literal["horizon_ripm"] = "horizon_ripm"
    C: float = Field(5.0, gt=4.0)
    beta: float = Field(0.5, gt=0.0)


class Fixed(BaseModel):
    """Constant tau, independent of L and T."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: Literal["fixed"] = "fixed"
    tau: float = Field(gt=0.0)


class PowerLaw(BaseModel):
    """tau = c / T**beta, independent of L. No bound is attached to this rule."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: Literal["power_law"] = "power_law"
    c: float = Field(1.0, gt=0.0)
    beta: float = Field(0.5, ge=0.0)


StepRule = Annotated[Union[HorizonSPGD, HorizonRIPM, Fixed, PowerLaw], Field(discriminator="rule")]


class SolverConfig(BaseModel):
    """Horizon, step rule and sampling seed of one solver run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    horizon_T: int = Field(gt=0)  # pylint: disable=invalid-name
    step_rule: StepRule = Field(default_factory=HorizonSPGD)
    seed: int = Field(0, ge=0, lt=2**64)
    checkpoint_stride: Optional[int] = Field(None, gt=0)
    record_average: bool = True
    eps_prime: Optional[float] = Field(None, gt=0.0)
    blockprox_step: Literal["horizon", "constant"] = "horizon"
    keep_snapshots: bool = False

    @model_validator(mode="after")
    def check_step_validity(self) -> "SolverConfig":
        """tau * L = 1 / (C * T**beta) must stay below 1/2 (SPGD) or 1/4 (RIPM)."""
        rule = self.step_rule
        if isinstance(rule, (HorizonSPGD, HorizonRIPM)):
            tau_l = 1.0 / (rule.C * float(self.horizon_T) ** rule.beta)
            limit = 0.5 if isinstance(rule, HorizonSPGD) else 0.25
            if not tau_l < limit:
                raise ValueError(f"{rule.rule} gives tau*L = {tau_l:.4g}, which must be < {limit}")
        return self

    @property
    def stride(self) -> int:
        """Checkpoint stride, defaulting to about settings.checkpoints_per_run checkpoints."""
        if self.checkpoint_stride is not None:
            return self.checkpoint_stride
        return max(1, self.horizon_T // settings.checkpoints_per_run)


def resolve_step_size(rule: StepRule, lipschitz: float, horizon_T: int) -> float:  # pylint: disable=invalid-name
    """Turn a step rule into the constant tau used for the whole run."""
    if isinstance(rule, Fixed):
        return float(rule.tau)
    if isinstance(rule, PowerLaw):
        return float(rule.c / float(horizon_T) ** rule.beta)
    if not lipschitz > 0 or not np.isfinite(lipschitz):
        raise ProxLastConfigurationError(f"{rule.rule} needs a finite positive L, got {lipschitz}")
    tau = 1.0 / (rule.C * lipschitz * float(horizon_T) ** rule.beta)
    limit = 0.5 if isinstance(rule, HorizonSPGD) else 0.25
    if not tau * lipschitz < limit:
        raise ProxLastConfigurationError(f"tau*L = {tau * lipschitz:.4g} violates tau*L < {limit}")
    return tau


def sampling_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """(index stream, component stream) spawned from one seed."""
    children = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(children[0]), np.random.default_rng(children[1])


def trial_seed(master_seed: int, horizon_T: int, trial: int) -> int:  # pylint: disable=invalid-name
    """Independent 63-bit seed for one (T, trial) cell."""
    state = np.random.SeedSequence([master_seed, horizon_T, trial]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) | (int(state[1]) >> 1))


# pylint: disable=too-many-instance-attributes
@dataclass
class IterateTrace:
    """Objective gaps at checkpoints plus the last and running-average iterates."""

    algorithm: str
    checkpoints: np.ndarray
    gaps: np.ndarray
    average_gaps: Optional[np.ndarray]
    last_iterate: np.ndarray
    average_iterate: Optional[np.ndarray]
    step_size_used: float
    h_star: float
    seed: int
    wall_time: float = 0.0
    snapshots: Optional[np.ndarray] = field(default=None)

    @property
    def final_gap(self) -> float:
        """h(x_T) - h*"""
        return float(self.gaps[-1])

    @property
    def final_average_gap(self) -> Optional[float]:
        """h(average of x_1..x_T) - h*"""
        return None if self.average_gaps is None else float(self.average_gaps[-1])

    def to_frame(self) -> pd.DataFrame:
        """Columns t, gap_last, gap_avg."""
        return pd.DataFrame(
            {
                "t": self.checkpoints,
                "gap_last": self.gaps,
                "gap_avg": self.average_gaps if self.average_gaps is not None else np.full(len(self.gaps), np.nan),
            }
        )

    def to_csv(self, path: str) -> str:
        """Write the checkpoint table atomically."""
        return atomic_write_text(path, self.to_frame().to_csv(index=False))

    def to_json(self, config: SolverConfig, certificate_digest: Optional[str] = None) -> str:
        """Full metadata: config, certificate digest, seed and the trajectory."""
        payload = {
            "algorithm": self.algorithm,
            "config": config.model_dump(),
            "certificate_digest": certificate_digest,
            "seed": self.seed,
            "step_size": self.step_size_used,
            "h_star": self.h_star,
            "checkpoints": self.checkpoints,
            "gap_last": self.gaps,
            "gap_avg": self.average_gaps,
            "last_iterate": self.last_iterate,
            "average_iterate": self.average_iterate,
        }
        return to_json(payload)


class TraceRecorder:
    """Running average, divergence guard and checkpoint bookkeeping for one run."""

    def __init__(
        self,
        algorithm: str,
        objective: Callable[[np.ndarray], float],
        h_star: float,
        x0: np.ndarray,
        config: SolverConfig,
        step_size: float,
    ):
        self.algorithm = algorithm
        self.objective = objective
        self.h_star = h_star
        self.config = config
        self.step_size = step_size
        self.horizon = config.horizon_T
        self.stride = config.stride
        self.radius = settings.divergence_factor * (1.0 + float(np.linalg.norm(x0)))
        self.average = None
        self.checkpoints: List[int] = []
        self.gaps: List[float] = []
        self.average_gaps: List[float] = []
        self.snapshots: List[np.ndarray] = []
        self.started = time.perf_counter()
        self._checkpoint(0, x0, x0)

    def _checkpoint(self, t: int, x: np.ndarray, average: np.ndarray) -> None:
        self.checkpoints.append(t)
        self.gaps.append(self.objective(x) - self.h_star)
        if self.config.record_average:
            self.average_gaps.append(self.objective(average) - self.h_star)
        if self.config.keep_snapshots:
            self.snapshots.append(x.copy())

    def guard(self, t: int, x: np.ndarray) -> None:
        """Raise ProxLastDivergenceError when x is nonfinite or outside the divergence radius."""
        norm = float(np.linalg.norm(x))
        if not np.isfinite(norm) or norm > self.radius:
            raise ProxLastDivergenceError(
                f"{self.algorithm} diverged at iteration {t}: ||x_t|| = {norm:.3e} exceeds {self.radius:.3e}",
                iteration=t,
                norm=norm,
            )

    def record(self, t: int, x: np.ndarray) -> None:
        """Register x_t for t = 1..T."""
        self.guard(t, x)
        if self.config.record_average:
            if self.average is None:
                self.average = x.copy()
            else:
                self.average += (x - self.average) / t
        if t % self.stride == 0 or t == self.horizon:
            self._checkpoint(t, x, self.average if self.average is not None else x)

    def finish(self, x: np.ndarray, seed: int) -> IterateTrace:
        """Freeze the recorded run into an IterateTrace."""
        wall_time = time.perf_counter() - self.started
        logger.debug(
            "%s finished T=%d in %.3fs, final gap %.4e", self.algorithm, self.horizon, wall_time, self.gaps[-1]
        )
        return IterateTrace(
            algorithm=self.algorithm,
            checkpoints=np.asarray(self.checkpoints, dtype=int),
            gaps=np.asarray(self.gaps),
            average_gaps=np.asarray(self.average_gaps) if self.config.record_average else None,
            last_iterate=x.copy(),
            average_iterate=None if self.average is None else self.average.copy(),
            step_size_used=self.step_size,
            h_star=self.h_star,
            seed=seed,
            wall_time=wall_time,
            snapshots=np.asarray(self.snapshots) if self.config.keep_snapshots else None,
        )
