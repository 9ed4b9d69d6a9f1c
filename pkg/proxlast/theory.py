# -*- coding: utf-8 -*-
"""
Last-iterate analysis made executable.

- compute_a and the alpha schedule (alpha_t, p_t) behind the z-sequence
- z_weights: the convex combination z_t of x_0..x_t and x*
- exact and simplified bound evaluators for SPGD and RIPM
- empirical checkers for variance transfer and per-iteration descent

The alpha recursion runs in log space so that T = 1e5 schedules stay accurate.
"""

# python stuff
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

# 3rd party stuff
import numpy as np

# our stuff
from proxlast.conf import settings
from proxlast.exceptions import ProxLastConfigurationError, ProxLastValueError
from proxlast.oracles import ProblemInstance, SolutionCertificate, component_grads, smoothness_constant
from proxlast.prox_core import prox


logger = logging.getLogger(__name__)


def default_eps_prime(tau: float, lipschitz: float) -> float:
    """eps' = (1 - 2 tau L) / (1 + 2 tau L)"""
    tau_l = tau * lipschitz
    return (1.0 - 2.0 * tau_l) / (1.0 + 2.0 * tau_l)


def compute_a(tau: float, lipschitz: float, eps_prime: Optional[float] = None, ripm: bool = False) -> float:
    """
    a = 2 tau L (1 + eps'). With the default eps' this is 4 tau L / (1 + 2 tau L).

    Raises ProxLastConfigurationError when tau L violates the step condition
    (1/2, or 1/4 with ripm) or when a >= 1.
    """
    if not tau > 0 or not lipschitz > 0:
        raise ProxLastValueError(f"tau and L must be positive, got tau={tau}, L={lipschitz}")
    limit = 0.25 if ripm else 0.5
    tau_l = tau * lipschitz
    if not tau_l < limit:
        raise ProxLastConfigurationError(f"tau*L = {tau_l:.4g} must be < {limit}")
    if eps_prime is None:
        eps_prime = default_eps_prime(tau, lipschitz)
    if not eps_prime > 0:
        raise ProxLastValueError(f"eps_prime must be positive, got {eps_prime}")
    a = 2.0 * tau_l * (1.0 + eps_prime)
    if not a < 1.0:
        raise ProxLastConfigurationError(f"a = {a:.6g} must be < 1; lower tau or eps_prime")
    return a


@dataclass(frozen=True, eq=False)
class AlphaSchedule:
    """
    alpha[k] holds alpha_{k-1}, so alpha[0] = alpha_{-1} = 1 and alpha[1] = alpha_0 = 1.
    p[t] is p_t for t = 0..T with p_0 = 1.
    """

    a: float
    T: int  # pylint: disable=invalid-name
    alpha: np.ndarray
    log_alpha: np.ndarray
    p: np.ndarray

    def alpha_at(self, t: int) -> float:
        """alpha_t for t = -1..T"""
        if not -1 <= t <= self.T:
            raise ProxLastValueError(f"t must lie in [-1, {self.T}], got {t}")
        return float(self.alpha[t + 1])

    def ratio_sum(self) -> float:
        """sum_{t=1}^T alpha_t / alpha_T"""
        return float(np.sum(np.exp(self.log_alpha[2:] - self.log_alpha[-1])))


def build_alpha_schedule(T: int, a: float) -> AlphaSchedule:  # pylint: disable=invalid-name
    """
    alpha_{-1} = alpha_0 = 1, alpha_t = (T - t + 2) / (a + T - t + 1) * alpha_{t-1};
    p_0 = 1, p_t = (a + T - t + 1) / (T - t + 2).
    """
    if T < 1:
        raise ProxLastValueError(f"T must be >= 1, got {T}")
    if not 0.0 < a < 1.0:
        raise ProxLastValueError(f"a must lie in (0, 1), got {a}")
    t = np.arange(1, T + 1, dtype=float)
    # log((T - t + 2) / (a + T - t + 1)) = log1p((1 - a) / (a + T - t + 1))
    log_ratio = np.log1p((1.0 - a) / (a + T - t + 1.0))
    log_alpha = np.concatenate(([0.0, 0.0], np.cumsum(log_ratio)))
    p = np.concatenate(([1.0], (a + T - t + 1.0) / (T - t + 2.0)))
    return AlphaSchedule(a=float(a), T=int(T), alpha=np.exp(log_alpha), log_alpha=log_alpha, p=p)


def z_weights(schedule: AlphaSchedule, t: int) -> Tuple[float, np.ndarray]:
    """
    Weights of z_t = w* x* + sum_s w_s x_s: w* = 1 / alpha_t and
    w_s = (alpha_s - alpha_{s-1}) / alpha_t for s = 0..t.
    """
    if not 0 <= t <= schedule.T:
        raise ProxLastValueError(f"t must lie in [0, {schedule.T}], got {t}")
    alpha_t = schedule.alpha[t + 1]
    weights = np.diff(schedule.alpha[: t + 2]) / alpha_t
    return float(1.0 / alpha_t), weights


@dataclass(frozen=True)
class AlphaScheduleReport:
    """The alpha-schedule inequalities evaluated for one (T, a)."""

    T: int  # pylint: disable=invalid-name
    a: float
    alpha_T: float  # pylint: disable=invalid-name
    alpha_lower: float
    ratio_sum: float
    ratio_middle: float
    ratio_upper: float
    recursion_error: float
    passed: bool

    def to_dict(self) -> dict:
        """JSON-friendly view."""
        return asdict(self)


def alpha_schedule_report(T: int, a: float, rtol: float = 1e-12) -> AlphaScheduleReport:  # pylint: disable=invalid-name
    """
    Check alpha_T >= (T+1)^(1-a) / 2^(1-a),
    sum_{t=1}^T alpha_t / alpha_T <= 4 (1 + (T^a - 1) / a) <= 8 T^a ln(T+1)
    and alpha_t p_t = alpha_{t-1} to rtol.
    """
    schedule = build_alpha_schedule(T, a)
    alpha_T = float(schedule.alpha[-1])  # pylint: disable=invalid-name
    lower = (T + 1.0) ** (1.0 - a) / 2.0 ** (1.0 - a)
    ratio_sum = schedule.ratio_sum()
    middle = 4.0 * (1.0 + (T**a - 1.0) / a)
    upper = 8.0 * T**a * math.log(T + 1.0)
    previous = schedule.alpha[1:-1]
    recursion_error = float(np.max(np.abs(schedule.alpha[2:] * schedule.p[1:] - previous) / previous))
    passed = (
        alpha_T >= lower * (1.0 - rtol)
        and ratio_sum <= middle * (1.0 + rtol)
        and middle <= upper * (1.0 + rtol)
        and recursion_error <= rtol
    )
    return AlphaScheduleReport(
        T=int(T),
        a=float(a),
        alpha_T=alpha_T,
        alpha_lower=lower,
        ratio_sum=ratio_sum,
        ratio_middle=middle,
        ratio_upper=upper,
        recursion_error=recursion_error,
        passed=bool(passed),
    )


def ta_constant_check(T: int, beta: float, C: float) -> Dict[str, float]:  # pylint: disable=invalid-name
    """T^a <= exp(4 / (e beta C)) for tau = 1 / (C L T^beta) and the default eps'."""
    tau_l = 1.0 / (C * float(T) ** beta)
    a = compute_a(tau_l, 1.0)
    lhs = math.exp(a * math.log(T))
    rhs = math.exp(4.0 / (math.e * beta * C))
    return {"T": T, "beta": beta, "C": C, "a": a, "lhs": lhs, "rhs": rhs, "passed": lhs <= rhs * (1.0 + 1e-12)}


@dataclass(frozen=True)
class TheoryBound:
    """Per-term breakdown of a last-iterate bound on E[h(x_T) - h*]."""

    distance_term: float
    initial_gap_term: float
    variance_terms: float
    prox_noise_terms: float
    A_const: float  # pylint: disable=invalid-name
    v: float

    @property
    def terms(self) -> Dict[str, float]:
        """Named terms."""
        return {
            "distance_term": self.distance_term,
            "initial_gap_term": self.initial_gap_term,
            "variance_terms": self.variance_terms,
            "prox_noise_terms": self.prox_noise_terms,
        }

    @property
    def total(self) -> float:
        """Sum of the terms."""
        return self.distance_term + self.initial_gap_term + self.variance_terms + self.prox_noise_terms

    def to_dict(self) -> dict:
        """JSON-friendly view."""
        return {**self.terms, "total": self.total, "A_const": self.A_const, "v": self.v}


# pylint: disable=invalid-name,too-many-arguments
def _check_bound_inputs(T, beta, L, d_star_sq, sigma_star_sq, initial_gap) -> None:
    if T < 1:
        raise ProxLastValueError(f"T must be >= 1, got {T}")
    if not beta > 0:
        raise ProxLastConfigurationError(f"beta must be positive, got {beta}")
    if not L > 0:
        raise ProxLastValueError(f"L must be positive, got {L}")
    for name, value in (("d_star_sq", d_star_sq), ("sigma_star_sq", sigma_star_sq), ("initial_gap", initial_gap)):
        if value < 0:
            raise ProxLastValueError(f"{name} must be nonnegative, got {value}")


def _exact_terms(T, C, beta, L, d_star_sq, sigma_star_sq, initial_gap) -> Tuple[float, float, float, float, float]:
    A = math.exp(4.0 / (math.e * beta * C))
    distance = A * C * L * d_star_sq / float(T) ** (1.0 - beta)
    initial = A * 2.0 * initial_gap / T
    variance = A * (
        4.0 * sigma_star_sq / ((C - 2.0) * L * float(T) ** (1.0 + beta))
        + 16.0 * sigma_star_sq * math.log(T + 1.0) / ((C - 2.0) * L * float(T) ** beta)
    )
    tau = 1.0 / (C * L * float(T) ** beta)
    v = (1.0 + 1.0 / default_eps_prime(tau, L)) * sigma_star_sq * tau
    return A, distance, initial, variance, v


def bound_spgd(T, C, beta, L, d_star_sq, sigma_star_sq, initial_gap) -> TheoryBound:
    """
    A [C L d*^2 / T^(1-beta) + 2 gap0 / T + 4 sigma*^2 / ((C-2) L T^(1+beta))
       + 16 sigma*^2 ln(T+1) / ((C-2) L T^beta)]  with A = exp(4 / (e beta C)).
    """
    if not C > 2:
        raise ProxLastConfigurationError(f"bound_spgd needs C > 2, got {C}")
    _check_bound_inputs(T, beta, L, d_star_sq, sigma_star_sq, initial_gap)
    A, distance, initial, variance, v = _exact_terms(T, C, beta, L, d_star_sq, sigma_star_sq, initial_gap)
    return TheoryBound(
        distance_term=distance, initial_gap_term=initial, variance_terms=variance, prox_noise_terms=0.0, A_const=A, v=v
    )


def bound_ripm(T, C, beta, L, d_star_sq, sigma_star_sq, initial_gap, m, L_g) -> TheoryBound:
    """bound_spgd terms plus A [16 m^2 L_g^2 / (C L T^(1+beta)) + 64 m^2 L_g^2 ln(T+1) / (C L T^beta)]."""
    if not C > 4:
        raise ProxLastConfigurationError(f"bound_ripm needs C > 4, got {C}")
    _check_bound_inputs(T, beta, L, d_star_sq, sigma_star_sq, initial_gap)
    if m < 1 or L_g < 0:
        raise ProxLastValueError(f"need m >= 1 and L_g >= 0, got m={m}, L_g={L_g}")
    A, distance, initial, variance, v = _exact_terms(T, C, beta, L, d_star_sq, sigma_star_sq, initial_gap)
    noise = (m * m) * (L_g * L_g)
    prox_noise = A * (
        16.0 * noise / (C * L * float(T) ** (1.0 + beta))
        + 64.0 * noise * math.log(T + 1.0) / (C * L * float(T) ** beta)
    )
    return TheoryBound(
        distance_term=distance,
        initial_gap_term=initial,
        variance_terms=variance,
        prox_noise_terms=prox_noise,
        A_const=A,
        v=v,
    )


def _simplified(constant, T, L, d_star_sq, sigma_star_sq, initial_gap, noise) -> TheoryBound:
    root = math.sqrt(T)
    log_factor = 1.0 / T + 4.0 * math.log(T + 1.0)
    return TheoryBound(
        distance_term=constant / root * L * d_star_sq,
        initial_gap_term=constant / T * initial_gap,
        variance_terms=constant / root * sigma_star_sq / L * log_factor,
        prox_noise_terms=constant / root * 4.0 * noise / L * log_factor,
        A_const=constant,
        v=0.0,
    )


def bound_spgd_simplified(T, L, d_star_sq, sigma_star_sq, initial_gap) -> TheoryBound:
    """9/sqrt(T) [L d*^2 + gap0/sqrt(T) + sigma*^2/L (1/T + 4 ln(T+1))], the tau = 1/(3 L sqrt(T)) form."""
    _check_bound_inputs(T, 0.5, L, d_star_sq, sigma_star_sq, initial_gap)
    return _simplified(9.0, T, L, d_star_sq, sigma_star_sq, initial_gap, 0.0)


def bound_ripm_simplified(T, L, d_star_sq, sigma_star_sq, initial_gap, m, L_g) -> TheoryBound:
    """10/sqrt(T) [L d*^2 + gap0/sqrt(T) + (sigma*^2 + 4 m^2 L_g^2)/L (1/T + 4 ln(T+1))], tau = 1/(5 L sqrt(T))."""
    _check_bound_inputs(T, 0.5, L, d_star_sq, sigma_star_sq, initial_gap)
    return _simplified(10.0, T, L, d_star_sq, sigma_star_sq, initial_gap, (m * m) * (L_g * L_g))


def compare_bounds(exact: TheoryBound, simplified: TheoryBound) -> Dict[str, dict]:
    """Per-term dominance of a simplified form over the exact bound, plus the totals."""
    retval = {}
    pairs = list(exact.terms.items()) + [("total", exact.total)]
    simple = {**simplified.terms, "total": simplified.total}
    for name, value in pairs:
        retval[name] = {"exact": value, "simplified": simple[name], "dominated": value <= simple[name] * (1.0 + 1e-12)}
    return retval


# pylint: enable=invalid-name,too-many-arguments


def check_variance_transfer(
    problem: ProblemInstance, certificate: SolutionCertificate, x, eps: float
) -> Tuple[float, float, bool]:
    """
    E_i ||grad f_i(x)||^2 <= 2 L (1 + eps) [h(x) - h*] + (1 + 1/eps) sigma*^2,
    with the expectation enumerated over all N components.
    """
    if not eps > 0:
        raise ProxLastValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=float)
    grads = component_grads(problem.oracle, x)
    lhs = float(np.mean(np.einsum("ij,ij->i", grads, grads)))
    lipschitz = smoothness_constant(problem.oracle)
    gap = problem.objective(x) - certificate.h_star
    rhs = 2.0 * lipschitz * (1.0 + eps) * gap + (1.0 + 1.0 / eps) * certificate.sigma_star_sq
    passed = lhs <= rhs + settings.variance_transfer_rtol * (1.0 + abs(rhs))
    return lhs, rhs, bool(passed)


@dataclass(frozen=True)
class DescentReport:
    """Both sides of the per-iteration descent inequality at one (x_t, z_t)."""

    lhs: float
    rhs: float
    slack: float
    mode: str
    samples: int
    standard_error: float
    a: float
    v: float
    extra: float
    passed: bool

    def to_dict(self) -> dict:
        """JSON-friendly view."""
        return asdict(self)


# pylint: disable=too-many-arguments,too-many-locals
def check_descent(
    problem: ProblemInstance,
    certificate: SolutionCertificate,
    x_t,
    z_t,
    tau: float,
    eps_prime: Optional[float] = None,
    resamples: Optional[int] = None,
    seed: int = 0,
    ripm: bool = False,
) -> DescentReport:
    """
    E_t[h(x+) - h(z) - a h(x) + a h*] <= (1/(2 tau)) E_t[||x - z||^2 - ||x+ - z||^2] + v (+ 8 tau m^2 L_g^2)

    with a = 2 tau L (1 + eps') and v = (1 + 1/eps') sigma*^2 tau. The expectation
    over i (and j with ripm) is enumerated when N * m is at most
    settings.exact_expectation_threshold, otherwise estimated from `resamples` draws
    and accepted within 3 standard errors.
    """
    oracle = problem.oracle
    x_t = np.asarray(x_t, dtype=float)
    z_t = np.asarray(z_t, dtype=float)
    lipschitz = smoothness_constant(oracle)
    a = compute_a(tau, lipschitz, eps_prime, ripm=ripm)
    eps_prime = default_eps_prime(tau, lipschitz) if eps_prime is None else eps_prime
    v = (1.0 + 1.0 / eps_prime) * certificate.sigma_star_sq * tau

    if ripm:
        if not problem.is_decomposable:
            raise ProxLastConfigurationError("the ripm descent check needs a DecomposableRegularizer")
        reg = problem.regularizer
        reg.require_lipschitz()
        components, prox_step = reg.components, tau * reg.m
        extra = 8.0 * tau * reg.m**2 * reg.lipschitz_g**2
    else:
        if problem.is_decomposable:
            raise ProxLastConfigurationError("the spgd descent check needs a closed-form regularizer")
        components, prox_step, extra = (problem.regularizer,), tau, 0.0

    steps = x_t - tau * component_grads(oracle, x_t)
    h_x, h_z = problem.objective(x_t), problem.objective(z_t)
    dist_x = float(np.dot(x_t - z_t, x_t - z_t))
    m = len(components)

    def sample(i: int, j: int) -> Tuple[float, float]:
        x_next = prox(components[j], steps[i], prox_step)
        lhs = problem.objective(x_next) - h_z - a * h_x + a * certificate.h_star
        rhs = (dist_x - float(np.dot(x_next - z_t, x_next - z_t))) / (2.0 * tau)
        return lhs, rhs

    if oracle.N * m <= settings.exact_expectation_threshold:
        pairs = np.array([sample(i, j) for i in range(oracle.N) for j in range(m)])
        lhs, rhs = float(pairs[:, 0].mean()), float(pairs[:, 1].mean()) + v + extra
        passed = lhs <= rhs + settings.descent_rtol * (1.0 + abs(lhs) + abs(rhs))
        return DescentReport(
            lhs=lhs,
            rhs=rhs,
            slack=rhs - lhs,
            mode="exact",
            samples=len(pairs),
            standard_error=0.0,
            a=a,
            v=v,
            extra=extra,
            passed=bool(passed),
        )

    resamples = settings.descent_resamples if resamples is None else resamples
    rng = np.random.default_rng(seed)
    draws_i = rng.integers(oracle.N, size=resamples)
    draws_j = rng.integers(m, size=resamples)
    pairs = np.array([sample(int(i), int(j)) for i, j in zip(draws_i, draws_j)])
    difference = pairs[:, 0] - pairs[:, 1]
    standard_error = float(difference.std(ddof=1) / np.sqrt(resamples)) if resamples > 1 else float("inf")
    lhs, rhs = float(pairs[:, 0].mean()), float(pairs[:, 1].mean()) + v + extra
    passed = lhs <= rhs + 3.0 * standard_error
    logger.debug("monte carlo descent check: lhs=%.6g rhs=%.6g se=%.3g", lhs, rhs, standard_error)
    return DescentReport(
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        mode="monte_carlo",
        samples=resamples,
        standard_error=standard_error,
        a=a,
        v=v,
        extra=extra,
        passed=bool(passed),
    )
