"""
Static ensemble rejection sampling and the plain rejection sampling baseline.

Weights stay in linear space here: each one is bounded by w̄ and the
ensemble is moderate, so nothing underflows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ContractViolation
from .model import StaticTarget
from .rng import ACCEPT, GRID, SELECT, RngStream
from .sampling import Estimate, select_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StaticTrialRecord:
    """Diagnostics of one static trial.

    ``selected_index`` is None (and ``degenerate`` True) when every weight of
    the ensemble was zero; such a trial counts as a rejection.
    """

    z_hat: float
    z_bar: float
    ratio: float
    accepted: bool
    selected_index: Optional[int]
    degenerate: bool = False


@dataclass
class StaticSampleOutcome:
    state: Optional[float]
    trials: int
    records: List[StaticTrialRecord] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.state is None

    @property
    def degenerate_trials(self) -> int:
        return sum(record.degenerate for record in self.records)


@dataclass
class RejectionOutcome:
    state: Optional[float]
    trials: int

    @property
    def exhausted(self) -> bool:
        return self.state is None


def _check_n(n: int) -> None:
    if n < 1:
        raise ContractViolation(f"ensemble size must be >= 1, got {n}")


def static_ers_trial(target: StaticTarget, n: int, rng: RngStream) -> Tuple[Optional[float], StaticTrialRecord]:
    """One pass of static ERS: propose an ensemble, select, accept with Ẑ/Z̄.

    Returns the selected state (whether or not accepted) and the record.
    """
    _check_n(n)
    states = np.asarray(target.proposal_sampler(rng.generator(GRID), n), dtype=float).reshape(n)
    weights = target.weights(states)
    total = float(weights.sum())
    if total <= 0.0:
        return None, StaticTrialRecord(z_hat=0.0, z_bar=target.bound / n, ratio=0.0,
                                       accepted=False, selected_index=None, degenerate=True)

    k = select_index(weights, rng.uniform(SELECT))
    z_hat = total / n
    z_bar = z_hat + (target.bound - weights[k]) / n
    ratio = min(z_hat / z_bar, 1.0)
    accepted = rng.uniform(ACCEPT) <= ratio
    record = StaticTrialRecord(z_hat=z_hat, z_bar=z_bar, ratio=ratio,
                               accepted=accepted, selected_index=k)
    return float(states[k]), record


def static_ers_sample(target: StaticTarget, n: int, rng: RngStream,
                      max_trials: Optional[int] = None) -> StaticSampleOutcome:
    """Repeat static ERS trials until one is accepted or ``max_trials`` runs out."""
    _check_n(n)
    outcome = StaticSampleOutcome(state=None, trials=0)
    while max_trials is None or outcome.trials < max_trials:
        state, record = static_ers_trial(target, n, rng.child(outcome.trials))
        outcome.trials += 1
        outcome.records.append(record)
        if record.accepted:
            outcome.state = state
            return outcome
    logger.debug(f"static ERS exhausted after {outcome.trials} trials")
    return outcome


def static_rs_trial(target: StaticTarget, rng: RngStream) -> Tuple[float, bool]:
    """One von Neumann trial; draws from the same purpose keys as an N=1 ERS trial."""
    state = float(np.asarray(target.proposal_sampler(rng.generator(GRID), 1), dtype=float).reshape(1)[0])
    weight = float(target.weights(np.array([state]))[0])
    return state, rng.uniform(ACCEPT) <= weight / target.bound


def static_rs_sample(target: StaticTarget, rng: RngStream,
                     max_trials: Optional[int] = None) -> RejectionOutcome:
    """Plain rejection sampling: draw X ~ q, accept with probability w(X)/w̄."""
    trials = 0
    while max_trials is None or trials < max_trials:
        state, accepted = static_rs_trial(target, rng.child(trials))
        trials += 1
        if accepted:
            return RejectionOutcome(state=state, trials=trials)
    return RejectionOutcome(state=None, trials=trials)


def estimate_static_acceptance(target: StaticTarget, n: int, num_samples: int,
                               rng: RngStream) -> Estimate:
    """Monte Carlo estimate of p_ERS = E[Ẑ/Z̄] over independent static trials."""
    _check_n(n)
    if num_samples < 2:
        raise ContractViolation(f"num_samples must be >= 2, got {num_samples}")
    ratios = [static_ers_trial(target, n, rng.child(i))[1].ratio for i in range(num_samples)]
    return Estimate.from_values(ratios)


def ers_lower_bound(p_rs: float, n: int) -> float:
    """Lower bound N p_RS / (1 + (N - 1) p_RS) on the static ERS acceptance probability."""
    return n * p_rs / (1.0 + (n - 1) * p_rs)


def independent_rs_acceptance(p_rs: float, n: int) -> float:
    """Probability that at least one of N independent RS proposals is accepted."""
    return 1.0 - (1.0 - p_rs) ** n


def two_point_target(gamma_a: float = 1.0, gamma_b: float = 0.5,
                     check_bounds: bool = False) -> StaticTarget:
    """Target on {0, 1} with γ(0) = gamma_a, γ(1) = gamma_b and a uniform proposal."""
    if gamma_a < 0 or gamma_b < 0 or gamma_a + gamma_b <= 0:
        raise ContractViolation("two-point masses must be non-negative with a positive total")
    with np.errstate(divide="ignore"):
        log_gamma = np.log(np.array([gamma_a, gamma_b], dtype=float))
    log_q = np.log(0.5)

    def log_density(x):
        return log_gamma[np.asarray(x, dtype=int)]

    def sampler(generator, size):
        return generator.integers(0, 2, size=size).astype(float)

    def log_weight(x):
        return log_density(x) - log_q

    return StaticTarget(
        proposal_sampler=sampler,
        log_weight=log_weight,
        bound=2.0 * max(gamma_a, gamma_b),
        check_bounds=check_bounds,
    )
