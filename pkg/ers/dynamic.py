"""
Dynamic ensemble rejection sampling on state-space / Feynman-Kac models.

A trial samples an ensemble grid, runs the forward filter, draws a path
backwards, bounds Ẑ by the bounding recursion and accepts the path with
probability Ẑ/Z̄. Independent trials can be spread over worker threads;
trial ``i`` always runs on stream ``base.child(i)`` and results are
collected in index order, so the outcome does not depend on scheduling.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np
from tqdm import tqdm

from .ensemble_hmm import (
    EnsembleGrid,
    ForwardFilterResult,
    ProposalDraw,
    BoundResult,
    acceptance_log_ratio,
    backward_sample,
    bounding_recursion,
    forward_filter,
    sample_grid,
)
from .errors import BoundUnavailable, ContractViolation
from .model import FeynmanKacModel
from .rng import ACCEPT, GRID, RngStream
from .sampling import Estimate

logger = logging.getLogger(__name__)

T_ = TypeVar("T_")


@dataclass(frozen=True)
class TrialRecord:
    """Per-trial diagnostics. Degenerate trials have ratio 0 and log_z_bar NaN."""

    log_z_hat: float
    log_z_bar: float
    ratio: float
    accepted: bool
    degenerate: bool
    stream_id: int


@dataclass
class EnsembleTrial:
    """Everything one trial produced, kept together so indices stay coherent."""

    grid: EnsembleGrid
    filters: ForwardFilterResult
    draw: Optional[ProposalDraw]
    bound: Optional[BoundResult]
    record: TrialRecord


@dataclass
class SampleOutcome:
    path: Optional[np.ndarray]
    trials: int
    records: List[TrialRecord] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.path is None


@dataclass(frozen=True)
class AcceptanceEstimate:
    """Both estimators of p_ERS: mean of Ẑ/Z̄ (primary) and acceptance frequency."""

    ratio: Estimate
    frequency: Estimate
    degenerate_trials: int
    records: Tuple[TrialRecord, ...] = ()

    @property
    def mean(self) -> float:
        return self.ratio.mean

    @property
    def std_error(self) -> float:
        return self.ratio.std_error


@dataclass(frozen=True)
class TheoryBounds:
    delta: float
    lower_bound_pers: float
    n: int
    horizon: int


def _check_n(n: int) -> None:
    if n < 1:
        raise ContractViolation(f"ensemble size must be >= 1, got {n}")


def run_ensemble_trial(model: FeynmanKacModel, n: int, rng: RngStream) -> EnsembleTrial:
    """Run one full trial and keep its grid, filters, draw and bound."""
    _check_n(n)
    grid = sample_grid(model, n, rng)
    filters = forward_filter(model, grid)
    if filters.degenerate:
        record = TrialRecord(log_z_hat=-math.inf, log_z_bar=math.nan, ratio=0.0,
                             accepted=False, degenerate=True, stream_id=rng.index)
        return EnsembleTrial(grid, filters, None, None, record)

    draw = backward_sample(model, grid, filters, rng)
    bound = bounding_recursion(model, grid, draw)
    log_ratio = acceptance_log_ratio(filters, bound)
    accepted = math.log(rng.uniform(ACCEPT)) <= log_ratio
    record = TrialRecord(log_z_hat=filters.log_z_hat, log_z_bar=bound.log_z_bar,
                         ratio=math.exp(log_ratio), accepted=accepted,
                         degenerate=False, stream_id=rng.index)
    return EnsembleTrial(grid, filters, draw, bound, record)


def ers_trial(model: FeynmanKacModel, n: int, rng: RngStream) -> Tuple[Optional[np.ndarray], TrialRecord]:
    """One ERS trial; the path is returned only when accepted."""
    trial = run_ensemble_trial(model, n, rng)
    path = trial.draw.path if trial.record.accepted else None
    return path, trial.record


def ers_sample(model: FeynmanKacModel, n: int, rng: RngStream,
               max_trials: Optional[int] = None) -> SampleOutcome:
    """Repeat ERS trials on ``rng.child(k)`` until acceptance or until ``max_trials`` runs out."""
    _check_n(n)
    outcome = SampleOutcome(path=None, trials=0)
    while max_trials is None or outcome.trials < max_trials:
        path, record = ers_trial(model, n, rng.child(outcome.trials))
        outcome.trials += 1
        outcome.records.append(record)
        if record.accepted:
            outcome.path = path
            return outcome
    logger.debug(f"{model.name}: sampling budget of {max_trials} trials exhausted")
    return outcome


def standard_rs_trial(model: FeynmanKacModel, rng: RngStream) -> Tuple[Optional[np.ndarray], float]:
    """Plain rejection sampling with the product proposal prod_t q_t.

    Uses the same purpose keys as ``ers_trial`` with N=1, so on a shared
    stream both propose the same path and test it against the same uniform.
    """
    horizon = model.horizon
    path = np.array([model.sample_proposal(t, rng.generator(GRID, t), 1)[0]
                     for t in range(1, horizon + 1)])
    log_weights = np.empty(horizon)
    log_bounds = np.empty(horizon)
    log_weights[0] = model.log_initial(path[:1])[0]
    log_bounds[0] = model.log_bound_w1()
    for t in range(2, horizon + 1):
        log_weights[t - 1] = model.log_transition(t, path[t - 2:t - 1], path[t - 1:t])[0]
        log_bounds[t - 1] = model.log_bound_wt(t)
    log_ratio = min(0.0, float(np.sum(log_weights)) - float(np.sum(log_bounds)))
    accepted = math.log(rng.uniform(ACCEPT)) <= log_ratio
    return (path if accepted else None), log_ratio


def run_trials(fn: Callable[[int], T_], count: int, workers: int = 1,
               progress: bool = False, description: str = "trials") -> List[T_]:
    """Evaluate ``fn(i)`` for i in range(count), results in index order."""
    bar = tqdm(total=count, desc=description, disable=not progress, leave=False)
    try:
        if workers <= 1:
            results = []
            for i in range(count):
                results.append(fn(i))
                bar.update()
            return results
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = []
            for result in pool.map(fn, range(count)):
                results.append(result)
                bar.update()
            return results
    finally:
        bar.close()


def estimate_acceptance(model: FeynmanKacModel, n: int, num_samples: int, rng: RngStream,
                        workers: int = 1, progress: bool = False) -> AcceptanceEstimate:
    """Estimate p_ERS = E[Ẑ/Z̄] from ``num_samples`` independent trials.

    The mean of the ratios is the primary estimator; the empirical acceptance
    frequency (degenerate trials counted as rejections) is reported alongside.
    """
    _check_n(n)
    if num_samples < 2:
        raise ContractViolation(f"num_samples must be >= 2, got {num_samples}")

    def one(i):
        return ers_trial(model, n, rng.child(i))[1]

    records = run_trials(one, num_samples, workers=workers, progress=progress,
                         description=f"{model.name} N={n}")
    estimate = AcceptanceEstimate(
        ratio=Estimate.from_values(r.ratio for r in records),
        frequency=Estimate.from_values(float(r.accepted) for r in records),
        degenerate_trials=sum(r.degenerate for r in records),
        records=tuple(records),
    )
    logger.debug(f"{model.name}: N={n} p_ERS={estimate.mean:.4f} ± {estimate.std_error:.4f}")
    return estimate


# -- theory ------------------------------------------------------------------

def theory_bounds(model: FeynmanKacModel, n: int) -> TheoryBounds:
    """Lower bound (1 + (δ-1)/N)^(-T) on p_ERS with δ = (w̄/w̲)²."""
    _check_n(n)
    lower = model.lower_weight_bound
    if lower is None or not lower > 0.0:
        raise BoundUnavailable(f"model {model.name!r} declares no positive lower weight bound")
    upper = max([model.bound_w1] + [model.bound_wt(t) for t in range(2, model.horizon + 1)])
    delta = max((upper / lower) ** 2, 1.0)
    log_bound = -model.horizon * math.log1p((delta - 1.0) / n)
    return TheoryBounds(delta=delta, lower_bound_pers=math.exp(log_bound), n=n, horizon=model.horizon)


def theory_limit(beta: float, delta: float) -> float:
    """Limit of the bound for N = ceil(beta T) as T grows: exp{(1 - δ)/β}."""
    return math.exp((1.0 - delta) / beta)


def ensemble_size(beta: float, horizon: int) -> int:
    """N = ceil(beta T)."""
    if beta <= 0:
        raise ContractViolation(f"beta must be positive, got {beta}")
    return max(1, math.ceil(beta * horizon))


def crude_lower_bound(n: int, horizon: int, log_z: float, log_bound_product: float) -> float:
    """Z / ((1 - 1/N)^T Z + (1 - (1 - 1/N)^T) prod_t w̄_t), a lower bound on p_ERS."""
    _check_n(n)
    keep = (1.0 - 1.0 / n) ** horizon
    return 1.0 / (keep + (1.0 - keep) * math.exp(log_bound_product - log_z))


def factorized_rs_acceptance(p_a: float, horizon: int) -> float:
    """p_RS = p_A^T for a target that factorises over time."""
    return p_a ** horizon


def factorized_lower_bound(p_a: float, n: int, horizon: int) -> float:
    """(1 + (1/p_A - 1)/N)^(-T) for a target that factorises over time."""
    _check_n(n)
    return math.exp(-horizon * math.log1p((1.0 / p_a - 1.0) / n))


def factorized_limit(beta: float, p_a: float) -> float:
    return math.exp((1.0 - 1.0 / p_a) / beta)


def log_bound_product(model: FeynmanKacModel) -> float:
    """log prod_t w̄_t including w̄_1."""
    return model.log_bound_w1() + sum(model.log_bound_wt(t) for t in range(2, model.horizon + 1))

