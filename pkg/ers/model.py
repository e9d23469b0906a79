"""
Model abstraction shared by every sampler.

A ``FeynmanKacModel`` bundles, for one model instance of horizon T, the
log incremental weights, the proposal samplers q_t and the weight bounds.
All callables are vectorised over numpy arrays and take 1-based time
indices. Observations, when a model has any, are captured inside the
weight closures; samplers never see them.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import BoundViolation, ContractViolation

logger = logging.getLogger(__name__)

# Slack for comparing a log weight against its log bound; absorbs rounding
# differences between two evaluations of the same closed-form expression.
LOG_BOUND_SLACK = 1e-12

ArrayFn = Callable[..., np.ndarray]


class WeightCounter:
    """Thread-safe tally of incremental weight evaluations."""

    def __init__(self):
        self._lock = threading.Lock()
        self.initial = 0
        self.transition = 0

    def add(self, initial: int = 0, transition: int = 0) -> None:
        with self._lock:
            self.initial += initial
            self.transition += transition

    @property
    def total(self) -> int:
        return self.initial + self.transition

    def reset(self) -> None:
        with self._lock:
            self.initial = 0
            self.transition = 0


@dataclass(frozen=True)
class FeynmanKacModel:
    """Target/proposal bundle consumed by the ensemble samplers.

    Attributes:
        name: Short model identifier used in logs and reports.
        horizon: Number of time steps T.
        log_initial_weight: x -> log w_1(x).
        log_transition_weight: (t, x_prev, x) -> log w_t(x_prev, x), 2 <= t <= T,
            broadcasting over ``x_prev`` and ``x``.
        proposal_sampler: (t, generator, size) -> ``size`` draws from q_t.
        bound_w1: w̄_1.
        bound_wt: t -> w̄_t.
        log_partial_bound_left: optional (t, x_prev) -> log w̄_t¹(x_prev).
        log_partial_bound_right: optional (t, x) -> log w̄_t²(x).
        proposal_log_density: optional (t, x) -> log q_t(x); needed by the grid oracle.
        oracle_interval: optional t -> (low, high) window holding the
            posterior mass at time t; needed by the grid oracle.
        finite_states: support values when the state space is finite.
        lower_weight_bound: optional global w̲ with w̲ <= every incremental weight.
        check_bounds: assert every evaluated weight against its bounds.
        counter: optional evaluation counter.
    """

    name: str
    horizon: int
    log_initial_weight: ArrayFn
    log_transition_weight: ArrayFn
    proposal_sampler: ArrayFn
    bound_w1: float
    bound_wt: Callable[[int], float]
    log_partial_bound_left: Optional[ArrayFn] = None
    log_partial_bound_right: Optional[ArrayFn] = None
    proposal_log_density: Optional[ArrayFn] = None
    oracle_interval: Optional[Callable[[int], Tuple[float, float]]] = None
    finite_states: Optional[np.ndarray] = None
    lower_weight_bound: Optional[float] = None
    check_bounds: bool = False
    counter: Optional[WeightCounter] = field(default=None, compare=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise ContractViolation(f"horizon must be >= 1, got {self.horizon}")
        if not (0.0 < self.bound_w1 < math.inf):
            raise ContractViolation(f"bound_w1 must be finite and positive, got {self.bound_w1}")
        for t in range(2, self.horizon + 1):
            bound = self.bound_wt(t)
            if not (0.0 < bound < math.inf):
                raise ContractViolation(f"bound_wt({t}) must be finite and positive, got {bound}")

    # -- variants -----------------------------------------------------------

    def with_bound_checks(self, enabled: bool = True) -> FeynmanKacModel:
        return replace(self, check_bounds=enabled)

    def with_counter(self, counter: Optional[WeightCounter] = None) -> Tuple[FeynmanKacModel, WeightCounter]:
        counter = counter or WeightCounter()
        return replace(self, counter=counter), counter

    # -- bounds -------------------------------------------------------------

    def check_time(self, t: int) -> None:
        if not 2 <= t <= self.horizon:
            raise ContractViolation(f"time index {t} outside [2, {self.horizon}]")

    def log_bound_w1(self) -> float:
        return math.log(self.bound_w1)

    def log_bound_wt(self, t: int) -> float:
        self.check_time(t)
        return math.log(self.bound_wt(t))

    def log_bound_left(self, t: int, x_prev: np.ndarray) -> np.ndarray:
        """log w̄_t¹(x_prev), falling back to the constant log w̄_t."""
        self.check_time(t)
        x_prev = np.asarray(x_prev, dtype=float)
        if self.log_partial_bound_left is None:
            return np.full(x_prev.shape, self.log_bound_wt(t))
        return np.minimum(self.log_partial_bound_left(t, x_prev), self.log_bound_wt(t))

    def log_bound_right(self, t: int, x: np.ndarray) -> np.ndarray:
        """log w̄_t²(x), falling back to the constant log w̄_t."""
        self.check_time(t)
        x = np.asarray(x, dtype=float)
        if self.log_partial_bound_right is None:
            return np.full(x.shape, self.log_bound_wt(t))
        return np.minimum(self.log_partial_bound_right(t, x), self.log_bound_wt(t))

    # -- weights ------------------------------------------------------------

    def log_initial(self, x: np.ndarray) -> np.ndarray:
        """log w_1(x) with counting and optional bound checks."""
        x = np.asarray(x, dtype=float)
        log_w = np.asarray(self.log_initial_weight(x), dtype=float)
        if self.counter is not None:
            self.counter.add(initial=log_w.size)
        if self.check_bounds:
            _assert_dominated(log_w, self.log_bound_w1(), f"{self.name}: w_1")
        return log_w

    def log_transition(self, t: int, x_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
        """log w_t(x_prev, x) with counting and optional bound checks."""
        self.check_time(t)
        x_prev = np.asarray(x_prev, dtype=float)
        x = np.asarray(x, dtype=float)
        log_w = np.asarray(self.log_transition_weight(t, x_prev, x), dtype=float)
        if self.counter is not None:
            self.counter.add(transition=log_w.size)
        if self.check_bounds:
            label = f"{self.name}: w_{t}"
            _assert_dominated(log_w, self.log_bound_wt(t), label)
            _assert_dominated(log_w, self.log_bound_left(t, x_prev), label + " (left)")
            _assert_dominated(log_w, self.log_bound_right(t, x), label + " (right)")
        return log_w

    def sample_proposal(self, t: int, generator: np.random.Generator, size: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise ContractViolation(f"time index {t} outside [1, {self.horizon}]")
        return np.asarray(self.proposal_sampler(t, generator, size), dtype=float).reshape(size)


@dataclass(frozen=True)
class StaticTarget:
    """Static target γ through its proposal q and bounded weight w = γ/q."""

    proposal_sampler: Callable[[np.random.Generator, int], np.ndarray]
    log_weight: ArrayFn
    bound: float
    check_bounds: bool = False

    def __post_init__(self):
        if not (0.0 < self.bound < math.inf):
            raise ContractViolation(f"static bound must be finite and positive, got {self.bound}")

    def weights(self, x: np.ndarray) -> np.ndarray:
        w = np.exp(np.asarray(self.log_weight(np.asarray(x)), dtype=float))
        if self.check_bounds and np.any(w > self.bound):
            raise BoundViolation(f"static weight {w.max()} exceeds bound {self.bound}")
        return w


@dataclass(frozen=True)
class PathWeight:
    weight: float
    log_weight: float


def _assert_dominated(log_w: np.ndarray, log_bound, label: str) -> None:
    excess = np.asarray(log_w) - np.asarray(log_bound)
    if np.any(excess > LOG_BOUND_SLACK):
        worst = float(np.max(excess))
        raise BoundViolation(f"{label} exceeds its bound by {worst:.3e} in log space")


def evaluate_path_weight(model: FeynmanKacModel, path: Sequence[float]) -> PathWeight:
    """w(x_{1:T}) = w_1(x_1) * prod_t w_t(x_{t-1}, x_t), in linear and log form.

    A zero weight comes back as ``weight == 0.0`` and ``log_weight == -inf``.
    """
    path = np.asarray(path, dtype=float)
    if path.shape != (model.horizon,):
        raise ContractViolation(f"path must have length {model.horizon}, got shape {path.shape}")
    log_weight = float(model.log_initial(path[:1])[0])
    for t in range(2, model.horizon + 1):
        if log_weight == -math.inf:
            break
        log_weight += float(model.log_transition(t, path[t - 2:t - 1], path[t - 1:t])[0])
    return PathWeight(weight=math.exp(log_weight), log_weight=log_weight)


def effective_partial_bounds(model: FeynmanKacModel, t: int) -> Tuple[ArrayFn, ArrayFn]:
    """Linear-scale partial bound functions (w̄_t¹, w̄_t²) at time ``t``.

    When the model supplies none, both are the constant w̄_t.
    """
    model.check_time(t)

    def left(x_prev):
        return np.exp(model.log_bound_left(t, x_prev))

    def right(x):
        return np.exp(model.log_bound_right(t, x))

    return left, right
