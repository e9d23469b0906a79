"""
Finite-state test model with tabulated weights.

States are the integers 0..M-1 (stored as floats in the grid), q_t is
uniform on them and the incremental weights are read from tables. This is
the substrate for the exact oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ContractViolation
from ..model import FeynmanKacModel


@dataclass(frozen=True, eq=False)
class FiniteStateSpec:
    """Weight tables for a finite-state model.

    ``transition_weights`` is either one M x M table shared by every step or
    a (T-1) x M x M stack; entry [j, i] is w_t(j, i).
    """

    initial_weights: np.ndarray
    transition_weights: np.ndarray
    horizon: int

    def __post_init__(self):
        initial = np.asarray(self.initial_weights, dtype=float)
        transition = np.asarray(self.transition_weights, dtype=float)
        m = initial.shape[0] if initial.ndim == 1 else 0
        if m < 1:
            raise ContractViolation("initial_weights must be a non-empty vector")
        if self.horizon < 1:
            raise ContractViolation(f"horizon must be >= 1, got {self.horizon}")
        if transition.shape == (m, m):
            transition = np.broadcast_to(transition, (max(self.horizon - 1, 0), m, m)).copy()
        if transition.shape != (max(self.horizon - 1, 0), m, m):
            raise ContractViolation(
                f"transition_weights must be ({m}, {m}) or ({self.horizon - 1}, {m}, {m}), "
                f"got {np.shape(self.transition_weights)}")
        if np.any(initial < 0) or np.any(transition < 0) or not np.all(np.isfinite(transition)):
            raise ContractViolation("weight tables must be finite and non-negative")
        if initial.max() <= 0 or any(table.max() <= 0 for table in transition):
            raise ContractViolation("every weight table needs a positive entry")
        object.__setattr__(self, "initial_weights", initial)
        object.__setattr__(self, "transition_weights", transition)

    @property
    def state_count(self) -> int:
        return self.initial_weights.shape[0]

    def table(self, t: int) -> np.ndarray:
        """Transition table for 1-based time t >= 2."""
        return self.transition_weights[t - 2]


def _log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(values)


def finite_state_model(spec: FiniteStateSpec, check_bounds: bool = False) -> FeynmanKacModel:
    m = spec.state_count
    log_initial = _log(spec.initial_weights)
    log_tables = _log(spec.transition_weights)
    log_row_max = log_tables.max(axis=2)
    log_col_max = log_tables.max(axis=1)
    log_m = math.log(m)

    def index(x):
        return np.asarray(x, dtype=float).astype(int)

    def log_transition_weight(t, x_prev, x):
        return log_tables[t - 2][index(x_prev), index(x)]

    def proposal_sampler(t, generator, size):
        return generator.integers(0, m, size=size).astype(float)

    def proposal_log_density(t, x):
        return np.full(np.shape(x), -log_m)

    entries = np.concatenate([spec.initial_weights, spec.transition_weights.ravel()])
    lower: Optional[float] = float(entries.min()) if entries.min() > 0 else None

    return FeynmanKacModel(
        name="finite-state",
        horizon=spec.horizon,
        log_initial_weight=lambda x: log_initial[index(x)],
        log_transition_weight=log_transition_weight,
        proposal_sampler=proposal_sampler,
        bound_w1=float(spec.initial_weights.max()),
        bound_wt=lambda t: float(spec.table(t).max()),
        log_partial_bound_left=lambda t, x_prev: log_row_max[t - 2][index(x_prev)],
        log_partial_bound_right=lambda t, x: log_col_max[t - 2][index(x)],
        proposal_log_density=proposal_log_density,
        finite_states=np.arange(m, dtype=float),
        lower_weight_bound=lower,
        check_bounds=check_bounds,
    )


def random_finite_state_spec(state_count: int, horizon: int, seed: int = 0,
                             low: float = 0.05, high: float = 1.0,
                             time_varying: bool = False) -> FiniteStateSpec:
    """Tables with i.i.d. uniform(low, high) entries from a seeded generator."""
    generator = np.random.default_rng(seed)
    steps = max(horizon - 1, 0)
    shape = (steps, state_count, state_count) if time_varying else (state_count, state_count)
    return FiniteStateSpec(
        initial_weights=generator.uniform(low, high, size=state_count),
        transition_weights=generator.uniform(low, high, size=shape),
        horizon=horizon,
    )


def factorized_spec(weights, horizon: int) -> FiniteStateSpec:
    """Model whose weight ignores the previous state: w_t(x_prev, x) = weights[x].

    The target then factorises over time and p_A = mean(weights) / max(weights).
    """
    weights = np.asarray(weights, dtype=float)
    m = weights.shape[0]
    return FiniteStateSpec(
        initial_weights=weights,
        transition_weights=np.tile(weights, (m, 1)),
        horizon=horizon,
    )
