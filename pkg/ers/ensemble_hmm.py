"""
Embedded HMM kernel: grid sampling, forward filtering, backward path
sampling and the bounding recursion.

The N proposal draws at each time step form the state space of a finite
HMM. The forward pass runs on normalised filters kept in log space and
every per-step sum is max-factored, so horizons of several hundred steps
neither overflow nor underflow. Matrices of incremental weights are
indexed ``[j, i]`` = (ancestor at t-1, state at t).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation
from .model import FeynmanKacModel
from .rng import GRID, SELECT, RngStream
from .sampling import select_index, select_log_index

logger = logging.getLogger(__name__)

# Scaled column sums below this are redone in log space.
_UNDERFLOW_GUARD = 1e-200


@dataclass(frozen=True)
class EnsembleGrid:
    """N x T matrix of proposal states; column t holds N i.i.d. draws from q_t."""

    states: np.ndarray

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[1]

    def column(self, t: int) -> np.ndarray:
        """States at 1-based time ``t``."""
        return self.states[:, t - 1]


@dataclass(frozen=True)
class ForwardFilterResult:
    """Normalised filters of the embedded HMM and its log normalising constant.

    ``degenerate_step`` is the 1-based time at which the incoming mass
    vanished, in which case the later filter columns are zero and both log
    quantities are -inf.
    """

    log_filters: np.ndarray
    log_increments: np.ndarray
    log_norm: float
    log_z_hat: float
    degenerate_step: Optional[int] = None

    @property
    def filters(self) -> np.ndarray:
        return np.exp(self.log_filters)

    @property
    def degenerate(self) -> bool:
        return self.degenerate_step is not None


@dataclass(frozen=True)
class ProposalDraw:
    """A path drawn from the embedded HMM posterior; ``indices`` are 0-based."""

    path: np.ndarray
    indices: np.ndarray
    log_z_hat: float


@dataclass(frozen=True)
class BoundResult:
    log_z_bar: float
    log_increments: np.ndarray


def _check_grid(model: FeynmanKacModel, grid: EnsembleGrid) -> None:
    if grid.horizon != model.horizon:
        raise ContractViolation(
            f"grid horizon {grid.horizon} does not match model horizon {model.horizon}")


def _normalize(log_incoming: np.ndarray) -> Tuple[np.ndarray, float]:
    with np.errstate(divide="ignore"):
        log_increment = float(logsumexp(log_incoming))
    if not math.isfinite(log_increment):
        return np.full(log_incoming.shape, -math.inf), -math.inf
    return log_incoming - log_increment, log_increment


def _advance(log_filter_prev: np.ndarray, log_w: np.ndarray) -> Tuple[np.ndarray, float]:
    """One recursion step: incoming[i] = sum_j filter[j] * w[j, i], then normalise.

    The filter is scaled by its maximum and each weight column by its own,
    so the sum is a single matrix-vector product on values in [0, 1].
    Columns whose scaled sum falls below ``_UNDERFLOW_GUARD`` are recomputed
    with ``logsumexp``.
    """
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        column_max = log_w.max(axis=0)
        live = np.isfinite(column_max)
        shift = np.where(live, column_max, 0.0)
        filter_max = log_filter_prev.max()
        weights = log_w - shift
        np.exp(weights, out=weights)
        sums = np.exp(log_filter_prev - filter_max) @ weights
        log_incoming = np.log(sums) + shift + filter_max

        weak = live & (sums < _UNDERFLOW_GUARD)
        if np.any(weak):
            log_incoming[weak] = logsumexp(log_filter_prev[:, None] + log_w[:, weak], axis=0)
    return _normalize(log_incoming)


def _run_recursion(first: np.ndarray, step, n: int, horizon: int):
    """Shared driver of the forward and bounding recursions.

    ``step(t)`` returns the N x N log weight matrix for time t.
    """
    log_filters = np.full((n, horizon), -math.inf)
    log_increments = np.full(horizon, -math.inf)
    log_filters[:, 0], log_increments[0] = _normalize(first)
    if not math.isfinite(log_increments[0]):
        return log_filters, log_increments, 1
    for t in range(2, horizon + 1):
        log_filters[:, t - 1], log_increments[t - 1] = _advance(log_filters[:, t - 2], step(t))
        if not math.isfinite(log_increments[t - 1]):
            return log_filters, log_increments, t
    return log_filters, log_increments, None


def sample_grid(model: FeynmanKacModel, n: int, rng: RngStream) -> EnsembleGrid:
    """Draw N states from each q_t, one generator per column."""
    if n < 1:
        raise ContractViolation(f"ensemble size must be >= 1, got {n}")
    states = np.empty((n, model.horizon))
    for t in range(1, model.horizon + 1):
        states[:, t - 1] = model.sample_proposal(t, rng.generator(GRID, t), n)
    return EnsembleGrid(states=states)


def forward_filter(model: FeynmanKacModel, grid: EnsembleGrid) -> ForwardFilterResult:
    """Forward HMM recursion on the grid; costs N + (T-1) N² weight evaluations."""
    _check_grid(model, grid)
    n, horizon = grid.n, grid.horizon

    def step(t):
        return model.log_transition(t, grid.column(t - 1)[:, None], grid.column(t)[None, :])

    log_filters, log_increments, degenerate_step = _run_recursion(
        model.log_initial(grid.column(1)), step, n, horizon)
    if degenerate_step is not None:
        logger.debug(f"{model.name}: zero incoming mass at step {degenerate_step}")
        return ForwardFilterResult(log_filters, log_increments, -math.inf, -math.inf, degenerate_step)

    log_norm = float(np.sum(log_increments))
    return ForwardFilterResult(
        log_filters=log_filters,
        log_increments=log_increments,
        log_norm=log_norm,
        log_z_hat=log_norm - horizon * math.log(n),
    )


def backward_sample(model: FeynmanKacModel, grid: EnsembleGrid, filters: ForwardFilterResult,
                    rng: RngStream) -> ProposalDraw:
    """Draw K_{1:T} backwards: K_T from the last filter, then
    K_t with probability proportional to filter_t[j] * w_{t+1}(X_t^j, X_{t+1}^{K_{t+1}}).
    """
    _check_grid(model, grid)
    if filters.degenerate:
        raise ContractViolation("cannot sample a path from a degenerate forward pass")
    horizon = grid.horizon
    uniforms = 1.0 - rng.generator(SELECT).random(horizon)

    indices = np.empty(horizon, dtype=int)
    indices[-1] = select_index(np.exp(filters.log_filters[:, -1]), uniforms[0])
    for t in range(horizon - 1, 0, -1):
        target = grid.states[indices[t], t:t + 1]
        log_w = model.log_transition(t + 1, grid.column(t), target)
        indices[t - 1] = select_log_index(filters.log_filters[:, t - 1] + log_w, uniforms[horizon - t])

    path = grid.states[indices, np.arange(horizon)]
    return ProposalDraw(path=path, indices=indices, log_z_hat=filters.log_z_hat)


def bounding_recursion(model: FeynmanKacModel, grid: EnsembleGrid, draw: ProposalDraw) -> BoundResult:
    """Upper bound Z̄ on Ẑ: every weight factor touching a selected index is
    replaced by its bound (w̄_1, w̄_t¹, w̄_t², or w̄_t when both ends are selected).
    """
    _check_grid(model, grid)
    n, horizon = grid.n, grid.horizon
    k = draw.indices

    first = model.log_initial(grid.column(1)).copy()
    first[k[0]] = model.log_bound_w1()

    def step(t):
        x_prev, x = grid.column(t - 1), grid.column(t)
        log_w = model.log_transition(t, x_prev[:, None], x[None, :])
        if not (log_w.flags.writeable and log_w.flags.owndata):
            log_w = log_w.copy()
        log_w[k[t - 2], :] = model.log_bound_right(t, x)
        log_w[:, k[t - 1]] = model.log_bound_left(t, x_prev)
        log_w[k[t - 2], k[t - 1]] = model.log_bound_wt(t)
        return log_w

    _, log_increments, degenerate_step = _run_recursion(first, step, n, horizon)
    if degenerate_step is not None:
        # Only reachable when the draw did not come from a proper forward pass.
        raise ContractViolation(f"bounding recursion lost all mass at step {degenerate_step}")
    return BoundResult(
        log_z_bar=float(np.sum(log_increments)) - horizon * math.log(n),
        log_increments=log_increments,
    )


def acceptance_log_ratio(filters: ForwardFilterResult, bound: BoundResult) -> float:
    """log(Ẑ / Z̄), never above zero."""
    if filters.degenerate:
        return -math.inf
    return min(0.0, filters.log_z_hat - bound.log_z_bar)
