"""
Random walk conditioned to stay inside an absorbing set S = [low, high].

Prior mu = U(S), transition f(x'|x) = N(x'; psi(x), sigma²) with an affine
drift psi(x) = slope * x + offset, potential G_t = 1_S, proposal
q_t = U(S). Hence w_1 = 1 on S and w_t(x_prev, x) = |S| f(x | x_prev) 1_S(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..model import FeynmanKacModel
from .gaussian import GaussianLogDensity


@dataclass(frozen=True)
class ConditionedRandomWalkSpec:
    horizon: int
    support_low: float = 0.0
    support_high: float = 1.0
    sigma: float = 0.2
    drift_slope: float = 1.0
    drift_offset: float = 0.0

    def __post_init__(self):
        if not self.support_low < self.support_high:
            raise ContractViolation("support_low must be below support_high")
        if not self.sigma > 0:
            raise ContractViolation(f"sigma must be positive, got {self.sigma}")
        if self.horizon < 1:
            raise ContractViolation(f"horizon must be >= 1, got {self.horizon}")

    @property
    def width(self) -> float:
        return self.support_high - self.support_low

    def drift(self, x):
        return self.drift_slope * np.asarray(x, dtype=float) + self.drift_offset

    def drift_image(self):
        """psi(S) as an interval."""
        ends = self.drift(np.array([self.support_low, self.support_high]))
        return float(ends.min()), float(ends.max())


def _distance_to_interval(x, low, high):
    x = np.asarray(x, dtype=float)
    return np.maximum(np.maximum(low - x, x - high), 0.0)


def conditioned_rw_model(spec: ConditionedRandomWalkSpec, check_bounds: bool = False) -> FeynmanKacModel:
    """Build the conditioned random walk with uniform proposals on S."""
    low, high = spec.support_low, spec.support_high
    log_density = GaussianLogDensity(spec.sigma)
    log_width = math.log(spec.width)
    image_low, image_high = spec.drift_image()

    def inside(x):
        return (x >= low) & (x <= high)

    def log_support(x):
        return np.where(inside(x), 0.0, -np.inf)

    def log_transition_weight(t, x_prev, x):
        # the support term depends on x only and broadcasts into the N x N block
        log_w = log_density(x, spec.drift(x_prev))
        log_w += log_support(x) + log_width
        return log_w

    def log_partial_bound_left(t, x_prev):
        # sup over x in S sits at the point of S closest to psi(x_prev)
        gap = _distance_to_interval(spec.drift(x_prev), low, high)
        return log_width + log_density(gap)

    def log_partial_bound_right(t, x):
        gap = _distance_to_interval(x, image_low, image_high)
        return log_width + log_density(gap)

    def proposal_sampler(t, generator, size):
        return generator.uniform(low, high, size=size)

    def proposal_log_density(t, x):
        return np.where(inside(np.asarray(x, dtype=float)), -log_width, -np.inf)

    bound_wt = spec.width * log_density.peak
    farthest = max(high - image_low, image_high - low)
    lower = min(1.0, spec.width * math.exp(log_density(farthest)))

    return FeynmanKacModel(
        name="conditioned-rw",
        horizon=spec.horizon,
        log_initial_weight=log_support,
        log_transition_weight=log_transition_weight,
        proposal_sampler=proposal_sampler,
        bound_w1=1.0,
        bound_wt=lambda t: bound_wt,
        log_partial_bound_left=log_partial_bound_left,
        log_partial_bound_right=log_partial_bound_right,
        proposal_log_density=proposal_log_density,
        oracle_interval=lambda t: (low, high),
        lower_weight_bound=lower if lower > 0 else None,
        check_bounds=check_bounds,
    )
