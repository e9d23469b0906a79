"""
Non-linear autoregressive model observed in Gaussian noise.

mu = N(0, 1), f(x'|x) = N(x'; phi tanh(x), sigma_v²), g(y|x) = N(y; x, sigma_w²).
The proposal q_t(x) = N(x; y_t, sigma_w²) is g normalised in x, so the g/q
factor is the constant 1 and the weights reduce to w_1 = mu, w_t = f.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import ContractViolation
from ..model import FeynmanKacModel
from .gaussian import GaussianLogDensity

TRUNCATION_SDS = 8.0


@dataclass(frozen=True)
class NonlinearArSpec:
    phi: float = 0.9
    sigma_v: float = 0.3
    sigma_w: float = 0.1
    observations: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not (self.sigma_v > 0 and self.sigma_w > 0):
            raise ContractViolation("sigma_v and sigma_w must be positive")
        object.__setattr__(self, "observations", tuple(float(y) for y in self.observations))

    def with_observations(self, observations) -> NonlinearArSpec:
        return NonlinearArSpec(self.phi, self.sigma_v, self.sigma_w, tuple(observations))


def nonlinear_ar_model(spec: NonlinearArSpec, check_bounds: bool = False) -> FeynmanKacModel:
    if not spec.observations:
        raise ContractViolation("nonlinear AR model needs at least one observation")
    y = np.asarray(spec.observations)
    reach = abs(spec.phi)
    prior = GaussianLogDensity(1.0)
    transition = GaussianLogDensity(spec.sigma_v)
    observation = GaussianLogDensity(spec.sigma_w)

    def log_initial_weight(x):
        return prior(x)

    def log_transition_weight(t, x_prev, x):
        return transition(x, spec.phi * np.tanh(x_prev))

    def log_partial_bound_right(t, x):
        # phi * tanh(.) ranges over (-|phi|, |phi|)
        gap = np.maximum(np.abs(np.asarray(x, dtype=float)) - reach, 0.0)
        return transition(gap)

    def proposal_sampler(t, generator, size):
        return y[t - 1] + spec.sigma_w * generator.standard_normal(size)

    def proposal_log_density(t, x):
        return observation(x, y[t - 1])

    def oracle_interval(t):
        half = TRUNCATION_SDS * spec.sigma_w
        return float(y[t - 1] - half), float(y[t - 1] + half)

    bound_wt = transition.peak
    return FeynmanKacModel(
        name="nonlinear-ar",
        horizon=len(y),
        log_initial_weight=log_initial_weight,
        log_transition_weight=log_transition_weight,
        proposal_sampler=proposal_sampler,
        bound_w1=prior.peak,
        bound_wt=lambda t: bound_wt,
        log_partial_bound_right=log_partial_bound_right,
        proposal_log_density=proposal_log_density,
        oracle_interval=oracle_interval,
        check_bounds=check_bounds,
    )
