"""
Univariate stochastic volatility model.

mu = N(0, sigma²/(1 - phi²)), f(x'|x) = N(x'; phi x, sigma²) and
g(y|x) = N(y; 0, (beta exp(x/2))²). Since log y² = x + log beta² + W with
exp(W) ~ chi²(1), the proposal draws X_t = log y_t² - log beta² - W_t.
Then g(y_t|x)/q_t(x) = 1/|y_t| for every x; that constant is dropped from
the weights, leaving w_1 = mu and w_t = f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.stats import norm

from ..errors import ContractViolation
from ..model import FeynmanKacModel
from .gaussian import HALF_LOG_2PI, GaussianLogDensity

TRUNCATION_SDS = 8.0


@dataclass(frozen=True)
class StochVolSpec:
    phi: float = 0.95
    beta: float = 0.7
    sigma: float = 0.3
    observations: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ContractViolation(f"|phi| must be below 1, got {self.phi}")
        if not (self.beta > 0 and self.sigma > 0):
            raise ContractViolation("beta and sigma must be positive")
        observations = tuple(float(y) for y in self.observations)
        zeros = [i + 1 for i, y in enumerate(observations) if y == 0.0]
        if zeros:
            raise ContractViolation(f"stochastic volatility observations must be non-zero (t={zeros[:5]})")
        object.__setattr__(self, "observations", observations)

    @property
    def stationary_sd(self) -> float:
        return self.sigma / math.sqrt(1.0 - self.phi ** 2)

    def with_observations(self, observations) -> StochVolSpec:
        return StochVolSpec(self.phi, self.beta, self.sigma, tuple(observations))


def observation_log_density(spec: StochVolSpec, y, x):
    """log g(y | x)."""
    return norm.logpdf(y, scale=spec.beta * np.exp(np.asarray(x, dtype=float) / 2.0))


def proposal_log_density(spec: StochVolSpec, y, x):
    """log q(x | y) for X = log y² - log beta² - log V, V ~ chi²(1)."""
    w = np.log(np.square(y) / spec.beta ** 2) - np.asarray(x, dtype=float)
    return w / 2.0 - np.exp(w) / 2.0 - HALF_LOG_2PI


def stoch_vol_model(spec: StochVolSpec, check_bounds: bool = False) -> FeynmanKacModel:
    if not spec.observations:
        raise ContractViolation("stochastic volatility model needs at least one observation")
    y = np.asarray(spec.observations)
    log_shift = np.log(np.square(y) / spec.beta ** 2)
    stationary_sd = spec.stationary_sd
    stationary = GaussianLogDensity(stationary_sd)
    transition = GaussianLogDensity(spec.sigma)

    def log_initial_weight(x):
        return stationary(x)

    def log_transition_weight(t, x_prev, x):
        return transition(x, spec.phi * np.asarray(x_prev, dtype=float))

    def proposal_sampler(t, generator, size):
        return log_shift[t - 1] - np.log(generator.chisquare(1.0, size=size))

    def oracle_interval(t):
        half = TRUNCATION_SDS * stationary_sd
        return -half, half

    bound_wt = transition.peak
    return FeynmanKacModel(
        name="stoch-vol",
        horizon=len(y),
        log_initial_weight=log_initial_weight,
        log_transition_weight=log_transition_weight,
        proposal_sampler=proposal_sampler,
        bound_w1=stationary.peak,
        bound_wt=lambda t: bound_wt,
        proposal_log_density=lambda t, x: proposal_log_density(spec, y[t - 1], x),
        oracle_interval=oracle_interval,
        check_bounds=check_bounds,
    )
