"""Closed-form Gaussian log-density for the N x N weight evaluations."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractViolation

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class GaussianLogDensity:
    """x, loc -> log N(x; loc, scale²) with the normalising constant folded in.

    Works in place on one broadcast temporary, so an N x N evaluation
    allocates a single N x N array.
    """

    def __init__(self, scale: float):
        if not scale > 0:
            raise ContractViolation(f"Gaussian scale must be positive, got {scale}")
        self.scale = float(scale)
        self.log_peak = -math.log(self.scale) - HALF_LOG_2PI
        self._half_precision = 0.5 / self.scale ** 2

    def __call__(self, x, loc=0.0) -> np.ndarray:
        out = np.subtract(x, loc, dtype=float)
        if out.ndim == 0:
            return self.log_peak - self._half_precision * out * out
        np.square(out, out=out)
        out *= -self._half_precision
        out += self.log_peak
        return out

    @property
    def peak(self) -> float:
        """Density at the mode, 1 / (scale sqrt(2 pi))."""
        return math.exp(self.log_peak)
