"""Small sampling and summary helpers shared by the static and dynamic samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np


def select_index(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw: the smallest k whose cumulative weight reaches ``u * total``.

    ``u`` must lie in (0, 1] and the weights must have a positive total.
    """
    cumulative = np.cumsum(weights)
    index = int(np.searchsorted(cumulative, u * cumulative[-1], side="left"))
    return min(index, len(cumulative) - 1)


def select_log_index(log_weights: np.ndarray, u: float) -> int:
    """``select_index`` on weights given in log space (max-factored)."""
    shifted = np.exp(log_weights - np.max(log_weights))
    return select_index(shifted, u)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    num_samples: int

    @classmethod
    def from_values(cls, values: Iterable[float]) -> Estimate:
        values = np.asarray(list(values), dtype=float)
        n = values.size
        mean = float(np.mean(values)) if n else math.nan
        std_error = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        return cls(mean=mean, std_error=std_error, num_samples=n)

    def as_percent(self) -> Estimate:
        return Estimate(self.mean * 100.0, self.std_error * 100.0, self.num_samples)
