"""
Observation data: synthetic simulation and CSV ingestion.

CSV layout: one header line, then ``index,value`` rows. Values are used as
given; returns are not demeaned or otherwise transformed.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..errors import ContractViolation, DataError
from ..rng import RngStream
from .nonlinear_ar import NonlinearArSpec
from .stoch_vol import StochVolSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    latents: np.ndarray
    observations: np.ndarray


def simulate_ssm_data(spec: Union[NonlinearArSpec, StochVolSpec], horizon: int,
                      rng: RngStream) -> SimulatedData:
    """Forward-simulate latents and observations from the model's generative equations."""
    if horizon < 1:
        raise ContractViolation(f"horizon must be >= 1, got {horizon}")
    generator = rng.generator()
    state_noise = generator.standard_normal(horizon)
    observation_noise = generator.standard_normal(horizon)
    latents = np.empty(horizon)

    if isinstance(spec, NonlinearArSpec):
        latents[0] = state_noise[0]
        for t in range(1, horizon):
            latents[t] = spec.phi * math.tanh(latents[t - 1]) + spec.sigma_v * state_noise[t]
        observations = latents + spec.sigma_w * observation_noise
    elif isinstance(spec, StochVolSpec):
        latents[0] = spec.stationary_sd * state_noise[0]
        for t in range(1, horizon):
            latents[t] = spec.phi * latents[t - 1] + spec.sigma * state_noise[t]
        observations = spec.beta * np.exp(latents / 2.0) * observation_noise
    else:
        raise ContractViolation(f"cannot simulate data for {type(spec).__name__}")
    return SimulatedData(latents=latents, observations=observations)


_FIELD_COUNT = re.compile(r"Expected (?P<expected>\d+) fields in line (?P<line>\d+), saw (?P<saw>\d+)")


def _row_problem(text: str, value: float, allow_zero: bool) -> Optional[str]:
    if not text:
        return "expected 'index,value', got 1 fields"
    if math.isnan(value):
        return f"value {text!r} is not a number"
    if not math.isfinite(value):
        return "value must be finite"
    if value == 0.0 and not allow_zero:
        return "zero return is not allowed for this model"
    return None


def read_observations_csv(path: Union[str, Path], allow_zero: bool = True) -> np.ndarray:
    """Read ``index,value`` rows after a header line.

    Problems are reported as ``path:line: ...`` with the 1-based file line.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    try:
        # blank lines kept so that frame row r is file line r + 1
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                            skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: empty file, expected a header line") from None
    except pd.errors.ParserError as e:
        match = _FIELD_COUNT.search(str(e))
        if match is None:
            raise DataError(f"{path}: {e}") from None
        raise DataError(f"{path}:{match['line']}: expected 'index,value', "
                        f"got {match['saw']} fields") from None
    if frame.shape[1] != 2:
        raise DataError(f"{path}:1: expected an 'index,value' header, got {frame.shape[1]} fields")

    body = frame.iloc[1:].fillna("").apply(lambda column: column.str.strip())
    body = body[(body != "").any(axis=1)]
    if body.empty:
        raise DataError(f"{path}: no observations")
    values = pd.to_numeric(body[1], errors="coerce")
    for row, text, value in zip(body.index, body[1], values):
        problem = _row_problem(text, float(value), allow_zero)
        if problem is not None:
            raise DataError(f"{path}:{row + 1}: {problem}")

    observations = body[1].astype(float).to_numpy()
    logger.info(f"Loaded {len(observations)} observations from {path}")
    return observations


def write_observations_csv(path: Union[str, Path], observations) -> None:
    values = np.asarray(observations, dtype=float)
    frame = pd.DataFrame({"index": np.arange(1, values.size + 1), "value": values})
    frame.to_csv(path, index=False, lineterminator="\n")
