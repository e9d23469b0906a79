"""
Experiment runner: acceptance-probability tables and sampled paths.

``ExperimentRunner`` turns an ExperimentConfig into models, runs the
acceptance estimates over the configured (T, N) grid and writes the results
as CSV. Every trial draws from an address derived from the config seed and
its index, so results do not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .config import ExperimentConfig
from .dynamic import ers_sample, estimate_acceptance, run_trials
from .errors import ConfigError, ContractViolation
from .model import FeynmanKacModel, StaticTarget
from .models import (
    ConditionedRandomWalkSpec,
    NonlinearArSpec,
    StochVolSpec,
    conditioned_rw_model,
    finite_state_model,
    nonlinear_ar_model,
    random_finite_state_spec,
    read_observations_csv,
    simulate_ssm_data,
    stoch_vol_model,
)
from .rng import RngStream
from .sampling import Estimate
from .static import independent_rs_acceptance, static_ers_sample, static_ers_trial, two_point_target

logger = logging.getLogger(__name__)

RESULT_HEADER = ("model", "T", "N", "estimator", "p_ers_percent", "std_error",
                 "num_samples", "seed", "wall_time_s")
DEFAULT_HORIZON = 100
_RESULT_FORMATS = {"p_ers_percent": ".4f", "std_error": ".4f", "wall_time_s": ".3f"}

# Stream ids: acceptance estimates use 0, emitted paths use 1, data simulation 2.
ESTIMATE_STREAM = 0
SAMPLE_STREAM = 1
DATA_STREAM = 2

_FINITE_STATE_DEFAULTS = {"state_count": 4, "table_seed": 0, "low": 0.05, "high": 1.0,
                          "time_varying": False}
_TWO_POINT_DEFAULTS = {"gamma_a": 1.0, "gamma_b": 0.5}

Target = Union[FeynmanKacModel, StaticTarget]


@dataclass(frozen=True)
class ResultRow:
    model: str
    horizon: int
    n: int
    estimator: str
    p_ers_percent: float
    std_error: float
    num_samples: int
    seed: int
    wall_time_s: float


@dataclass(frozen=True, eq=False)
class SampleRow:
    path_index: int
    trials: int
    path: Optional[np.ndarray]

    @property
    def status(self) -> str:
        return "exhausted" if self.path is None else "accepted"


def _model_error(config: ExperimentConfig, error: Exception) -> ConfigError:
    return ConfigError(f"model {config.model!r}: {error}")


class ExperimentRunner:
    """
    Builds models from a config and runs acceptance estimates or path sampling.

    Observation data for the state-space models is loaded (or simulated)
    once and sliced to each horizon.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._observations: Optional[np.ndarray] = None

    # -- models ----------------------------------------------------------

    @property
    def is_static(self) -> bool:
        return self.config.model == "two-point"

    def horizons(self) -> Tuple[int, ...]:
        if self.is_static:
            if any(t != 1 for t in self.config.horizons):
                raise ConfigError("t: the two-point model is static, its horizon is 1")
            return (1,)
        if self.config.horizons:
            return self.config.horizons
        if self.config.data_path is not None and self.config.model in ("nonlinear-ar", "stoch-vol"):
            return (len(self._load_observations(DEFAULT_HORIZON)),)
        return (DEFAULT_HORIZON,)

    def _params(self, defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        params = dict(self.config.model_params)
        if defaults is not None:
            unknown = sorted(set(params) - set(defaults))
            if unknown:
                raise ConfigError(f"model {self.config.model!r}: unknown parameter(s) {', '.join(unknown)}")
            params = {**defaults, **params}
        return params

    def _spec(self, spec_type, **fixed):
        try:
            return spec_type(**fixed, **self._params())
        except TypeError as e:
            raise _model_error(self.config, e) from None
        except ContractViolation as e:
            raise _model_error(self.config, e) from None

    def _load_observations(self, horizon: int) -> np.ndarray:
        if self._observations is None:
            if self.config.data_path is not None:
                allow_zero = self.config.model != "stoch-vol"
                self._observations = read_observations_csv(self.config.data_path, allow_zero=allow_zero)
            else:
                spec = self._spec(NonlinearArSpec if self.config.model == "nonlinear-ar" else StochVolSpec)
                length = max(self.config.horizons or (horizon,))
                simulated = simulate_ssm_data(spec, length, RngStream(self.config.data_seed, DATA_STREAM))
                self._observations = simulated.observations
                logger.info(f"Simulated {length} observations with data seed {self.config.data_seed}")
        return self._observations

    def observations(self, horizon: int) -> np.ndarray:
        """Observations for the state-space models, read from CSV or simulated."""
        self._load_observations(horizon)
        if len(self._observations) < horizon:
            raise ConfigError(f"t: horizon {horizon} exceeds the {len(self._observations)} available observations")
        return self._observations[:horizon]

    def build_model(self, horizon: int) -> Target:
        """Construct the configured model at the given horizon."""
        name, check = self.config.model, self.config.check_bounds
        if name == "conditioned-rw":
            return conditioned_rw_model(self._spec(ConditionedRandomWalkSpec, horizon=horizon), check_bounds=check)
        if name == "nonlinear-ar":
            spec = self._spec(NonlinearArSpec).with_observations(self.observations(horizon))
            return nonlinear_ar_model(spec, check_bounds=check)
        if name == "stoch-vol":
            try:
                spec = self._spec(StochVolSpec).with_observations(self.observations(horizon))
            except ContractViolation as e:
                raise _model_error(self.config, e) from None
            return stoch_vol_model(spec, check_bounds=check)
        if name == "finite-state":
            params = self._params(_FINITE_STATE_DEFAULTS)
            spec = random_finite_state_spec(
                int(params["state_count"]), horizon, seed=int(params["table_seed"]),
                low=float(params["low"]), high=float(params["high"]),
                time_varying=bool(params["time_varying"]))
            return finite_state_model(spec, check_bounds=check)
        params = self._params(_TWO_POINT_DEFAULTS)
        return two_point_target(float(params["gamma_a"]), float(params["gamma_b"]), check_bounds=check)

    def cells(self) -> Iterator[Tuple[int, int]]:
        for horizon in self.horizons():
            for n in self.config.cells(horizon):
                self.config.check_scale(horizon, n)
                yield horizon, n

    # -- acceptance tables -------------------------------------------------

    def _row(self, horizon: int, n: int, estimator: str, estimate: Estimate, wall: float) -> ResultRow:
        percent = estimate.as_percent()
        return ResultRow(model=self.config.model, horizon=horizon, n=n, estimator=estimator,
                         p_ers_percent=percent.mean, std_error=percent.std_error,
                         num_samples=percent.num_samples, seed=self.config.seed,
                         wall_time_s=wall if self.config.record_wall_time else 0.0)

    def _static_estimates(self, target: StaticTarget, n: int, rng: RngStream) -> Dict[str, Estimate]:
        records = run_trials(lambda i: static_ers_trial(target, n, rng.child(i))[1],
                             self.config.num_samples, workers=self.config.workers,
                             progress=self.config.progress, description=f"two-point N={n}")
        normalizer = Estimate.from_values(r.z_hat / target.bound for r in records)
        p_rs = normalizer.mean
        # delta method through 1 - (1 - p)^N
        slope = n * (1.0 - p_rs) ** (n - 1)
        return {
            "ratio-mean": Estimate.from_values(r.ratio for r in records),
            "frequency": Estimate.from_values(float(r.accepted) for r in records),
            "independent-rs": Estimate(independent_rs_acceptance(p_rs, n),
                                       slope * normalizer.std_error, normalizer.num_samples),
        }

    def run_cell(self, horizon: int, n: int) -> List[ResultRow]:
        target = self.build_model(horizon)
        rng = RngStream(self.config.seed, ESTIMATE_STREAM)
        started = time.perf_counter()
        if isinstance(target, StaticTarget):
            estimates = self._static_estimates(target, n, rng)
            names = self.config.estimators() + ("independent-rs",)
        else:
            result = estimate_acceptance(target, n, self.config.num_samples, rng,
                                         workers=self.config.workers, progress=self.config.progress)
            estimates = {"ratio-mean": result.ratio, "frequency": result.frequency}
            names = self.config.estimators()
            if result.degenerate_trials:
                logger.info(f"{target.name} T={horizon} N={n}: {result.degenerate_trials} degenerate trials")
        wall = time.perf_counter() - started
        rows = [self._row(horizon, n, name, estimates[name], wall) for name in names]
        logger.info(f"{self.config.model} T={horizon} N={n}: "
                    f"p_ERS = {rows[0].p_ers_percent:.2f}% ± {rows[0].std_error:.2f} ({wall:.1f}s)")
        return rows

    def run(self) -> List[ResultRow]:
        if self.config.num_samples < 2:
            raise ConfigError(f"samples: acceptance estimates need at least 2 samples, got {self.config.num_samples}")
        cells = list(self.cells())
        logger.info(f"Running {self.config.model} over {len(cells)} cell(s) "
                    f"with {self.config.num_samples} samples each, seed {self.config.seed}")
        rows: List[ResultRow] = []
        for horizon, n in cells:
            rows.extend(self.run_cell(horizon, n))
        return rows

    # -- path sampling ---------------------------------------------------------

    def sample(self, count: int) -> List[SampleRow]:
        """Draw ``count`` paths; path p runs its trials on its own stream."""
        if count < 0:
            raise ContractViolation(f"count must be >= 0, got {count}")
        cells = list(self.cells())
        if len(cells) != 1:
            raise ConfigError(f"sample needs a single (T, N) cell, got {len(cells)}")
        horizon, n = cells[0]
        target = self.build_model(horizon)
        root = RngStream(self.config.seed, SAMPLE_STREAM)
        max_trials = self.config.max_trials

        def one(p: int) -> SampleRow:
            if isinstance(target, StaticTarget):
                outcome = static_ers_sample(target, n, root.child(p), max_trials=max_trials)
                path = None if outcome.exhausted else np.array([outcome.state])
            else:
                outcome = ers_sample(target, n, root.child(p), max_trials=max_trials)
                path = outcome.path
            return SampleRow(path_index=p, trials=outcome.trials, path=path)

        logger.info(f"Sampling {count} path(s) from {self.config.model} T={horizon} N={n}")
        rows = run_trials(one, count, workers=self.config.workers,
                          progress=self.config.progress, description="paths")
        exhausted = sum(row.path is None for row in rows)
        if exhausted:
            logger.warning(f"{exhausted} of {count} path(s) exhausted their budget of {max_trials} trials")
        return rows


def create_experiment_runner(config: ExperimentConfig) -> ExperimentRunner:
    return ExperimentRunner(config)


def results_frame(rows: List[ResultRow]) -> pd.DataFrame:
    """Result rows as a table with the CSV column names."""
    records = [(row.model, row.horizon, row.n, row.estimator, row.p_ers_percent, row.std_error,
                row.num_samples, row.seed, row.wall_time_s) for row in rows]
    return pd.DataFrame.from_records(records, columns=list(RESULT_HEADER))


def samples_frame(rows: List[SampleRow], horizon: int) -> pd.DataFrame:
    """One row per path; exhausted paths have empty state columns."""
    paths = np.full((len(rows), horizon), np.nan)
    for k, row in enumerate(rows):
        if row.path is not None:
            paths[k] = row.path
    frame = pd.DataFrame(paths, columns=[f"x_{t}" for t in range(1, horizon + 1)])
    frame.insert(0, "path_index", [row.path_index for row in rows])
    frame.insert(1, "trials", [row.trials for row in rows])
    frame.insert(2, "status", [row.status for row in rows])
    return frame


def _write_csv(frame: pd.DataFrame, out: Optional[Union[str, Path, IO[str]]]) -> None:
    frame.to_csv(sys.stdout if out is None else out, index=False, lineterminator="\n")


def write_results(rows: List[ResultRow], out: Optional[Union[str, Path, IO[str]]] = None) -> None:
    """Write result rows as CSV to a path, an open stream, or stdout."""
    frame = results_frame(rows)
    for column, spec in _RESULT_FORMATS.items():
        frame[column] = frame[column].map(lambda value: format(value, spec))
    _write_csv(frame, out)


def write_samples(rows: List[SampleRow], horizon: int,
                  out: Optional[Union[str, Path, IO[str]]] = None) -> None:
    _write_csv(samples_frame(rows, horizon), out)


def run_experiment(config: ExperimentConfig) -> List[ResultRow]:
    """Run every configured (T, N) cell and return its result rows."""
    return create_experiment_runner(config).run()


def emit_samples(config: ExperimentConfig, count: int,
                 out: Optional[Union[str, Path, IO[str]]] = None) -> List[SampleRow]:
    """Sample ``count`` paths and write them as CSV, one row per path."""
    runner = create_experiment_runner(config)
    rows = runner.sample(count)
    horizon = next(runner.cells())[0]
    write_samples(rows, horizon, config.out if out is None else out)
    return rows


def mean_trials(rows: List[SampleRow]) -> float:
    accepted = [row.trials for row in rows if row.path is not None]
    return float(np.mean(accepted)) if accepted else math.nan
