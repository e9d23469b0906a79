"""
Experiment configuration.

Values are resolved from, lowest to highest precedence: dataclass defaults,
``ERS_*`` environment variables (a ``.env`` file is loaded first), the YAML
config file, and command-line overrides.

YAML layout::

    experiment:
      t: [100, 250]        # horizons
      n: [200]             # absolute ensemble sizes, or
      beta: [1, 2, 5]      # N = ceil(beta * T)
      samples: 500
      seed: 0
      estimator: both      # ratio-mean | frequency | both
      workers: 4
      out: table1.csv
    model:
      name: conditioned-rw
      sigma: 0.2
    data:
      path: returns.csv
      seed: 1
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger(__name__)

MODELS = ("conditioned-rw", "nonlinear-ar", "stoch-vol", "finite-state", "two-point")
ESTIMATORS = ("ratio-mean", "frequency", "both")

# Per-trial work N² T above which a run must be marked extended.
DESK_SCALE_LIMIT = 1e8

_EXPERIMENT_KEYS = {
    "t": "horizons",
    "n": "sizes",
    "beta": "betas",
    "samples": "num_samples",
    "seed": "seed",
    "estimator": "estimator",
    "workers": "workers",
    "out": "out",
    "max_trials": "max_trials",
    "extended": "extended",
    "record_wall_time": "record_wall_time",
    "progress": "progress",
    "check_bounds": "check_bounds",
}
_DATA_KEYS = {"path": "data_path", "seed": "data_seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "conditioned-rw"
    model_params: Mapping[str, Any] = field(default_factory=dict)
    horizons: Tuple[int, ...] = ()
    sizes: Tuple[int, ...] = ()
    betas: Tuple[float, ...] = ()
    num_samples: int = 500
    estimator: str = "ratio-mean"
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    data_path: Optional[str] = None
    data_seed: int = 1
    max_trials: Optional[int] = None
    extended: bool = False
    record_wall_time: bool = True
    progress: bool = False
    check_bounds: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model: unknown model {self.model!r}, expected one of {', '.join(MODELS)}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator: expected one of {', '.join(ESTIMATORS)}, got {self.estimator!r}")
        if self.num_samples < 1:
            raise ConfigError(f"samples: must be >= 1, got {self.num_samples}")
        if any(t < 1 for t in self.horizons):
            raise ConfigError(f"t: horizons must be >= 1, got {list(self.horizons)}")
        if any(n < 1 for n in self.sizes):
            raise ConfigError(f"n: ensemble sizes must be >= 1, got {list(self.sizes)}")
        if any(not b > 0 for b in self.betas):
            raise ConfigError(f"beta: must be positive, got {list(self.betas)}")
        if self.sizes and self.betas:
            raise ConfigError("n and beta are mutually exclusive")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be non-negative, got {self.seed}")
        if self.max_trials is not None and self.max_trials < 0:
            raise ConfigError(f"max_trials: must be >= 0, got {self.max_trials}")

    def estimators(self) -> Tuple[str, ...]:
        return ("ratio-mean", "frequency") if self.estimator == "both" else (self.estimator,)

    def cells(self, horizon: int) -> Iterator[int]:
        """Ensemble sizes to run at the given horizon."""
        if self.sizes:
            yield from self.sizes
        elif self.betas:
            for beta in self.betas:
                yield max(1, math.ceil(beta * horizon))
        else:
            yield horizon

    def check_scale(self, horizon: int, n: int) -> None:
        if not self.extended and n * n * horizon > DESK_SCALE_LIMIT:
            raise ConfigError(
                f"T={horizon}, N={n} needs {n * n * horizon:.2e} weight evaluations per trial; "
                f"pass --extended to run beyond {DESK_SCALE_LIMIT:.0e}")


def _as_tuple(value, cast, name: str) -> tuple:
    values = value if isinstance(value, (list, tuple)) else [value]
    try:
        return tuple(cast(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r}") from None


def _as_bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"{name}: expected a boolean, got {value!r}")


_CASTS = {
    "horizons": lambda v, name: _as_tuple(v, int, name),
    "sizes": lambda v, name: _as_tuple(v, int, name),
    "betas": lambda v, name: _as_tuple(v, float, name),
    "extended": _as_bool,
    "record_wall_time": _as_bool,
    "progress": _as_bool,
    "check_bounds": _as_bool,
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, value, source: str):
    if value is None:
        return None
    if name in _CASTS:
        return _CASTS[name](value, f"{source}: {name}")
    kind = _FIELD_TYPES[name]
    try:
        if "int" in kind:
            return int(value)
        if "str" in kind:
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: {name}: expected an integer, got {value!r}") from None
    return value


def _key_lines(root: Optional[yaml.Node]) -> Dict[Tuple[str, ...], int]:
    """1-based line of every ``section`` and ``section.key`` in a composed document."""
    lines: Dict[Tuple[str, ...], int] = {}
    if not isinstance(root, yaml.MappingNode):
        return lines
    for section_node, content in root.value:
        lines[(str(section_node.value),)] = section_node.start_mark.line + 1
        if isinstance(content, yaml.MappingNode):
            for key_node, _ in content.value:
                lines[(str(section_node.value), str(key_node.value))] = key_node.start_mark.line + 1
    return lines


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a YAML config file into ExperimentConfig keyword arguments.

    Errors name the file, the line of the offending key and the field.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        lines = _key_lines(yaml.compose(text, Loader=yaml.SafeLoader))
        document = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: invalid YAML: {getattr(e, 'problem', e)}") from None
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")

    def where(*keys) -> str:
        line = lines.get(tuple(str(k) for k in keys))
        return f"{path}:{line}" if line is not None else str(path)

    values: Dict[str, Any] = {}
    for section, content in document.items():
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigError(f"{where(section)}: section {section!r} must be a mapping")
        if section == "experiment":
            for key, value in content.items():
                if key not in _EXPERIMENT_KEYS:
                    raise ConfigError(f"{where(section, key)}: experiment.{key}: unknown field")
                name = _EXPERIMENT_KEYS[key]
                values[name] = _coerce(name, value, f"{where(section, key)}: experiment")
        elif section == "model":
            params = dict(content)
            if "name" in params:
                name = params.pop("name")
                if name not in MODELS:
                    raise ConfigError(f"{where(section, 'name')}: model.name: unknown model {name!r}; "
                                      f"expected one of {', '.join(MODELS)}")
                values["model"] = str(name)
            values["model_params"] = params
        elif section == "data":
            for key, value in content.items():
                if key not in _DATA_KEYS:
                    raise ConfigError(f"{where(section, key)}: data.{key}: unknown field")
                name = _DATA_KEYS[key]
                values[name] = _coerce(name, value, f"{where(section, key)}: data")
        else:
            raise ConfigError(f"{where(section)}: unknown section {section!r}")
    return values


def read_environment(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}
    for variable, name in (("ERS_WORKERS", "workers"), ("ERS_SEED", "seed"),
                           ("ERS_CHECK_BOUNDS", "check_bounds")):
        if environ.get(variable):
            values[name] = _coerce(name, environ[variable], variable)
    return values


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None,
                environ: Optional[Mapping[str, str]] = None,
                dotenv: bool = True) -> ExperimentConfig:
    """Resolve an ExperimentConfig from environment, YAML file and overrides."""
    if dotenv and environ is None:
        load_dotenv(override=False)
    values = read_environment(environ)
    if path is not None:
        values.update(read_config_file(path))
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name == "model_params":
            values["model_params"] = {**values.get("model_params", {}), **value}
        else:
            values[name] = _coerce(name, value, "override")
    config = ExperimentConfig(**values)
    logger.debug(f"Resolved config: {config}")
    return config
