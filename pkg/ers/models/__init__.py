"""Example models, synthetic data and exact oracles."""

from .conditioned_rw import ConditionedRandomWalkSpec, conditioned_rw_model
from .data import SimulatedData, read_observations_csv, simulate_ssm_data, write_observations_csv
from .finite_state import FiniteStateSpec, factorized_spec, finite_state_model, random_finite_state_spec
from .nonlinear_ar import NonlinearArSpec, nonlinear_ar_model
from .oracle import OracleResult, enumerate_paths, grid_oracle
from .stoch_vol import StochVolSpec, stoch_vol_model

__all__ = [
    "ConditionedRandomWalkSpec",
    "FiniteStateSpec",
    "NonlinearArSpec",
    "OracleResult",
    "SimulatedData",
    "StochVolSpec",
    "conditioned_rw_model",
    "enumerate_paths",
    "factorized_spec",
    "finite_state_model",
    "grid_oracle",
    "nonlinear_ar_model",
    "random_finite_state_spec",
    "read_observations_csv",
    "simulate_ssm_data",
    "stoch_vol_model",
    "write_observations_csv",
]
