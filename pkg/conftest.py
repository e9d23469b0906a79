"""Shared fixtures: small finite-state models and brute-force oracles over grids."""

import itertools

import numpy as np
import pytest
from scipy.stats import chisquare

from ers.models import FiniteStateSpec, finite_state_model, random_finite_state_spec
from ers.static import two_point_target


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical reproductions (run with -m slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("markexpr"):
        return
    skip = pytest.mark.skip(reason="slow test, select with -m slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def two_point():
    """γ(0) = 1, γ(1) = 0.5 under a uniform proposal: weights 2 and 1, bound 2."""
    return two_point_target(1.0, 0.5, check_bounds=True)


@pytest.fixture
def finite_model():
    """M=4, T=3, time-varying random tables."""
    spec = random_finite_state_spec(4, 3, seed=11, time_varying=True)
    return finite_state_model(spec, check_bounds=True)


@pytest.fixture
def hand_tables():
    """M=2, T=2 with hand-set weights."""
    spec = FiniteStateSpec(
        initial_weights=np.array([1.0, 0.5]),
        transition_weights=np.array([[0.2, 1.0], [0.6, 0.4]]),
        horizon=2,
    )
    return finite_state_model(spec, check_bounds=True)


def _path_factors(model, grid, indices, substitute=None):
    """Log weight factors along the index path ``indices`` through ``grid``.

    With ``substitute`` set to the selected index path, factors touching a
    selected state are replaced by the corresponding bound.
    """
    states = grid.states
    x1 = states[indices[0], 0]
    if substitute is not None and indices[0] == substitute[0]:
        total = model.log_bound_w1()
    else:
        total = float(model.log_initial_weight(np.array([x1]))[0])
    for t in range(2, model.horizon + 1):
        j, i = indices[t - 2], indices[t - 1]
        x_prev, x = states[j, t - 2], states[i, t - 1]
        prev_selected = substitute is not None and j == substitute[t - 2]
        selected = substitute is not None and i == substitute[t - 1]
        if prev_selected and selected:
            factor = model.log_bound_wt(t)
        elif prev_selected:
            factor = float(model.log_bound_right(t, np.array([x]))[0])
        elif selected:
            factor = float(model.log_bound_left(t, np.array([x_prev]))[0])
        else:
            factor = float(model.log_transition_weight(t, np.array([x_prev]), np.array([x]))[0])
        total += factor
    return total


def _enumerated_mean(model, grid, substitute=None):
    n, horizon = grid.states.shape
    terms = [_path_factors(model, grid, path, substitute)
             for path in itertools.product(range(n), repeat=horizon)]
    return float(np.mean(np.exp(terms)))


@pytest.fixture
def brute_force_z_hat():
    """Ẑ as the average over all N^T index paths of the path weight."""
    return lambda model, grid: _enumerated_mean(model, grid)


@pytest.fixture
def brute_force_z_bar():
    """Z̄ as the same average with every factor touching the selected path bounded."""
    return lambda model, grid, indices: _enumerated_mean(model, grid, tuple(indices))


@pytest.fixture
def index_path_posterior():
    """Exact law of the index path K_{1:T} given the grid."""

    def posterior(model, grid):
        n, horizon = grid.states.shape
        paths = list(itertools.product(range(n), repeat=horizon))
        log_mass = np.array([_path_factors(model, grid, path) for path in paths])
        mass = np.exp(log_mass - log_mass.max())
        return paths, mass / mass.sum()

    return posterior


def pooled_chisquare(observed, expected, minimum=5.0):
    """Chi-square p-value after pooling cells with small expected counts."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    small = expected < minimum
    if small.any():
        observed = np.append(observed[~small], observed[small].sum())
        expected = np.append(expected[~small], expected[small].sum())
    expected = expected * observed.sum() / expected.sum()
    return chisquare(observed, expected).pvalue


@pytest.fixture
def chisquare_pvalue():
    return pooled_chisquare
