"""Tests for the random streams and the model abstraction."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from ers.errors import BoundViolation, ContractViolation
from ers.model import FeynmanKacModel, WeightCounter, effective_partial_bounds, evaluate_path_weight
from ers.models import ConditionedRandomWalkSpec, FiniteStateSpec, conditioned_rw_model, finite_state_model
from ers.rng import ACCEPT, GRID, RngStream


def test_stream_replays_same_draws():
    a = RngStream(seed=42, stream_id=3).child(7)
    b = RngStream(seed=42, stream_id=3).child(7)
    npt.assert_array_equal(a.generator(GRID, 2).random(5), b.generator(GRID, 2).random(5))


def test_streams_differ_by_address_and_purpose():
    root = RngStream(seed=42)
    draws = {
        "child0": root.child(0).generator(GRID, 1).random(),
        "child1": root.child(1).generator(GRID, 1).random(),
        "step2": root.child(0).generator(GRID, 2).random(),
        "accept": root.child(0).generator(ACCEPT).random(),
        "other_stream": RngStream(seed=42, stream_id=1).child(0).generator(GRID, 1).random(),
    }
    assert len(set(draws.values())) == len(draws)


def test_uniform_is_in_half_open_unit_interval():
    root = RngStream(seed=5)
    values = [root.child(i).uniform(ACCEPT) for i in range(2000)]
    assert all(0.0 < u <= 1.0 for u in values)


def test_stream_index_and_validation():
    assert RngStream(1, stream_id=4).index == 4
    assert RngStream(1, stream_id=4).child(9).index == 9
    with pytest.raises(ValueError):
        RngStream(seed=-1)


def test_large_seeds_are_folded_to_64_bits():
    assert RngStream(seed=2 ** 64 + 5).seed == 5


def _three_step_tables():
    initial = np.array([1.0, 0.5])
    transitions = np.array([
        [[0.2, 0.9], [0.7, 0.3]],
        [[0.4, 0.6], [0.1, 0.8]],
    ])
    return FiniteStateSpec(initial, transitions, horizon=3)


def test_path_weight_is_product_of_factors():
    spec = _three_step_tables()
    model = finite_state_model(spec, check_bounds=True)

    result = evaluate_path_weight(model, [0.0, 1.0, 1.0])

    expected = 1.0 * 0.9 * 0.8
    assert result.weight == pytest.approx(expected, rel=1e-12)
    assert result.log_weight == pytest.approx(math.log(expected), rel=1e-12)


def test_path_weight_zero_outside_support():
    model = conditioned_rw_model(ConditionedRandomWalkSpec(horizon=3), check_bounds=True)
    result = evaluate_path_weight(model, [0.5, 1.4, 0.5])
    assert result.weight == 0.0
    assert result.log_weight == -math.inf


def test_path_weight_rejects_wrong_length(finite_model):
    with pytest.raises(ContractViolation):
        evaluate_path_weight(finite_model, [0.0, 1.0])


@pytest.mark.parametrize("t", [0, 1, 4])
def test_transition_time_out_of_range(finite_model, t):
    with pytest.raises(ContractViolation):
        finite_model.log_transition(t, np.array([0.0]), np.array([1.0]))


def test_understated_bound_is_caught():
    model = FeynmanKacModel(
        name="too-tight",
        horizon=2,
        log_initial_weight=lambda x: np.zeros(np.shape(x)),
        log_transition_weight=lambda t, x_prev, x: np.broadcast_to(np.log(2.0), np.broadcast(x_prev, x).shape),
        proposal_sampler=lambda t, generator, size: generator.random(size),
        bound_w1=1.0,
        bound_wt=lambda t: 1.5,
        check_bounds=True,
    )
    model.log_initial(np.array([0.3]))
    with pytest.raises(BoundViolation):
        model.log_transition(2, np.array([0.1]), np.array([0.2]))
    # unchecked evaluation goes through
    model.with_bound_checks(False).log_transition(2, np.array([0.1]), np.array([0.2]))


def test_invalid_bounds_rejected():
    with pytest.raises(ContractViolation):
        FeynmanKacModel(
            name="bad",
            horizon=2,
            log_initial_weight=lambda x: x,
            log_transition_weight=lambda t, x_prev, x: x,
            proposal_sampler=lambda t, generator, size: generator.random(size),
            bound_w1=1.0,
            bound_wt=lambda t: math.inf,
        )


def test_counter_tallies_vectorised_evaluations(finite_model):
    model, counter = finite_model.with_counter()
    model.log_initial(np.zeros(5))
    model.log_transition(2, np.zeros((5, 1)), np.zeros((1, 5)))
    assert counter.initial == 5
    assert counter.transition == 25
    assert counter.total == 30
    counter.reset()
    assert counter.total == 0


def test_counter_is_thread_safe():
    from concurrent.futures import ThreadPoolExecutor

    counter = WeightCounter()
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda _: counter.add(transition=3), range(1000)))
    assert counter.transition == 3000


def test_partial_bounds_never_exceed_constant():
    model = conditioned_rw_model(ConditionedRandomWalkSpec(horizon=4, sigma=0.2))
    x = np.linspace(0.0, 1.0, 11)
    constant = model.log_bound_wt(2)
    assert np.all(model.log_bound_left(2, x) <= constant)
    assert np.all(model.log_bound_right(2, x) <= constant)


def test_partial_bounds_fall_back_to_constant():
    spec = _three_step_tables()
    model = finite_state_model(spec)
    stripped = FeynmanKacModel(
        name="no-partials",
        horizon=model.horizon,
        log_initial_weight=model.log_initial_weight,
        log_transition_weight=model.log_transition_weight,
        proposal_sampler=model.proposal_sampler,
        bound_w1=model.bound_w1,
        bound_wt=model.bound_wt,
    )
    left, right = effective_partial_bounds(stripped, 3)
    npt.assert_allclose(left(np.array([0.0, 1.0])), [0.8, 0.8])
    npt.assert_allclose(right(np.array([0.0, 1.0])), [0.8, 0.8])

    left, right = effective_partial_bounds(model, 3)
    npt.assert_allclose(left(np.array([0.0, 1.0])), [0.6, 0.8])
    npt.assert_allclose(right(np.array([0.0, 1.0])), [0.4, 0.8])
