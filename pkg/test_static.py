"""Static ensemble rejection sampling on a two-point target."""

import itertools

import numpy as np
import pytest

from ers.errors import ContractViolation
from ers.rng import RngStream
from ers.static import (
    ers_lower_bound,
    estimate_static_acceptance,
    independent_rs_acceptance,
    static_ers_sample,
    static_ers_trial,
    static_rs_sample,
    static_rs_trial,
    two_point_target,
)


def exact_static_acceptance(weights, bound, n):
    """E[Ẑ/Z̄] by summing over every ensemble of a uniform finite proposal."""
    weights = np.asarray(weights, dtype=float)
    total = 0.0
    for ensemble in itertools.product(range(len(weights)), repeat=n):
        w = weights[list(ensemble)]
        if w.sum() == 0:
            continue
        z_hat = w.mean()
        select = w / w.sum()
        ratios = z_hat / (z_hat + (bound - w) / n)
        total += float(np.dot(select, ratios))
    return total / len(weights) ** n


def test_two_point_acceptance_by_hand():
    assert exact_static_acceptance([2.0, 1.0], 2.0, 2) == pytest.approx(0.875)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_estimate_matches_enumeration(two_point, n):
    estimate = estimate_static_acceptance(two_point, n, 20_000, RngStream(seed=3))
    expected = exact_static_acceptance([2.0, 1.0], 2.0, n)
    assert estimate.mean == pytest.approx(expected, abs=4 * estimate.std_error)


def test_acceptance_respects_lower_bound(two_point):
    p_rs = 0.75
    for n in (1, 2, 5, 10):
        assert exact_static_acceptance([2.0, 1.0], 2.0, n) >= ers_lower_bound(p_rs, n) - 1e-12


def test_lower_bound_and_independent_rs_values():
    assert ers_lower_bound(0.75, 2) == pytest.approx(1.5 / 1.75)
    assert ers_lower_bound(0.3, 1) == pytest.approx(0.3)
    assert independent_rs_acceptance(0.75, 2) == pytest.approx(0.9375)


def test_single_member_ensemble_is_rejection_sampling(two_point):
    root = RngStream(seed=21)
    for i in range(500):
        rng = root.child(i)
        state, record = static_ers_trial(two_point, 1, rng)
        rs_state, rs_accepted = static_rs_trial(two_point, rng)
        assert state == rs_state
        assert record.accepted == rs_accepted


def test_records_satisfy_bound_ordering(two_point):
    root = RngStream(seed=8)
    for i in range(200):
        _, record = static_ers_trial(two_point, 3, root.child(i))
        assert record.z_bar >= record.z_hat
        assert 0.0 <= record.ratio <= 1.0


def test_accepted_states_follow_target(two_point, chisquare_pvalue):
    root = RngStream(seed=99)
    states = [static_ers_sample(two_point, 3, root.child(p)).state for p in range(6000)]
    counts = [states.count(0.0), states.count(1.0)]
    assert chisquare_pvalue(counts, [2.0 / 3.0, 1.0 / 3.0]) > 1e-3


def test_rejection_sampling_follows_target(two_point, chisquare_pvalue):
    root = RngStream(seed=100)
    states = [static_rs_sample(two_point, root.child(p)).state for p in range(6000)]
    counts = [states.count(0.0), states.count(1.0)]
    assert chisquare_pvalue(counts, [2.0 / 3.0, 1.0 / 3.0]) > 1e-3


def test_zero_weight_ensemble_is_a_degenerate_rejection():
    target = two_point_target(1.0, 0.0, check_bounds=True)
    root = RngStream(seed=4)
    records = [static_ers_trial(target, 1, root.child(i))[1] for i in range(400)]
    degenerate = [r for r in records if r.degenerate]
    assert 0 < len(degenerate) < len(records)
    assert all(not r.accepted and r.ratio == 0.0 and r.selected_index is None for r in degenerate)

    outcome = static_ers_sample(target, 1, RngStream(seed=4))
    assert outcome.state == 0.0
    assert outcome.degenerate_trials == outcome.trials - 1


def test_exhausted_budget(two_point):
    outcome = static_ers_sample(two_point, 2, RngStream(seed=1), max_trials=0)
    assert outcome.exhausted
    assert outcome.trials == 0
    assert static_rs_sample(two_point, RngStream(seed=1), max_trials=0).exhausted


def test_contract_violations(two_point):
    with pytest.raises(ContractViolation):
        static_ers_trial(two_point, 0, RngStream(seed=1))
    with pytest.raises(ContractViolation):
        estimate_static_acceptance(two_point, 2, 1, RngStream(seed=1))
    with pytest.raises(ContractViolation):
        two_point_target(0.0, 0.0)
