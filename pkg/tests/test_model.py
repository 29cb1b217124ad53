import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from stochsubmax import constraints
from stochsubmax.lattice import WeightedModular
from stochsubmax.model import (
    Instance,
    ItemModel,
    expected_truncated_cost,
    instance_from_json,
    instance_to_json,
    masked_states,
    sample_realization,
    validate_instance,
)


def build(items, budget=5, outer=None, weights=None):
    n = len(items)
    B = len(items[0].probs)
    return Instance(
        n=n,
        B=B,
        budget=budget,
        items=tuple(items),
        outer=outer or constraints.cardinality(n, n),
        utility=WeightedModular(weights=weights or tuple([1.0] * n)),
    )


def test_valid_instance_has_no_violations(pair_instance):
    assert validate_instance(pair_instance) == []


def test_decreasing_costs_flagged():
    inst = build([ItemModel(probs=(0.5, 0.5), costs=(2, 1))])
    msgs = validate_instance(inst)
    assert any("nondecreasing" in m for m in msgs)


def test_unnormalized_distribution_flagged():
    inst = build([ItemModel(probs=(0.5, 0.4), costs=(1, 2))])
    msgs = validate_instance(inst)
    assert any("sums to 0.9" in m for m in msgs)


def test_zero_cost_flagged():
    inst = build([ItemModel(probs=(1.0,), costs=(0,))])
    assert any("integers >= 1" in m for m in validate_instance(inst))


def test_bad_budget_flagged():
    inst = build([ItemModel(probs=(1.0,), costs=(1,))], budget=0)
    assert any("budget" in m for m in validate_instance(inst))


def test_wrong_outer_size_flagged():
    inst = build(
        [ItemModel(probs=(1.0,), costs=(1,))], outer=constraints.cardinality(3, 1)
    )
    assert validate_instance(inst)


def test_truncated_cost_values():
    item = ItemModel(probs=(0.5, 0.5), costs=(1, 2))
    assert expected_truncated_cost(item, 1) == 1.0
    assert expected_truncated_cost(item, 2) == 1.5
    assert expected_truncated_cost(item, 0) == 0.0
    with pytest.raises(ValueError):
        expected_truncated_cost(item, -1)


@given(
    st.lists(st.floats(0.01, 1), min_size=1, max_size=4),
    st.lists(st.integers(0, 10), min_size=2, max_size=2),
)
@settings(max_examples=60)
def test_truncated_cost_monotone_and_capped(raw_probs, ts):
    probs = tuple(p / sum(raw_probs) for p in raw_probs)
    costs = tuple(range(1, len(probs) + 1))
    item = ItemModel(probs=probs, costs=costs)
    lo, hi = sorted(ts)
    assert expected_truncated_cost(item, lo) <= expected_truncated_cost(item, hi) + 1e-12
    assert expected_truncated_cost(item, hi) <= min(hi, costs[-1]) + 1e-12


def test_sampling_deterministic(pair_instance):
    a = sample_realization(pair_instance, 42)
    b = sample_realization(pair_instance, 42)
    assert_array_equal(a, b)
    assert a.dtype == np.int64


def test_sampling_degenerate_cases():
    one_state = build([ItemModel(probs=(1.0,), costs=(1,))] * 3, budget=4)
    assert_array_equal(sample_realization(one_state, 7), [1, 1, 1])
    point_mass = build([ItemModel(probs=(0.0, 1.0), costs=(1, 2))], budget=4)
    for seed in range(20):
        assert sample_realization(point_mass, seed)[0] == 2


def test_sampling_frequency(pair_instance):
    draws = np.array([sample_realization(pair_instance, s)[0] for s in range(10_000)])
    freq = np.mean(draws == 1)
    se = np.sqrt(0.25 / len(draws))
    assert abs(freq - 0.5) < 3 * se


def test_sampling_rejects_invalid():
    inst = build([ItemModel(probs=(0.5, 0.4), costs=(1, 2))])
    with pytest.raises(ValueError):
        sample_realization(inst, 0)


def test_masked_states():
    states = np.array([2, 1, 3])
    assert_array_equal(masked_states(states, {0, 2}), [2, 0, 3])
    assert_array_equal(masked_states(states, set()), [0, 0, 0])


def test_json_round_trip_bit_exact(pair_instance, partition_instance):
    for inst in (pair_instance, partition_instance):
        text = instance_to_json(inst)
        again = instance_from_json(text)
        assert again == inst
        assert instance_to_json(again) == text


def test_json_uses_one_based_ids(partition_instance):
    doc = json.loads(instance_to_json(partition_instance))
    assert doc["outer"]["blocks"] == [[1, 2], [3]]


def test_json_round_trip_explicit_outer():
    inst = build(
        [ItemModel(probs=(1.0,), costs=(1,))] * 3,
        outer=constraints.explicit(3, [[0, 1], [2]]),
    )
    doc = json.loads(instance_to_json(inst))
    assert doc["outer"]["maximal"] == [[1, 2], [3]]
    assert instance_from_json(instance_to_json(inst)) == inst


def test_slot_counts(pair_instance):
    assert_array_equal(pair_instance.slot_counts, [3, 3])
    blocked = build([ItemModel(probs=(1.0,), costs=(6,))], budget=5)
    assert_array_equal(blocked.slot_counts, [0])


def test_random_instances_serialize_for_every_outer_kind():
    # constructors must normalize array-backed ids into plain ints
    from stochsubmax.generators import random_instance

    seen = set()
    seed = 0
    while seen != {"cardinality", "partition", "explicit"}:
        inst = random_instance(seed)
        seen.add(inst.outer.kind)
        assert instance_from_json(instance_to_json(inst)) == inst
        seed += 1
