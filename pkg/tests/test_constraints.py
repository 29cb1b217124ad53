import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochsubmax.constraints import (
    cardinality,
    explicit,
    feasible_sets,
    in_scaled_polytope,
    is_independent,
    outer_from_json,
    outer_to_json,
    partition,
    polytope_inequalities,
    validate_outer,
)
from stochsubmax.errors import EnumerationLimitError, NoCompactPolytopeError


def test_cardinality_membership():
    outer = cardinality(3, 2)
    assert is_independent(outer, {0, 2})
    assert not is_independent(outer, {0, 1, 2})
    assert is_independent(outer, set())


def test_partition_membership():
    outer = partition(3, [[0, 1], [2]], [1, 1])
    assert not is_independent(outer, {0, 1})
    assert is_independent(outer, {0, 2})


def test_explicit_membership():
    outer = explicit(3, [[0, 1], [2]])
    assert is_independent(outer, {0})
    assert is_independent(outer, {0, 1})
    assert not is_independent(outer, {0, 2})


def test_cardinality_polytope():
    rows = polytope_inequalities(cardinality(3, 2))
    assert len(rows) == 1
    a, b = rows[0]
    assert list(a) == [1, 1, 1] and b == 2


def test_partition_polytope():
    rows = polytope_inequalities(partition(3, [[0, 1], [2]], [1, 1]))
    assert [(list(a), b) for a, b in rows] == [([1, 1, 0], 1.0), ([0, 0, 1], 1.0)]


def test_vacuous_cardinality_polytope():
    rows = polytope_inequalities(cardinality(4, 4))
    assert [(list(a), b) for a, b in rows] == [([1, 1, 1, 1], 4.0)]


def test_explicit_polytope_refused():
    with pytest.raises(NoCompactPolytopeError):
        polytope_inequalities(explicit(2, [[0]]))


def test_scaled_membership_examples():
    outer = cardinality(3, 2)
    x = [0.5, 0.5, 0.5]
    assert in_scaled_polytope(outer, x, 1.0)
    assert not in_scaled_polytope(outer, x, 0.5)
    assert in_scaled_polytope(outer, [0.0, 0.0, 0.0], 0.01)


def test_membership_matches_oracle_on_vertices():
    constraints_to_try = [
        cardinality(10, 3),
        cardinality(10, 10),
        partition(10, [[0, 1, 2], [3, 4], [5, 6, 7, 8], [9]], [2, 1, 2, 1]),
    ]
    for outer in constraints_to_try:
        for bits in itertools.product((0, 1), repeat=10):
            s = {i for i, b in enumerate(bits) if b}
            assert is_independent(outer, s) == in_scaled_polytope(
                outer, np.array(bits, dtype=float), 1.0
            )


def test_explicit_hull_membership():
    outer = explicit(4, [[0, 1], [2, 3]])
    assert in_scaled_polytope(outer, [1.0, 1.0, 0.0, 0.0], 1.0)
    assert not in_scaled_polytope(outer, [1.0, 0.0, 1.0, 0.0], 1.0)
    # midpoint of two member indicators stays in the hull
    assert in_scaled_polytope(outer, [0.5, 0.5, 0.5, 0.5], 1.0)
    assert in_scaled_polytope(outer, [0.25, 0.25, 0.25, 0.25], 0.5)
    assert not in_scaled_polytope(outer, [0.5, 0.5, 0.5, 0.5], 0.5)
    assert in_scaled_polytope(outer, [0.0, 0.0, 0.0, 0.0], 0.0)


def test_explicit_hull_guard():
    outer = explicit(11, [list(range(11))])
    with pytest.raises(EnumerationLimitError):
        feasible_sets(outer)


def test_feasible_sets_is_downward_closure():
    outer = explicit(3, [[0, 1], [2]])
    fam = feasible_sets(outer)
    assert frozenset() in fam
    assert frozenset({0, 1}) in fam
    assert frozenset({0, 2}) not in fam
    for s in fam:
        for r in range(len(s)):
            for sub in itertools.combinations(sorted(s), r):
                assert frozenset(sub) in fam


@given(st.integers(0, 2**8 - 1), st.integers(0, 2**8 - 1), st.integers(1, 4))
@settings(max_examples=80)
def test_downward_closure(mask_s, mask_drop, k):
    outer = cardinality(8, k)
    s = {i for i in range(8) if mask_s >> i & 1}
    t = {i for i in s if not (mask_drop >> i & 1)}
    if is_independent(outer, s):
        assert is_independent(outer, t)


def test_empty_set_always_feasible():
    for outer in (cardinality(3, 0), partition(3, [[0, 1], [2]], [0, 0]), explicit(3, [[]])):
        assert is_independent(outer, set())


def test_validate_outer_messages():
    assert validate_outer(partition(3, [[0, 1]], [1]), 3)  # misses item 2
    assert validate_outer(partition(3, [[0, 1], [1, 2]], [1, 1]), 3)  # overlap
    assert validate_outer(cardinality(3, -1), 3)
    assert validate_outer(explicit(3, []), 3)
    assert validate_outer(explicit(3, [[7]]), 3)
    assert not validate_outer(partition(3, [[0, 1], [2]], [1, 1]), 3)


def test_json_round_trip():
    for outer in (
        cardinality(3, 2),
        partition(3, [[0, 1], [2]], [1, 1]),
        explicit(3, [[0, 1], [2]]),
    ):
        assert outer_from_json(outer_to_json(outer), 3) == outer
