"""Integer-lattice state vectors, built-in utility families, and exhaustive checkers.

A state vector assigns each item an integer level in {0, ..., B}; level 0 means
"not selected". Utilities map state vectors to nonnegative reals and are expected
to be monotone and to have diminishing returns along coordinates (checked
exhaustively at desk scale by :func:`check_monotone` and
:func:`check_lattice_submodular`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationLimitError

ENUM_GUARD = 10**6

FAMILY_MODULAR = "weighted-modular"
FAMILY_CONCAVE = "concave-over-modular"
FAMILY_COVERAGE = "weighted-coverage-by-threshold"


def join(u, v) -> np.ndarray:
    """Componentwise maximum of two equal-length state vectors."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return np.maximum(u, v)


def meet(u, v) -> np.ndarray:
    """Componentwise minimum of two equal-length state vectors."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return np.minimum(u, v)


class UtilityOracle:
    """Deterministic nonnegative utility on state vectors.

    Subclasses are immutable after construction and safe to evaluate from
    multiple workers concurrently. ``value_batch`` evaluates a (N, n) array of
    state vectors row by row and must agree with ``value`` exactly.
    """

    family: str = ""

    def value(self, u) -> float:
        raise NotImplementedError

    def value_batch(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def n(self) -> int:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class WeightedModular(UtilityOracle):
    """f(u) = sum_i weights[i] * u[i], weights >= 0."""

    weights: tuple[float, ...]
    family = FAMILY_MODULAR

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.weights)

    def value(self, u) -> float:
        return float(np.dot(np.asarray(u, dtype=float), self.weights))

    def value_batch(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(states, dtype=float) @ np.asarray(self.weights)

    def params(self) -> dict:
        return {"weights": list(self.weights)}


@dataclass(frozen=True)
class ConcaveOverModular(UtilityOracle):
    """f(u) = g(sum_i weights[i] * u[i]) with g concave nondecreasing, g(0)=0.

    ``curve`` selects g: "cap" gives g(x) = min(x, theta), "sqrt" gives
    g(x) = sqrt(x).
    """

    weights: tuple[float, ...]
    curve: str = "sqrt"
    theta: float | None = None
    family = FAMILY_CONCAVE

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if self.curve not in ("cap", "sqrt"):
            raise ValueError(f"unknown curve {self.curve!r}")
        if self.curve == "cap" and (self.theta is None or self.theta < 0):
            raise ValueError("curve 'cap' requires theta >= 0")

    @property
    def n(self) -> int:
        return len(self.weights)

    def _g(self, x):
        if self.curve == "cap":
            return np.minimum(x, self.theta)
        return np.sqrt(x)

    def value(self, u) -> float:
        return float(self._g(np.dot(np.asarray(u, dtype=float), self.weights)))

    def value_batch(self, states: np.ndarray) -> np.ndarray:
        return self._g(np.asarray(states, dtype=float) @ np.asarray(self.weights))

    def params(self) -> dict:
        out = {"weights": list(self.weights), "curve": self.curve}
        if self.theta is not None:
            out["theta"] = self.theta
        return out


@dataclass(frozen=True)
class ThresholdCoverage(UtilityOracle):
    """Prefix coverage of a weighted ground list.

    Item i at level s covers the first ``rates[i] * s`` ground elements; the
    utility is the total weight of all covered elements (the union of the
    per-item prefixes, i.e. the longest one).
    """

    rates: tuple[int, ...]
    element_weights: tuple[float, ...]
    family = FAMILY_COVERAGE

    def __post_init__(self):
        if any(r < 0 or int(r) != r for r in self.rates):
            raise ValueError("rates must be nonnegative integers")
        if any(w < 0 for w in self.element_weights):
            raise ValueError("element weights must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.rates)

    def _prefix(self) -> np.ndarray:
        w = np.asarray(self.element_weights, dtype=float)
        return np.concatenate([[0.0], np.cumsum(w)])

    def value(self, u) -> float:
        m = len(self.element_weights)
        lengths = np.minimum(np.asarray(u) * np.asarray(self.rates), m)
        return float(self._prefix()[int(lengths.max(initial=0))])

    def value_batch(self, states: np.ndarray) -> np.ndarray:
        m = len(self.element_weights)
        lengths = np.minimum(np.asarray(states) * np.asarray(self.rates), m)
        return self._prefix()[lengths.max(axis=1)]

    def params(self) -> dict:
        return {"rates": list(self.rates), "element_weights": list(self.element_weights)}


_FAMILIES = {
    FAMILY_MODULAR: WeightedModular,
    FAMILY_CONCAVE: ConcaveOverModular,
    FAMILY_COVERAGE: ThresholdCoverage,
}


def make_utility(descriptor: dict, n: int) -> UtilityOracle:
    """Build a utility oracle from its serialized {family, params} descriptor."""
    family = descriptor.get("family")
    params = descriptor.get("params", {})
    if family == FAMILY_MODULAR:
        f = WeightedModular(weights=tuple(params["weights"]))
    elif family == FAMILY_CONCAVE:
        f = ConcaveOverModular(
            weights=tuple(params["weights"]),
            curve=params.get("curve", "sqrt"),
            theta=params.get("theta"),
        )
    elif family == FAMILY_COVERAGE:
        f = ThresholdCoverage(
            rates=tuple(params["rates"]),
            element_weights=tuple(params["element_weights"]),
        )
    else:
        raise ValueError(f"unknown utility family {family!r}")
    if f.n != n:
        raise ValueError(f"utility is over {f.n} items, instance has {n}")
    return f


def utility_descriptor(f: UtilityOracle) -> dict:
    return {"family": f.family, "params": f.params()}


def _guard(n: int, max_level: int):
    if (max_level + 1) ** n > ENUM_GUARD:
        raise EnumerationLimitError(
            f"(B+1)^n = {(max_level + 1) ** n} exceeds the enumeration guard {ENUM_GUARD}"
        )


def _grid(n: int, max_level: int):
    return itertools.product(range(max_level + 1), repeat=n)


def check_monotone(f: UtilityOracle, n: int, max_level: int):
    """Exhaustively verify f(u) <= f(v) for all comparable u <= v.

    Returns (True, None) or (False, (u, v)) with the first violating pair in
    lexicographic (u, v) order. Refuses when (B+1)^n exceeds the guard.
    """
    _guard(n, max_level)
    values = {u: f.value(np.array(u)) for u in _grid(n, max_level)}
    for u in _grid(n, max_level):
        fu = values[u]
        for v in _grid(n, max_level):
            if all(a <= b for a, b in zip(u, v)) and fu > values[v] + 1e-9:
                return False, (np.array(u), np.array(v))
    return True, None


def check_lattice_submodular(f: UtilityOracle, n: int, max_level: int):
    """Exhaustively verify diminishing returns along coordinates.

    Checks f(u v s*1_i) - f(u) >= f(v v s*1_i) - f(v) for every comparable pair
    u <= v, level s, and coordinate i, with 1e-9 slack for float round-off.
    Returns (True, None) or (False, (u, v, s, i)) with the first violation in
    lexicographic (u, v, s, i) order.
    """
    _guard(n, max_level)
    values = {u: f.value(np.array(u)) for u in _grid(n, max_level)}

    def bumped(u, i, s):
        w = list(u)
        w[i] = max(w[i], s)
        return tuple(w)

    for u in _grid(n, max_level):
        for v in _grid(n, max_level):
            if not all(a <= b for a, b in zip(u, v)):
                continue
            for s in range(max_level + 1):
                for i in range(n):
                    gain_u = values[bumped(u, i, s)] - values[u]
                    gain_v = values[bumped(v, i, s)] - values[v]
                    if gain_u < gain_v - 1e-9:
                        return False, (np.array(u), np.array(v), s, i)
    return True, None
