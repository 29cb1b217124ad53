"""The executable adaptive policy and its simulation harness.

One run: sample each item into a candidate set with its solution marginal,
trim the set to the outer family with the set-level scheme, draw a start slot
per surviving item from the fractional solution, then visit survivors in
nondecreasing start-slot order (least index on ties). An item is selected iff
the cost spent so far is at most its start slot; only then is its state
revealed and its realized cost added. Selection therefore never overshoots the
budget: spent <= slot <= budget - worst cost of the item being selected.

States of unselected items are never read; every trace carries the reveal log
so tests can audit that boundary.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass

import numpy as np

from .constraints import OuterConstraint, is_independent
from .greedy import SlotSolution, certify_solution
from .model import Instance, sample_realization_batch
from .parallel import map_blocks, split_blocks
from .rounding import BalancedCrs, schedule_keep_set, support
from .seeds import derive_rng


@dataclass(frozen=True)
class PolicyTrace:
    """Full record of one policy run."""

    sampled: tuple[int, ...]
    kept: tuple[int, ...]
    start_times: dict
    order: tuple[int, ...]
    records: tuple  # (item, start_time, gate_passed, state | None, cost | None)
    spent_history: tuple[int, ...]
    selected: tuple[int, ...]
    utility: float
    reads: tuple[int, ...]

    @property
    def total_cost(self) -> int:
        return self.spent_history[-1] if self.spent_history else 0


class RevealLog:
    """Realization wrapper that records which coordinates were read."""

    def __init__(self, states):
        self._states = np.asarray(states)
        self.reads: list[int] = []

    def reveal(self, item: int) -> int:
        self.reads.append(item)
        return int(self._states[item])


def check_solution_shape(instance: Instance, sol: SlotSolution):
    """Structural checks: entry ranges and marginal consistency."""
    if sol.n != instance.n or sol.budget != instance.budget:
        raise ValueError("solution does not match the instance dimensions")
    slots = instance.slot_counts
    sums = np.zeros(instance.n)
    for i, t, v in sol.entries:
        if not (0 <= i < instance.n and 1 <= t <= int(slots[i])):
            raise ValueError(f"solution entry ({i}, {t}) is out of slot range")
        if not -1e-12 <= v <= 1 + 1e-9:
            raise ValueError(f"solution value {v!r} outside [0, 1]")
        sums[i] += v
    if np.max(np.abs(sums - sol.marginals), initial=0.0) > 1e-9:
        raise ValueError("solution marginals are inconsistent with its entries")


def _gate_scan(instance: Instance, kept, times: dict, reveal: RevealLog):
    """Visit kept items by (start slot, index); select while spent <= slot."""
    order = sorted(kept, key=lambda i: (times[i], i))
    records = []
    spent_history = []
    selected = []
    spent = 0
    for item in order:
        if spent <= times[item]:
            state = reveal.reveal(item)
            cost = int(instance.cost_matrix[item, state - 1])
            spent += cost
            selected.append(item)
            records.append((item, times[item], True, state, cost))
        else:
            records.append((item, times[item], False, None, None))
        spent_history.append(spent)
    return tuple(order), tuple(records), tuple(spent_history), tuple(selected)


def _run_policy(instance, f, outer, crs, sol, states, rng):
    reveal = RevealLog(states)
    sampled = sorted(
        int(i) for i in np.nonzero(rng.random(instance.n) < sol.marginals)[0]
    )
    priorities = rng.random(instance.n)
    kept = sorted(crs.keep(outer, sampled, priorities))
    times = {i: sol.sample_slot(i, rng) for i in kept}
    order, records, spent_history, selected = _gate_scan(instance, kept, times, reveal)
    final = np.zeros(instance.n, dtype=np.int64)
    for item, _, passed, state, _ in records:
        if passed:
            final[item] = state
    utility = float(f.value(final))
    return PolicyTrace(
        sampled=tuple(sampled),
        kept=tuple(kept),
        start_times=times,
        order=order,
        records=records,
        spent_history=spent_history,
        selected=selected,
        utility=utility,
        reads=tuple(reveal.reads),
    )


def execute(
    instance: Instance,
    f,
    outer: OuterConstraint,
    crs: BalancedCrs,
    sol: SlotSolution,
    realization,
    seed: int,
    certify_scale: float | None = None,
) -> PolicyTrace:
    """One policy run against a fixed realization.

    ``certify_scale`` optionally enforces full feasibility certification of the
    solution before running (the pipeline passes its stopping scale here);
    structural solution checks always run.
    """
    instance.require_valid()
    check_solution_shape(instance, sol)
    if certify_scale is not None:
        report = certify_solution(instance, outer, sol, certify_scale)
        if not report.passed:
            raise ValueError(
                f"solution fails certification at scale {certify_scale}: "
                f"{report.failures()[:3]}"
            )
    states = np.asarray(realization, dtype=np.int64)
    if states.shape != (instance.n,) or np.any(states < 1) or np.any(states > instance.B):
        raise ValueError("realization must assign each item a state in 1..B")
    return _run_policy(instance, f, outer, crs, sol, states, derive_rng(seed, "policy"))


@dataclass(frozen=True)
class SimulationSummary:
    runs: int
    mean_utility: float
    se: float
    inner_violations: int
    outer_violations: int
    adaptivity_violations: int


def _simulate_block(instance, f, outer, crs, sol, seed, block):
    b, size = block
    rng = derive_rng(seed, "simulate", b)
    states = sample_realization_batch(instance, rng, size)
    total = 0.0
    sumsq = 0.0
    inner_v = outer_v = adapt_v = 0
    for r in range(size):
        trace = _run_policy(instance, f, outer, crs, sol, states[r], rng)
        u = trace.utility
        total += u
        sumsq += u * u
        if trace.total_cost > instance.budget:
            inner_v += 1
        if not is_independent(outer, trace.selected):
            outer_v += 1
        if list(trace.reads) != list(trace.selected):
            adapt_v += 1
    return size, total, sumsq, inner_v, outer_v, adapt_v


def simulate_batch(
    instance: Instance,
    f,
    outer: OuterConstraint,
    crs: BalancedCrs,
    sol: SlotSolution,
    runs: int,
    seed: int,
    workers: int = 1,
) -> SimulationSummary:
    """Run the policy many times and tally utility plus constraint violations."""
    if runs < 2:
        raise ValueError("need at least 2 runs")
    instance.require_valid()
    check_solution_shape(instance, sol)
    fn = functools.partial(_simulate_block, instance, f, outer, crs, sol, seed)
    partials = map_blocks(fn, split_blocks(runs), workers)
    count = sum(p[0] for p in partials)
    total = sum(p[1] for p in partials)
    sumsq = sum(p[2] for p in partials)
    mean = total / count
    var = max(0.0, (sumsq - count * mean * mean) / (count - 1))
    return SimulationSummary(
        runs=count,
        mean_utility=mean,
        se=(var / count) ** 0.5,
        inner_violations=sum(p[3] for p in partials),
        outer_violations=sum(p[4] for p in partials),
        adaptivity_violations=sum(p[5] for p in partials),
    )


def estimate_policy_value(
    instance, f, outer, crs, sol, runs: int, seed: int, workers: int = 1
) -> tuple[float, float]:
    """Mean final utility over independent (policy randomness, realization) pairs."""
    summary = simulate_batch(instance, f, outer, crs, sol, runs, seed, workers)
    return summary.mean_utility, summary.se


@dataclass(frozen=True)
class DominanceReport:
    trials: int
    violations: tuple[dict, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def coupled_dominance_check(
    instance: Instance,
    f,
    outer: OuterConstraint,
    crs: BalancedCrs,
    sol: SlotSolution,
    trials: int,
    seed: int,
) -> DominanceReport:
    """Per-sample dominance of the policy over the combined pruning map.

    Each trial shares one realization, one sampled set, one set-level scheme
    outcome, and one start-slot draw per sampled item between (a) a policy run
    and (b) the combined pruning of the thinned state vector. The policy's
    selection must cover the pruned support coordinatewise, hence its utility
    must be at least the pruned vector's utility.
    """
    instance.require_valid()
    check_solution_shape(instance, sol)
    rng = derive_rng(seed, "dominance")
    violations = []
    for trial in range(trials):
        states = sample_realization_batch(instance, rng, 1)[0]
        sampled = sorted(
            int(i) for i in np.nonzero(rng.random(instance.n) < sol.marginals)[0]
        )
        v = np.zeros(instance.n, dtype=np.int64)
        v[sampled] = states[sampled]
        priorities = rng.random(instance.n)
        kept = crs.keep(outer, sampled, priorities)
        times = {i: sol.sample_slot(i, rng) for i in sampled}

        reveal = RevealLog(states)
        _, records, _, selected = _gate_scan(
            instance, sorted(kept), {i: times[i] for i in kept}, reveal
        )
        policy_vec = np.zeros(instance.n, dtype=np.int64)
        for item, _, passed, state, _ in records:
            if passed:
                policy_vec[item] = state
        policy_utility = float(f.value(policy_vec))

        sched = schedule_keep_set(instance, v, times)
        pruned = np.zeros(instance.n, dtype=np.int64)
        for i in kept & sched:
            pruned[i] = v[i]
        pruned_utility = float(f.value(pruned))

        covered = bool(np.all((pruned == 0) | (policy_vec == pruned)))
        if not covered or policy_utility < pruned_utility - 1e-12:
            violations.append(
                {
                    "trial": trial,
                    "realization": [int(s) for s in states],
                    "sampled": [i + 1 for i in sampled],
                    "kept": sorted(i + 1 for i in kept),
                    "times": {i + 1: int(times[i]) for i in sampled},
                    "selected": [i + 1 for i in selected],
                    "policy_vector": [int(s) for s in policy_vec],
                    "pruned_vector": [int(s) for s in pruned],
                    "policy_utility": policy_utility,
                    "pruned_utility": pruned_utility,
                }
            )
    return DominanceReport(trials=trials, violations=tuple(violations))


def trace_to_json(trace: PolicyTrace) -> str:
    """One-line JSON export of a trace (1-based item ids)."""
    doc = {
        "sampled": [i + 1 for i in trace.sampled],
        "kept": [i + 1 for i in trace.kept],
        "start_times": {str(i + 1): int(t) for i, t in sorted(trace.start_times.items())},
        "order": [i + 1 for i in trace.order],
        "records": [
            {
                "item": item + 1,
                "start_time": int(t),
                "selected": passed,
                "state": state,
                "cost": cost,
            }
            for item, t, passed, state, cost in trace.records
        ],
        "spent": list(trace.spent_history),
        "selected": [i + 1 for i in trace.selected],
        "utility": trace.utility,
        "reads": [i + 1 for i in trace.reads],
    }
    return json.dumps(doc, separators=(",", ":"))


def traces_to_jsonl(traces) -> str:
    return "\n".join(trace_to_json(t) for t in traces) + "\n"
