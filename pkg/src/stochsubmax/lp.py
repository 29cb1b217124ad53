"""Time-indexed relaxation rows and a dense bounded-variable simplex.

Variables are start-slot indicators x(i, t), one per item i and feasible start
slot t in {1, ..., budget - worst cost of i}. The row set is fixed by the
instance and outer constraint:

  * per item: sum_t x(i, t) <= 1
  * per outer inequality (a, b): sum_i a_i * sum_t x(i, t) <= b
  * per time t in {1..budget}: sum_i E[min(cost_i, t)] * sum_{t' <= t} x(i, t') <= 2t

All row coefficients are nonnegative and x = 0 is feasible, so the simplex
starts from the slack basis and needs no phase 1. Bland's least-index rule is
used for both entering and leaving choices (termination over speed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import OuterConstraint, polytope_inequalities
from .errors import LpStallError
from .model import Instance, expected_truncated_cost

ROW_TOL = 1e-9
PIVOT_TOL = 1e-9


@dataclass(frozen=True)
class SlotProgram:
    """Maximization LP over start-slot variables with 0 <= x <= 1 bounds."""

    variables: tuple[tuple[int, int], ...]  # (item, slot), slot 1-based
    row_labels: tuple[tuple, ...]
    row_coeffs: np.ndarray  # (rows, vars)
    row_bounds: np.ndarray  # (rows,)
    objective: np.ndarray | None = None
    var_index: dict = field(default_factory=dict, repr=False)

    def column(self, item: int, slot: int) -> int:
        return self.var_index[(item, slot)]


@dataclass(frozen=True)
class LpSolution:
    values: np.ndarray
    objective: float
    iterations: int


def build_slot_program(instance: Instance, outer: OuterConstraint) -> SlotProgram:
    """Materialize the full relaxation row set for an instance.

    Items whose worst-state cost leaves no feasible start slot get no
    variables. Raises for outer kinds without a compact polytope.
    """
    instance.require_valid()
    ineqs = polytope_inequalities(outer)  # raises NoCompactPolytopeError for explicit
    slots = instance.slot_counts
    variables = [
        (i, t) for i in range(instance.n) for t in range(1, int(slots[i]) + 1)
    ]
    var_index = {v: j for j, v in enumerate(variables)}
    nv = len(variables)

    labels: list[tuple] = []
    coeffs: list[np.ndarray] = []
    bounds: list[float] = []

    for i in range(instance.n):
        if slots[i] == 0:
            continue
        row = np.zeros(nv)
        for t in range(1, int(slots[i]) + 1):
            row[var_index[(i, t)]] = 1.0
        labels.append(("item-cap", i))
        coeffs.append(row)
        bounds.append(1.0)

    for r, (a, b) in enumerate(ineqs):
        row = np.zeros(nv)
        for (i, t), j in var_index.items():
            row[j] = a[i]
        labels.append(("outer", r))
        coeffs.append(row)
        bounds.append(float(b))

    for t in range(1, instance.budget + 1):
        row = np.zeros(nv)
        for i in range(instance.n):
            if slots[i] == 0:
                continue
            etc = expected_truncated_cost(instance.items[i], t)
            for tp in range(1, min(t, int(slots[i])) + 1):
                row[var_index[(i, tp)]] = etc
        labels.append(("time", t))
        coeffs.append(row)
        bounds.append(2.0 * t)

    return SlotProgram(
        variables=tuple(variables),
        row_labels=tuple(labels),
        row_coeffs=np.array(coeffs).reshape(len(labels), nv),
        row_bounds=np.array(bounds, dtype=float),
        var_index=var_index,
    )


def program_dump(program: SlotProgram, objective=None) -> str:
    """Plain-text dump, one constraint row per line."""
    names = [f"x({i + 1},{t})" for i, t in program.variables]
    lines = []
    if objective is None:
        objective = program.objective
    if objective is not None:
        terms = " + ".join(
            f"{c:g}*{nm}" for c, nm in zip(objective, names) if c != 0
        )
        lines.append(f"max: {terms or '0'}")
    for label, row, bound in zip(
        program.row_labels, program.row_coeffs, program.row_bounds
    ):
        terms = " + ".join(f"{c:g}*{nm}" for c, nm in zip(row, names) if c != 0)
        lines.append(f"{label}: {terms or '0'} <= {bound:g}")
    lines.append("bounds: 0 <= x <= 1")
    return "\n".join(lines) + "\n"


def solve_lp(program: SlotProgram, objective=None) -> LpSolution:
    """Maximize the objective over the program rows and [0, 1] box."""
    if objective is None:
        objective = program.objective
    if objective is None:
        raise ValueError("no objective given")
    obj = np.asarray(objective, dtype=float)
    nv = len(program.variables)
    if obj.shape != (nv,):
        raise ValueError(f"objective must have {nv} coefficients")
    values, value, iters = simplex_max(
        obj, program.row_coeffs, program.row_bounds, np.ones(nv)
    )
    lhs = program.row_coeffs @ values
    if np.any(lhs > program.row_bounds + ROW_TOL):
        raise LpStallError(iters, value)
    return LpSolution(values=values, objective=value, iterations=iters)


def simplex_max(obj, A, b, upper, max_iters: int = 20000):
    """Bounded-variable primal simplex for max c.x, A x <= b, 0 <= x <= upper.

    Requires b >= 0 (x = 0 must be feasible). Returns (x, objective, iterations).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    obj = np.asarray(obj, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, nv = A.shape if A.size else (0, len(obj))
    if m == 0:
        x = np.where(obj > 0, np.where(np.isfinite(upper), upper, np.inf), 0.0)
        if np.any(np.isinf(x)):
            raise LpStallError(0, float("inf"))
        return x, float(obj @ x), 0
    if np.any(b < -ROW_TOL):
        raise ValueError("right-hand side must be nonnegative (x=0 feasible)")
    b = np.maximum(b, 0.0)

    total = nv + m
    A_full = np.hstack([A, np.eye(m)])
    c_full = np.concatenate([obj, np.zeros(m)])
    up_full = np.concatenate([upper, np.full(m, np.inf)])

    basis = list(range(nv, total))
    in_basis = np.zeros(total, dtype=bool)
    in_basis[basis] = True
    at_upper = np.zeros(total, dtype=bool)
    x = np.zeros(total)
    x[basis] = b

    for it in range(1, max_iters + 1):
        B = A_full[:, basis]
        try:
            y = np.linalg.solve(B.T, c_full[basis])
        except np.linalg.LinAlgError:
            raise LpStallError(it, float(c_full @ x)) from None

        entering = -1
        direction = 0
        for j in range(total):  # Bland: least-index eligible entering variable
            if in_basis[j]:
                continue
            d = c_full[j] - float(y @ A_full[:, j])
            if not at_upper[j] and d > PIVOT_TOL:
                entering, direction = j, 1
                break
            if at_upper[j] and d < -PIVOT_TOL:
                entering, direction = j, -1
                break
        if entering < 0:
            return x[:nv].copy(), float(c_full @ x), it - 1

        w = np.linalg.solve(B, A_full[:, entering])
        # moving the entering variable by direction*step changes basic values by -direction*step*w
        candidates = []
        if np.isfinite(up_full[entering]):
            candidates.append((up_full[entering], entering, -1, "flip"))
        for pos, bi in enumerate(basis):
            rate = -direction * w[pos]
            if rate < -PIVOT_TOL:
                candidates.append((x[bi] / -rate, bi, pos, "lower"))
            elif rate > PIVOT_TOL and np.isfinite(up_full[bi]):
                candidates.append(((up_full[bi] - x[bi]) / rate, bi, pos, "upper"))
        if not candidates:
            raise LpStallError(it, float(c_full @ x))
        step = min(c[0] for c in candidates)
        step = max(step, 0.0)
        chosen = min(
            (c for c in candidates if c[0] <= step + 1e-12), key=lambda c: c[1]
        )

        x[entering] += direction * step
        for pos, bi in enumerate(basis):
            x[bi] -= direction * step * w[pos]

        kind = chosen[3]
        if kind == "flip":
            at_upper[entering] = direction > 0
            x[entering] = up_full[entering] if direction > 0 else 0.0
        else:
            leaving, pos = chosen[1], chosen[2]
            x[leaving] = up_full[leaving] if kind == "upper" else 0.0
            at_upper[leaving] = kind == "upper"
            in_basis[leaving] = False
            in_basis[entering] = True
            basis[pos] = entering

    raise LpStallError(max_iters, float(c_full @ x))
