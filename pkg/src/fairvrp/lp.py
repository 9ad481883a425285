"""Incremental LP model with primal/dual solutions, solved by HiGHS.

The HiGHS model is kept alive and edited in place, so every re-solve after
adding columns, rows or changing bounds starts from the previous basis.

Duals follow the convention ``y_i = d(objective)/d(rhs_i)`` for a minimization,
so ``<=`` rows have ``y <= 0``, ``>=`` rows have ``y >= 0``, and the reduced
cost of column ``j`` is ``c_j - sum_i y_i a_ij``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import highspy
import numpy as np
import scipy.sparse as sp

SENSES = ("<=", "=", ">=")
_INF = highspy.kHighsInf
_STATUS = {
    highspy.HighsModelStatus.kOptimal: "optimal",
    highspy.HighsModelStatus.kInfeasible: "infeasible",
    highspy.HighsModelStatus.kUnbounded: "unbounded",
    highspy.HighsModelStatus.kUnboundedOrInfeasible: "infeasible",
}


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | iteration-limit | unbounded
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: float = float("nan")
    message: str = ""
    col_reduced_costs: Optional[np.ndarray] = field(default=None, repr=False)
    dual_objective: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _row_bounds(sense: str, rhs: float):
    if sense == "<=":
        return -_INF, rhs
    if sense == ">=":
        return rhs, _INF
    return rhs, rhs


def _hinf(v: float) -> float:
    return _INF if v == np.inf else (-_INF if v == -np.inf else v)


class LpModel:
    """Minimization LP whose row and column indices never change once assigned."""

    def __init__(self):
        self.obj: list = []
        self.lb: list = []
        self.ub: list = []
        self.col_coefs: list = []  # per column: dict row -> coef
        self.col_names: list = []
        self.senses: list = []
        self.rhs: list = []
        self.row_names: list = []
        self._packed: list = []  # per column: cached (rows, values) arrays or None
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)

    @property
    def n_cols(self) -> int:
        return len(self.obj)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def add_row(self, sense: str, rhs: float, name: str = "", coefs: Optional[dict] = None) -> int:
        """Append a row; ``coefs`` maps existing columns to their coefficients."""
        if sense not in SENSES:
            raise ValueError(f"unknown row sense {sense!r}")
        coefs = {c: float(v) for c, v in (coefs or {}).items() if v != 0.0}
        for c in coefs:
            if not 0 <= c < self.n_cols:
                raise IndexError(f"column {c} does not exist")
        row = len(self.rhs)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name)
        for c, v in coefs.items():
            self.col_coefs[c][row] = v
            self._packed[c] = None
        lo, hi = _row_bounds(sense, float(rhs))
        idx = np.fromiter(coefs.keys(), dtype=np.int32, count=len(coefs))
        val = np.fromiter(coefs.values(), dtype=float, count=len(coefs))
        self.h.addRow(lo, hi, len(coefs), idx, val)
        return row

    def add_column(self, obj: float, coefs: dict, lb: float = 0.0, ub: float = np.inf,
                   name: str = "") -> int:
        for r in coefs:
            if not 0 <= r < self.n_rows:
                raise IndexError(f"row {r} does not exist")
        coefs = {r: float(v) for r, v in coefs.items() if v != 0.0}
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.col_coefs.append(coefs)
        self._packed.append(None)
        self.col_names.append(name)
        idx = np.fromiter(coefs.keys(), dtype=np.int32, count=len(coefs))
        val = np.fromiter(coefs.values(), dtype=float, count=len(coefs))
        self.h.addCol(float(obj), _hinf(float(lb)), _hinf(float(ub)), len(coefs), idx, val)
        return len(self.obj) - 1

    def set_coef(self, row: int, col: int, value: float):
        self._packed[col] = None
        if value == 0.0:
            self.col_coefs[col].pop(row, None)
        else:
            self.col_coefs[col][row] = float(value)
        self.h.changeCoeff(row, col, float(value))

    def set_bounds(self, col: int, lb: float, ub: float):
        if self.lb[col] == lb and self.ub[col] == ub:
            return
        self.lb[col] = float(lb)
        self.ub[col] = float(ub)
        self.h.changeColBounds(col, _hinf(float(lb)), _hinf(float(ub)))

    def set_obj(self, col: int, value: float):
        if self.obj[col] == value:
            return
        self.obj[col] = float(value)
        self.h.changeColCost(col, float(value))

    def set_rhs(self, row: int, value: float):
        self.rhs[row] = float(value)
        lo, hi = _row_bounds(self.senses[row], float(value))
        self.h.changeRowBounds(row, lo, hi)

    def matrix(self) -> sp.csc_matrix:
        packed = self._packed
        for j, p in enumerate(packed):
            if p is None:
                c = self.col_coefs[j]
                packed[j] = (np.fromiter(c.keys(), dtype=np.int64, count=len(c)),
                             np.fromiter(c.values(), dtype=float, count=len(c)))
        indptr = np.zeros(self.n_cols + 1, dtype=np.int64)
        np.cumsum([len(p[0]) for p in packed], out=indptr[1:])
        rows = np.concatenate([p[0] for p in packed]) if packed else np.zeros(0, dtype=np.int64)
        data = np.concatenate([p[1] for p in packed]) if packed else np.zeros(0)
        return sp.csc_matrix((data, rows, indptr), shape=(self.n_rows, self.n_cols))

    def column_activity(self, x: np.ndarray) -> np.ndarray:
        return self.matrix() @ x


def lp_solve(m: LpModel, warm=None, time_limit: Optional[float] = None) -> LpSolution:
    """Solve ``m`` starting from the basis of its previous solve. ``warm=False``
    discards that basis first."""
    if m.n_cols == 0:
        raise ValueError("model has no columns")
    h = m.h
    if warm is False:
        h.clearSolver()
    h.setOptionValue("time_limit", float(time_limit) if time_limit is not None else _INF)
    h.run()
    ms = h.getModelStatus()
    if ms not in _STATUS:
        # a stale basis can stall the simplex; retry once from scratch
        h.clearSolver()
        h.run()
        ms = h.getModelStatus()
    status = _STATUS.get(ms, "iteration-limit")
    message = h.modelStatusToString(ms)
    if status != "optimal":
        return LpSolution(status, message=message)
    sol = h.getSolution()
    x = np.array(sol.col_value, dtype=float)
    duals = np.array(sol.row_dual, dtype=float)
    red = np.array(sol.col_dual, dtype=float)
    lb = np.array(m.lb)
    ub = np.array(m.ub)
    rhs = np.array(m.rhs, dtype=float)
    dual_obj = float(rhs @ duals)
    # nonbasic columns sit at the bound matching the sign of their reduced cost
    at = np.where(red > 0, lb, np.where(red < 0, np.where(np.isinf(ub), lb, ub), 0.0))
    dual_obj += float(red @ at)
    return LpSolution("optimal", x=x, duals=duals, objective=float(h.getInfo().objective_function_value),
                      message=message, col_reduced_costs=red, dual_objective=dual_obj)


def primal_residual(m: LpModel, x: np.ndarray) -> float:
    act = m.column_activity(x)
    worst = 0.0
    for a, s, b in zip(act, m.senses, m.rhs):
        if s == "<=":
            worst = max(worst, a - b)
        elif s == ">=":
            worst = max(worst, b - a)
        else:
            worst = max(worst, abs(a - b))
    worst = max(worst, float(np.max(np.array(m.lb) - x, initial=0.0)))
    worst = max(worst, float(np.max(x - np.array(m.ub), initial=0.0)))
    return worst
