"""Restricted master problem over routes, column generation and the
restricted master heuristic.

Rows: customer partition, distance budget, fleet size, and per customer the
two links tying route lengths (by last customer) to the longest-route
variable ``eta`` and the shortest-route variable ``gamma``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .instance import Instance, Route, check_solution, solution_range
from .lp import LpModel, LpSolution, lp_solve
from .node import BnBNode
from .pricing import Pricer, arc_charges

ART_TOL = 1e-6
RC_TOL = 1e-6


class TimeLimitReached(Exception):
    pass


@dataclass
class DualValues:
    """Duals in the sign convention of the route reduced cost: ``lam``,
    ``alpha``, ``beta`` are nonnegative; ``cut_duals`` keep the LP sign
    (<= rows nonpositive, >= rows nonnegative)."""

    mu: list
    lam: float
    sigma: float
    alpha: list
    beta: list
    cut_duals: list
    big_m: float
    length_cost: float = 0.0


def zero_duals(inst: Instance, big_m: float = 0.0, n_cuts: int = 0) -> DualValues:
    z = [0.0] * (inst.n + 1)
    return DualValues(list(z), 0.0, 0.0, list(z), list(z), [0.0] * n_cuts, big_m)


def reduced_cost(route: Route, duals: DualValues, cuts=()) -> float:
    i = route.last
    rc = (duals.length_cost + duals.lam + duals.alpha[i] - duals.beta[i]) * route.length
    rc += duals.big_m * duals.beta[i]
    rc -= sum(duals.mu[j] for j in route.seq)
    rc -= duals.sigma
    for k, cut in enumerate(cuts):
        y = duals.cut_duals[k]
        if y:
            rc -= cut.coeff(route) * y
    return rc


def arc_flows(x, routes) -> dict:
    flows = {}
    for xr, r in zip(x, routes):
        if xr <= 1e-9:
            continue
        for a in r.arcs:
            flows[a] = flows.get(a, 0.0) + float(xr)
    return flows


def route_upper_bound(inst: Instance) -> float:
    """Crude bound on any route length (used as big-M without a budget)."""
    return float(sum(inst.dist.max(axis=1)))


class Rmp:
    """Column pool plus LP rows. ``objective`` is ``"range"`` or ``"distance"``."""

    def __init__(self, inst: Instance, objective: str = "range"):
        if objective not in ("range", "distance"):
            raise ValueError(objective)
        self.inst = inst
        self.objective = objective
        self.lp = LpModel()
        self.routes: list = []
        self.route_cols: list = []
        self.index: dict = {}
        self.cuts: list = []
        self.cut_rows: list = []
        self.cut_keys: set = set()
        lp = self.lp
        self.part = {i: lp.add_row("=", 1.0, f"part{i}") for i in inst.customers}
        self.fleet = lp.add_row("=", float(inst.K), "fleet")
        self.L = inst.budget
        ranged = objective == "range"
        self.budget = lp.add_row("<=", inst.budget, "budget") if ranged and inst.budget is not None else None
        self.big_m = inst.budget if inst.budget is not None else route_upper_bound(inst)
        self.maxlink = {}
        self.minlink = {}
        self.eta = self.gamma = self.order_row = None
        if ranged:
            for i in inst.customers:
                self.maxlink[i] = lp.add_row("<=", 0.0, f"max{i}")
                self.minlink[i] = lp.add_row(">=", -self.big_m, f"min{i}")
            self.order_row = lp.add_row("<=", 0.0, "gamma<=eta")
            self.eta = lp.add_column(1.0, {**{r: -1.0 for r in self.maxlink.values()}, self.order_row: -1.0},
                                     name="eta")
            self.gamma = lp.add_column(-1.0, {**{r: -1.0 for r in self.minlink.values()}, self.order_row: 1.0},
                                       name="gamma")
        self.penalty = 10.0 * self.big_m
        self.art_cols = []
        for i in inst.customers:
            self._add_art({self.part[i]: 1.0})
        self._add_art({self.fleet: 1.0})
        self._add_art({self.fleet: -1.0})
        if self.budget is not None:
            self._add_art({self.budget: -1.0})
        self.phase = 2
        self.node: Optional[BnBNode] = None

    # -- building -------------------------------------------------------

    def _add_art(self, coefs):
        self.art_cols.append(self.lp.add_column(self.penalty, coefs, name="art"))

    def effective_hi(self, node: BnBNode) -> float:
        hi = node.len_hi
        if self.L is not None:
            hi = min(hi, self.L)
        return hi

    def _col_coefs(self, r: Route) -> dict:
        coefs = {self.part[j]: 1.0 for j in r.seq}
        coefs[self.fleet] = 1.0
        if self.budget is not None:
            coefs[self.budget] = r.length
        if self.objective == "range":
            coefs[self.maxlink[r.last]] = r.length
            coefs[self.minlink[r.last]] = r.length - self.big_m
        for k, cut in enumerate(self.cuts):
            c = cut.coeff(r)
            if c:
                coefs[self.cut_rows[k]] = float(c)
        return coefs

    def add_route(self, r: Route) -> Optional[int]:
        """Add ``r`` to the pool; returns its index, or None if already pooled."""
        if r.seq in self.index:
            return None
        obj = r.length if (self.objective == "distance" and self.phase == 2) else 0.0
        col = self.lp.add_column(obj, self._col_coefs(r), name=f"r{len(self.routes)}")
        if self.node is not None and not self._enabled(r, self.node):
            self.lp.set_bounds(col, 0.0, 0.0)
        self.index[r.seq] = len(self.routes)
        self.routes.append(r)
        self.route_cols.append(col)
        return len(self.routes) - 1

    def add_cut(self, cut) -> bool:
        if cut.key in self.cut_keys:
            return False
        self.cut_keys.add(cut.key)
        coefs = {}
        for r, col in zip(self.routes, self.route_cols):
            c = cut.coeff(r)
            if c:
                coefs[col] = float(c)
        row = self.lp.add_row(cut.sense, cut.rhs, cut.kind, coefs)
        self.cuts.append(cut)
        self.cut_rows.append(row)
        if cut.sense == ">=":
            self._add_art({row: 1.0})
            if self.phase == 1:
                self.lp.set_obj(self.art_cols[-1], 1.0)
        return True

    def _enabled(self, r: Route, node: BnBNode) -> bool:
        if not node.route_allowed(r):
            return False
        return r.length <= self.effective_hi(node) + 1e-9

    def set_node(self, node: BnBNode):
        self.node = node
        lp = self.lp
        for r, col in zip(self.routes, self.route_cols):
            if self._enabled(r, node):
                lp.set_bounds(col, 0.0, math.inf)
            else:
                lp.set_bounds(col, 0.0, 0.0)
        if self.objective == "range":
            self.set_big_m(self.effective_hi(node))
            lp.set_bounds(self.eta, node.eta_lb, math.inf)
            lp.set_bounds(self.gamma, 0.0, node.gamma_ub)

    def set_big_m(self, big_m: float):
        if big_m == self.big_m:
            return
        self.big_m = big_m
        for i, row in self.minlink.items():
            self.lp.set_rhs(row, -big_m)
        for r, col in zip(self.routes, self.route_cols):
            self.lp.set_coef(self.minlink[r.last], col, r.length - big_m)

    def set_phase(self, phase: int):
        self.phase = phase
        lp = self.lp
        for col in self.art_cols:
            lp.set_obj(col, 1.0 if phase == 1 else self.penalty)
        if self.objective == "range":
            lp.set_obj(self.eta, 0.0 if phase == 1 else 1.0)
            lp.set_obj(self.gamma, 0.0 if phase == 1 else -1.0)
        else:
            for r, col in zip(self.routes, self.route_cols):
                lp.set_obj(col, 0.0 if phase == 1 else r.length)

    def set_penalty(self, penalty: float):
        self.penalty = penalty
        if self.phase == 2:
            for col in self.art_cols:
                self.lp.set_obj(col, penalty)

    # -- solving --------------------------------------------------------

    def solve_lp(self) -> LpSolution:
        return lp_solve(self.lp)

    def duals(self, sol: LpSolution) -> DualValues:
        y = sol.duals
        inst = self.inst
        mu = [0.0] * (inst.n + 1)
        alpha = [0.0] * (inst.n + 1)
        beta = [0.0] * (inst.n + 1)
        for i in inst.customers:
            mu[i] = float(y[self.part[i]])
            if self.objective == "range":
                alpha[i] = -float(y[self.maxlink[i]])
                beta[i] = float(y[self.minlink[i]])
        lam = -float(y[self.budget]) if self.budget is not None else 0.0
        length_cost = 1.0 if (self.objective == "distance" and self.phase == 2) else 0.0
        return DualValues(mu, lam, float(y[self.fleet]), alpha, beta,
                          [float(y[r]) for r in self.cut_rows],
                          self.big_m if self.objective == "range" else 0.0, length_cost)

    def route_values(self, sol: LpSolution) -> np.ndarray:
        return sol.x[self.route_cols] if self.route_cols else np.zeros(0)

    def artificial_total(self, sol: LpSolution) -> float:
        return float(sum(sol.x[c] for c in self.art_cols))

    def enabled_routes(self) -> list:
        return [k for k, col in enumerate(self.route_cols) if self.lp.ub[col] > 0]


@dataclass
class Relaxation:
    status: str  # optimal | infeasible
    objective: float = math.nan
    x: Optional[np.ndarray] = None
    eta: float = 0.0
    gamma: float = 0.0
    duals: Optional[DualValues] = None
    cg_iters: int = 0
    certificate: float = math.inf
    columns_added: int = 0

    def support(self, tol: float = 1e-6) -> list:
        return [k for k, v in enumerate(self.x) if v > tol]


def seed_rmp(rmp: Rmp):
    for i in rmp.inst.customers:
        rmp.add_route(Route.from_seq(rmp.inst, (i,)))


def build_initial_rmp(inst: Instance, node: Optional[BnBNode] = None, objective: str = "range") -> Rmp:
    rmp = Rmp(inst, objective)
    seed_rmp(rmp)
    rmp.set_node(node or BnBNode())
    return rmp


def _column_generation(rmp: Rmp, node: BnBNode, pricer: Pricer, k_best: int,
                       deadline: Optional[float]):
    iters = 0
    added = 0
    hi = rmp.effective_hi(node)
    while True:
        if deadline is not None and time.monotonic() > deadline:
            raise TimeLimitReached
        sol = rmp.solve_lp()
        iters += 1
        if not sol.optimal:
            raise RuntimeError(f"master LP failed: {sol.status} {sol.message}")
        duals = rmp.duals(sol)
        new = pricer.price_all(duals, rmp.cuts, node, k_best, len_hi=hi)
        n_new = 0
        for r in new:
            if rmp.add_route(r) is not None:
                n_new += 1
        added += n_new
        if n_new == 0:
            return sol, duals, iters, added


def solve_relaxation(rmp: Rmp, node: BnBNode, pricer: Pricer, k_best: int = 30,
                     deadline: Optional[float] = None) -> Relaxation:
    """Column generation at ``node`` until no negative reduced cost route exists."""
    rmp.set_node(node)
    total_iters = total_added = 0
    for _ in range(6):
        rmp.set_phase(2)
        sol, duals, iters, added = _column_generation(rmp, node, pricer, k_best, deadline)
        total_iters += iters
        total_added += added
        if rmp.artificial_total(sol) <= ART_TOL:
            break
        rmp.set_phase(1)
        sol1, _, iters, added = _column_generation(rmp, node, pricer, k_best, deadline)
        total_iters += iters
        total_added += added
        if sol1.objective > ART_TOL:
            rmp.set_phase(2)
            return Relaxation("infeasible", cg_iters=total_iters, columns_added=total_added)
        rmp.set_penalty(rmp.penalty * 100.0)
    else:
        raise RuntimeError("artificial columns remain positive in a feasible master")
    x = rmp.route_values(sol)
    eta = float(sol.x[rmp.eta]) if rmp.eta is not None else 0.0
    gamma = float(sol.x[rmp.gamma]) if rmp.gamma is not None else 0.0
    cert = min((reduced_cost(rmp.routes[k], duals, rmp.cuts) for k in rmp.enabled_routes()),
               default=math.inf)
    return Relaxation("optimal", sol.objective, x, eta, gamma, duals, total_iters, cert, total_added)


# ---------------------------------------------------------------------------
# restricted master heuristic


def rmh(inst: Instance, routes, objective: str = "range", incumbent: float = math.inf,
        time_limit: float = 5.0, oracle=None) -> Optional[list]:
    """Integer program over a column pool. With ``oracle`` (a TspOracle) every
    route is first replaced by its TSP-optimal twin and the returned solution is
    checked route by route."""
    pool = {}
    for r in routes:
        if oracle is not None:
            r = oracle.tsp_optimalize_route(r)
        if inst.budget is not None and r.length > inst.budget + 1e-9:
            continue
        pool.setdefault(r.seq, r)
    pool = [pool[k] for k in sorted(pool)]
    if not pool:
        return None
    n_r = len(pool)
    ranged = objective == "range"
    n_var = n_r + (2 if ranged else 0)
    rows, lo, hi = [], [], []

    def row(coefs, lb, ub):
        v = np.zeros(n_var)
        for j, c in coefs.items():
            v[j] = c
        rows.append(v)
        lo.append(lb)
        hi.append(ub)

    for i in inst.customers:
        cols = [k for k, r in enumerate(pool) if i in r.covered]
        if not cols:
            return None
        row({k: 1.0 for k in cols}, 1.0, 1.0)
    row({k: 1.0 for k in range(n_r)}, inst.K, inst.K)
    c = np.zeros(n_var)
    big_m = inst.budget if inst.budget is not None else route_upper_bound(inst)
    if inst.budget is not None:
        row({k: r.length for k, r in enumerate(pool)}, -np.inf, inst.budget)
    if ranged:
        eta, gamma = n_r, n_r + 1
        c[eta], c[gamma] = 1.0, -1.0
        for i in inst.customers:
            ending = [k for k, r in enumerate(pool) if r.last == i]
            if not ending:
                continue
            row({**{k: pool[k].length for k in ending}, eta: -1.0}, -np.inf, 0.0)
            row({**{k: pool[k].length - big_m for k in ending}, gamma: -1.0}, -big_m, np.inf)
        row({gamma: 1.0, eta: -1.0}, -np.inf, 0.0)
        if incumbent < math.inf:
            row({eta: 1.0, gamma: -1.0}, -np.inf, incumbent - 1e-6)
    else:
        for k, r in enumerate(pool):
            c[k] = r.length
        if incumbent < math.inf:
            row({k: r.length for k, r in enumerate(pool)}, -np.inf, incumbent - 1e-6)
    integrality = np.zeros(n_var)
    integrality[:n_r] = 1
    lb = np.zeros(n_var)
    ub = np.ones(n_var)
    if ranged:
        ub[n_r:] = np.inf
    res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi), integrality=integrality,
               bounds=Bounds(lb, ub), options={"time_limit": time_limit, "disp": False})
    if res.x is None:
        return None
    chosen = [pool[k] for k in range(n_r) if res.x[k] > 0.5]
    if check_solution(inst, chosen):
        return None
    if oracle is not None and not all(oracle.is_tsp_optimal_route(r) for r in chosen):
        return None
    value = solution_range(chosen) if ranged else sum(r.length for r in chosen)
    if value >= incumbent - 1e-9:
        return None
    return chosen
