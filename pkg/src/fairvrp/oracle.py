"""Exhaustive ground truth for tiny instances: every partition of the
customers into K blocks, every visiting order where needed."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance, Route
from .tsp import TspOracle

MAX_N = 9
MAX_K = 4
ORACLE_MODES = ("fcvrp", "fcvrp_tsp", "mindist")
TOL = 1e-6


class OracleLimitError(ValueError):
    pass


@dataclass
class EnumeratedOptimum:
    mode: str
    best: float                    # optimum of the requested mode
    best_range_fcvrp: float = math.nan
    best_range_tsp: float = math.nan
    witnesses: list = field(default_factory=list)   # list of route lists
    count_feasible: int = 0

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.best)

    def to_json(self) -> dict:
        def num(v):
            return float(v) if math.isfinite(v) else None

        routes = self.witnesses[0] if self.witnesses else []
        rng = (max(r.length for r in routes) - min(r.length for r in routes)) if routes else math.nan
        return {
            "status": "optimal" if self.feasible else "infeasible",
            "lb": num(self.best),
            "ub": num(self.best),
            "gap": 0.0 if self.feasible else None,
            "range": num(rng),
            "routes": [{"seq": list(r.seq), "length": r.length, "load": r.load} for r in routes],
            "stats": {"nodes": 0, "cuts_rci": 0, "cuts_tsp": 0, "cg_iters": 0, "time_s": 0.0},
        }


def set_partitions(items, k: int):
    """All partitions of ``items`` into exactly ``k`` nonempty blocks
    (restricted-growth strings, so each partition appears once)."""
    items = list(items)
    n = len(items)
    if k < 1 or k > n:
        return
    a = [0] * n

    def rec(i, used):
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                blocks = [[] for _ in range(k)]
                for idx, b in enumerate(a):
                    blocks[b].append(items[idx])
                yield [tuple(b) for b in blocks]
            return
        for b in range(min(used + 1, k)):
            a[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(0, 0)


class Enumerator:
    def __init__(self, inst: Instance):
        if inst.n > MAX_N or inst.K > MAX_K:
            raise OracleLimitError(f"enumeration limited to n <= {MAX_N}, K <= {MAX_K}")
        self.inst = inst
        self.tsp = TspOracle(inst)
        self._orders = {}

    def load(self, block) -> int:
        return sum(self.inst.demand[i] for i in block)

    def all_orders(self, block) -> dict:
        """length -> one order attaining it (block up to 9 customers)."""
        if block not in self._orders:
            out = {}
            for perm in itertools.permutations(block):
                length = round(self.inst.path_length((0,) + perm + (0,)), 9)
                out.setdefault(length, perm)
            self._orders[block] = out
        return self._orders[block]

    def tsp_orders(self, block) -> list:
        """Every TSP-optimal visiting order of ``block`` (ties and reversals)."""
        _, opt = self.tsp.held_karp_tour(block)
        return [p for p in itertools.permutations(block)
                if self.inst.path_length((0,) + p + (0,)) <= opt + TOL]

    def feasible_partitions(self):
        Q = self.inst.Q
        for part in set_partitions(self.inst.customers, self.inst.K):
            if all(self.load(b) <= Q for b in part):
                yield part


def _range_choice(lists, budget: float):
    """Pick one value per list minimising max - min with sum <= budget.
    Returns (range, indices) or (inf, None)."""
    arrays = [np.asarray(v, dtype=float) for v in lists]
    grids = np.meshgrid(*arrays, indexing="ij")
    stack = np.stack([g.ravel() for g in grids])
    rng = stack.max(axis=0) - stack.min(axis=0)
    ok = stack.sum(axis=0) <= budget + TOL
    if not ok.any():
        return math.inf, None
    rng = np.where(ok, rng, np.inf)
    flat = int(np.argmin(rng))
    return float(rng[flat]), np.unravel_index(flat, tuple(len(a) for a in arrays))


def enumerate_optimum(inst: Instance, mode: str = "fcvrp_tsp") -> EnumeratedOptimum:
    """Exact optimum by enumeration. For range modes both the free-order and
    the TSP-order optimum are reported."""
    if mode not in ORACLE_MODES:
        raise ValueError(f"unknown oracle mode {mode!r}")
    en = Enumerator(inst)
    budget = inst.budget if inst.budget is not None else math.inf
    if mode == "mindist":
        best, wit, count = math.inf, None, 0
        for part in en.feasible_partitions():
            count += 1
            tours = [en.tsp.held_karp_tour(b) for b in part]
            total = sum(t[1] for t in tours)
            if total < best - 1e-9:
                best, wit = total, [Route.from_seq(inst, t[0]) for t in tours]
        return EnumeratedOptimum(mode, best, witnesses=[sorted(wit, key=lambda r: r.seq)] if wit else [],
                                 count_feasible=count)

    best_tsp, wit_tsp, n_tsp = math.inf, None, 0
    best_free, wit_free, n_free = math.inf, None, 0
    for part in en.feasible_partitions():
        tours = [en.tsp.held_karp_tour(b) for b in part]
        lens = [t[1] for t in tours]
        if sum(lens) <= budget + TOL:
            n_tsp += 1
            r = max(lens) - min(lens)
            if r < best_tsp - 1e-9:
                best_tsp, wit_tsp = r, [Route.from_seq(inst, t[0]) for t in tours]
        if mode == "fcvrp":
            orders = [en.all_orders(b) for b in part]
            keys = [sorted(o) for o in orders]
            r, idx = _range_choice(keys, budget)
            if idx is not None:
                n_free += 1
                if r < best_free - 1e-9:
                    best_free = r
                    wit_free = [Route.from_seq(inst, orders[k][keys[k][i]]) for k, i in enumerate(idx)]
    res = EnumeratedOptimum(mode, best_tsp if mode == "fcvrp_tsp" else best_free,
                            best_range_tsp=best_tsp)
    if mode == "fcvrp":
        res.best_range_fcvrp = best_free
        res.witnesses = [sorted(wit_free, key=lambda r: r.seq)] if wit_free else []
        res.count_feasible = n_free
    else:
        res.witnesses = [sorted(wit_tsp, key=lambda r: r.seq)] if wit_tsp else []
        res.count_feasible = n_tsp
    return res


def tsp_optimal_solutions(inst: Instance):
    """Every feasible F-CVRP-TSP solution (budget respected), including all
    tie-optimal and reversed visiting orders, as tuples of node paths."""
    en = Enumerator(inst)
    budget = inst.budget if inst.budget is not None else math.inf
    for part in en.feasible_partitions():
        total = sum(en.tsp.held_karp_tour(b)[1] for b in part)
        if total > budget + TOL:
            continue
        for combo in itertools.product(*(en.tsp_orders(b) for b in part)):
            yield combo


@dataclass
class CutReport:
    clean: bool
    checked: int
    violation: Optional[tuple] = None   # (cut, solution, lhs)


def validate_cuts(inst: Instance, cuts) -> CutReport:
    cuts = list(cuts)
    checked = 0
    for sol in tsp_optimal_solutions(inst):
        checked += 1
        if not cuts:
            continue
        flows = {}
        for seq in sol:
            nodes = (0,) + tuple(seq) + (0,)
            for a in zip(nodes, nodes[1:]):
                flows[a] = flows.get(a, 0.0) + 1.0
        for cut in cuts:
            if cut.violation(flows) > TOL:
                return CutReport(False, checked, (cut, sol, cut.lhs(flows)))
    return CutReport(True, checked)
