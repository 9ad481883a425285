"""Branch-price-and-cut search and the solve modes built on it."""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

from .cuts import (LIFTING_MODES, TSP_KINDS, separate_rci, separate_tsp_paths,
                   tsp_cuts_for_path, base_cut)
from .instance import (Instance, Route, budget_from_percentage, check_solution,
                       solution_range)
from .master import (Relaxation, Rmp, TimeLimitReached, arc_flows, rmh, seed_rmp,
                     solve_relaxation)
from .node import BnBNode
from .pricing import Pricer
from .tsp import TspOracle

MODES = ("exact", "fcvrp", "postprocess", "mindist")
INT_TOL = 1e-6
GAP_TOL = 1e-6


@dataclass
class SolverConfig:
    mode: str = "exact"
    lifting: str = "both"
    rci: bool = True
    time_limit_s: float = 3600.0
    node_limit: int = 1_000_000
    stall_rounds: int = 5
    k_best: int = 30
    ng_size: int = 8
    bidirectional: bool = True
    bfs_max_nodes: int = 8
    cut_cap: int = 50
    rmh_every: int = 10
    rmh_time_limit: float = 5.0
    hk_limit: int = 20
    branching: tuple = ("range", "last", "arc")
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lifting not in LIFTING_MODES:
            raise ValueError(f"unknown lifting {self.lifting!r}")


@dataclass
class SolveResult:
    status: str  # optimal | limit | infeasible
    lb: float
    ub: float
    routes: list
    stats: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    cuts: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return relative_gap(self.lb, self.ub)

    @property
    def range(self) -> float:
        return solution_range(self.routes) if self.routes else math.nan

    def to_json(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else float(v)

        return {
            "status": self.status,
            "lb": num(self.lb),
            "ub": num(self.ub),
            "gap": num(self.gap),
            "range": num(self.range),
            "routes": [{"seq": list(r.seq), "length": r.length, "load": r.load} for r in self.routes],
            "stats": {
                "nodes": int(self.stats.get("nodes", 0)),
                "cuts_rci": int(self.stats.get("cuts_rci", 0)),
                "cuts_tsp": int(self.stats.get("cuts_tsp", 0)),
                "cg_iters": int(self.stats.get("cg_iters", 0)),
                "time_s": float(self.stats.get("time_s", 0.0)),
            },
        }


def relative_gap(lb: float, ub: float) -> float:
    if not math.isfinite(ub):
        return math.inf
    if ub <= 0:
        return 0.0 if lb >= ub - GAP_TOL else math.inf
    return max(0.0, (ub - lb) / ub)


def _is_integral(x) -> bool:
    return all(v <= INT_TOL or v >= 1 - INT_TOL for v in x)


class BranchAndPrice:
    """One search over F-CVRP (``tsp=False``) or F-CVRP-TSP (``tsp=True``)
    with the range objective, or the distance objective for the baseline."""

    def __init__(self, inst: Instance, cfg: SolverConfig, objective: str = "range", tsp: bool = True):
        self.inst = inst
        self.cfg = cfg
        self.objective = objective
        self.tsp = tsp and objective == "range"
        self.oracle = TspOracle(inst, hk_limit=cfg.hk_limit)
        self.pricer = Pricer(inst, cfg.ng_size, cfg.k_best, cfg.bidirectional)
        self.rmp = Rmp(inst, objective)
        seed_rmp(self.rmp)
        self.ub = math.inf
        self.incumbent: Optional[list] = None
        self.stats = {"nodes": 0, "cuts_rci": 0, "cuts_tsp": 0, "cg_iters": 0, "rmh_calls": 0,
                      "rmh_improvements": 0, "branch_range": 0, "branch_last": 0, "branch_arc": 0,
                      "columns": 0}
        self.trace = {"lifting": [], "certificates": [], "bounds": [], "incumbents": []}
        self._ids = itertools.count(1)

    # -- helpers --------------------------------------------------------

    def value(self, routes) -> float:
        if self.objective == "range":
            return solution_range(routes)
        return sum(r.length for r in routes)

    def _try_incumbent(self, routes, source: str) -> bool:
        if check_solution(self.inst, routes):
            return False
        if self.tsp and not all(self.oracle.is_tsp_optimal_route(r) for r in routes):
            return False
        v = self.value(routes)
        if v < self.ub - 1e-9:
            self.ub = v
            self.incumbent = sorted(routes, key=lambda r: r.seq)
            if self.cfg.trace:
                self.trace["incumbents"].append((source, v))
            return True
        return False

    def _rmh(self, deadline):
        self.stats["rmh_calls"] += 1
        limit = self.cfg.rmh_time_limit
        if deadline is not None:
            limit = max(0.1, min(limit, deadline - time.monotonic()))
        sol = rmh(self.inst, self.rmp.routes, self.objective, self.ub, limit,
                  self.oracle if self.tsp else None)
        if sol is not None and self._try_incumbent(sol, "rmh"):
            self.stats["rmh_improvements"] += 1

    def _separate(self, rel: Relaxation, integral: bool) -> list:
        cfg = self.cfg
        routes = self.rmp.routes
        flows = arc_flows(rel.x, routes)
        tsp_cuts = []
        if self.tsp:
            paths = separate_tsp_paths(flows, self.inst, self.oracle, cfg.bfs_max_nodes)
            if integral and not paths:
                # full routes are always checked so integral points are never accepted wrongly
                for k in rel.support():
                    r = routes[k]
                    if not self.oracle.is_tsp_optimal_route(r):
                        paths.append((r.nodes, 1.0))
            for path, _ in paths:
                new = tsp_cuts_for_path(path, self.inst, self.oracle, cfg.lifting)
                if cfg.trace and cfg.lifting != "none":
                    bv = base_cut(path).violation(flows)
                    for c in new:
                        self.trace["lifting"].append((bv, c.violation(flows)))
                tsp_cuts.extend(c for c in new if c.key not in self.rmp.cut_keys)
        rci_cuts = []
        if cfg.rci:
            rci_cuts = [c for c in separate_rci(flows, self.inst, max_cuts=cfg.cut_cap)
                        if c.key not in self.rmp.cut_keys]
        tsp_cuts.sort(key=lambda c: -c.violation(flows))
        chosen = []
        seen = set()
        for c in tsp_cuts + rci_cuts:
            if c.key in seen or c.violation(flows) <= 1e-6:
                continue
            seen.add(c.key)
            chosen.append(c)
            if len(chosen) >= cfg.cut_cap:
                break
        return chosen

    # -- branching ------------------------------------------------------

    def branch(self, node: BnBNode, rel: Relaxation) -> list:
        routes = self.rmp.routes
        support = rel.support()
        for rule in self.cfg.branching:
            if rule == "range" and self.objective == "range":
                long_ = [routes[k].length for k in support if routes[k].length > rel.eta + 1e-6]
                if long_:
                    t = min(long_)
                    self.stats["branch_range"] += 1
                    return [node.child(id=next(self._ids), len_hi=t - 1e-7, label=f"len<{t:.3f}"),
                            node.child(id=next(self._ids), eta_lb=max(node.eta_lb, t), label=f"eta>={t:.3f}")]
                short = [routes[k].length for k in support if routes[k].length < rel.gamma - 1e-6]
                if short:
                    s = max(short)
                    self.stats["branch_range"] += 1
                    return [node.child(id=next(self._ids), len_lo=s + 1e-7, label=f"len>{s:.3f}"),
                            node.child(id=next(self._ids), gamma_ub=min(node.gamma_ub, s), label=f"gamma<={s:.3f}")]
            elif rule == "last":
                z = {}
                for k in support:
                    r = routes[k]
                    z[r.last] = z.get(r.last, 0.0) + rel.x[k]
                frac = [(abs(v - 0.5), i) for i, v in z.items() if INT_TOL < v < 1 - INT_TOL]
                if frac:
                    _, i = min(frac)
                    self.stats["branch_last"] += 1
                    return [node.child(id=next(self._ids), forced_last=node.forced_last | {i}, label=f"last={i}"),
                            node.child(id=next(self._ids), forbidden_last=node.forbidden_last | {i}, label=f"last!={i}")]
            elif rule == "arc":
                flows = arc_flows(rel.x, routes)
                frac = [(abs(v - 0.5), a) for a, v in flows.items() if INT_TOL < v < 1 - INT_TOL]
                if frac:
                    _, a = min(frac)
                    self.stats["branch_arc"] += 1
                    return [node.child(id=next(self._ids), forced_arcs=node.forced_arcs | {a}, label=f"arc{a}"),
                            node.child(id=next(self._ids), forbidden_arcs=node.forbidden_arcs | {a}, label=f"!arc{a}")]
        raise RuntimeError("fractional master solution without a branching candidate")

    # -- node processing ------------------------------------------------

    def _node_bound(self, rel: Relaxation, node: BnBNode) -> float:
        b = rel.objective
        if self.objective == "range":
            b = max(b, 0.0, node.eta_lb - node.gamma_ub)
        return max(b, node.lp_bound)

    def process(self, node: BnBNode, deadline) -> tuple:
        """Returns (bound, children); children empty when the node is closed."""
        cfg = self.cfg
        stall = 0
        best = -math.inf
        while True:
            rel = solve_relaxation(self.rmp, node, self.pricer, cfg.k_best, deadline)
            self.stats["cg_iters"] += rel.cg_iters
            if rel.status == "infeasible":
                return math.inf, []
            if cfg.trace:
                self.trace["certificates"].append(rel.certificate)
            bound = self._node_bound(rel, node)
            if bound >= self.ub - GAP_TOL:
                return bound, []
            integral = _is_integral(rel.x)
            cuts = self._separate(rel, integral)
            if integral and not any(c.kind in TSP_KINDS for c in cuts):
                chosen = [self.rmp.routes[k] for k in rel.support(0.5)]
                self._try_incumbent(chosen, "lp")
                return bound, []
            if cuts:
                for c in cuts:
                    if self.rmp.add_cut(c):
                        self.stats["cuts_tsp" if c.is_tsp else "cuts_rci"] += 1
                if not integral:
                    stall = stall + 1 if bound <= best + 1e-6 else 0
                    best = max(best, bound)
                    if stall >= cfg.stall_rounds:
                        break
                continue
            break
        return bound, self.branch(node, rel)

    def run(self) -> SolveResult:
        cfg = self.cfg
        t0 = time.monotonic()
        deadline = t0 + cfg.time_limit_s
        root = BnBNode(id=0)
        heap = [(-math.inf, 0, root)]
        status = "optimal"
        current = None
        try:
            while heap:
                bound, _, node = heap[0]
                if bound >= self.ub - GAP_TOL:
                    heap.clear()
                    break
                if self.stats["nodes"] >= cfg.node_limit or time.monotonic() > deadline:
                    status = "limit"
                    break
                heapq.heappop(heap)
                current = node
                self.stats["nodes"] += 1
                nb, children = self.process(node, deadline)
                if cfg.trace:
                    self.trace["bounds"].append((node.id, node.parent, node.lp_bound, nb))
                if self.stats["nodes"] == 1 or self.stats["nodes"] % cfg.rmh_every == 0:
                    self._rmh(deadline)
                for ch in children:
                    ch = BnBNode(**{**_fields(ch), "lp_bound": nb})
                    heapq.heappush(heap, (nb, ch.id, ch))
                current = None
        except TimeLimitReached:
            status = "limit"
        remaining = [b for b, _, _ in heap]
        if status == "limit" and current is not None:
            # the interrupted node is still open
            remaining.append(current.lp_bound)
        lb = min([self.ub] + remaining)
        if self.objective == "range":
            lb = max(lb, 0.0) if math.isfinite(lb) else lb
        if self.incumbent is None and status == "optimal":
            status = "infeasible"
            lb = math.inf
        self.stats["time_s"] = time.monotonic() - t0
        self.stats["columns"] = len(self.rmp.routes)
        return SolveResult(status, lb, self.ub, self.incumbent or [], dict(self.stats),
                           self.trace if cfg.trace else {}, list(self.rmp.cuts))


def _fields(node: BnBNode) -> dict:
    return {k: getattr(node, k) for k in BnBNode.__dataclass_fields__}


# ---------------------------------------------------------------------------
# modes


def mindist_result(inst: Instance, cfg: Optional[SolverConfig] = None) -> SolveResult:
    cfg = cfg or SolverConfig(mode="mindist")
    return BranchAndPrice(inst, cfg, objective="distance", tsp=False).run()


def mindist_mode(inst: Instance, cfg: Optional[SolverConfig] = None) -> float:
    """Minimum total routing distance with exactly K routes (budget ignored)."""
    res = mindist_result(inst, cfg)
    if res.status == "infeasible":
        raise ValueError("instance has no feasible routing")
    return res.ub


def resolve_budget(inst: Instance, cfg: Optional[SolverConfig] = None) -> Instance:
    if inst.budget is not None:
        return inst
    if inst.budget_pct is None:
        raise ValueError("instance has neither BUDGET nor BUDGET_PCT")
    base_cfg = SolverConfig(mode="mindist", time_limit_s=(cfg.time_limit_s if cfg else 3600.0))
    baseline = mindist_mode(inst, base_cfg)
    return inst.with_budget(budget_from_percentage(inst.budget_pct, baseline))


def postprocess_mode(inst: Instance, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Solve F-CVRP exactly, then reorder each route into its shortest tour."""
    cfg = cfg or SolverConfig(mode="postprocess")
    inst = resolve_budget(inst, cfg)
    res = BranchAndPrice(inst, cfg, objective="range", tsp=False).run()
    if not res.routes:
        return res
    oracle = TspOracle(inst, hk_limit=cfg.hk_limit)
    routes = sorted((oracle.tsp_optimalize_route(r) for r in res.routes), key=lambda r: r.seq)
    ub = solution_range(routes)
    status = "optimal" if ub - res.lb <= GAP_TOL and res.status == "optimal" else "limit"
    stats = dict(res.stats)
    stats["fcvrp_ub"] = res.ub
    return SolveResult(status, min(res.lb, ub), ub, routes, stats, res.trace, res.cuts)


def solve(inst: Instance, cfg: Optional[SolverConfig] = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    if cfg.mode == "mindist":
        return mindist_result(inst, cfg)
    if cfg.mode == "postprocess":
        return postprocess_mode(inst, cfg)
    inst = resolve_budget(inst, cfg)
    return BranchAndPrice(inst, cfg, objective="range", tsp=(cfg.mode == "exact")).run()
