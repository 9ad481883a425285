"""Route pricing: elementary shortest paths with resources, one problem per
fixed last customer, solved by labeling on the load-expanded acyclic graph.

Elementarity is relaxed to ng-routes; if the most negative ng-route is not
elementary and no elementary negative route was found, the offending
customers are added to every ng-neighbourhood and the labeling is repeated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .instance import Instance, Route
from .node import BnBNode

RC_EPS = 1e-6
DOM_TOL = 1e-9


def ng_neighbourhoods(inst: Instance, size: int = 8) -> list:
    """Bitmask per customer: itself plus its ``size`` nearest customers."""
    ng = [0] * (inst.n + 1)
    for i in inst.customers:
        others = sorted((inst.d[i][j], j) for j in inst.customers if j != i)
        mask = 1 << i
        for _, j in others[:size]:
            mask |= 1 << j
        ng[i] = mask
    return ng


def shortest_customer_paths(inst: Instance) -> np.ndarray:
    """All-pairs shortest distances using customers only as intermediates."""
    sp = np.array(inst.dist, dtype=float)
    for k in inst.customers:
        sp = np.minimum(sp, sp[:, k:k + 1] + sp[k:k + 1, :])
    return sp


def completion_bounds(inst: Instance, last: int, sp: Optional[np.ndarray] = None) -> list:
    """Lower bound, per customer j, on the distance still to travel from j
    until the route ends (through ``last`` and back to the depot)."""
    if sp is None:
        sp = shortest_customer_paths(inst)
    back = inst.d[last][0]
    return [0.0 if j == 0 else (back if j == last else float(sp[j, last]) + back)
            for j in inst.nodes]


@dataclass
class LoadExpandedGraph:
    """Arc costs for one pricing problem.

    Vertices are (customer, accumulated load) pairs; since costs do not depend
    on load the arcs are stored at customer level in ``succ``/``pred`` and
    expanded on demand by :meth:`expanded_arcs`.
    """

    last: int
    Q: int
    demand: tuple
    layers: dict
    succ: dict       # u -> [(v, cost, dist)], u may be the depot
    pred: dict       # v -> [(u, cost, dist)], customers only
    sink_cost: float  # return arc plus route constants
    sink_dist: float
    length_coef: float
    constant: float

    def vertices(self) -> list:
        out = [(0, 0)]
        for j, loads in sorted(self.layers.items()):
            out.extend((j, q) for q in loads)
        return out

    def expanded_arcs(self) -> list:
        arcs = []
        for v, _, _ in self.succ.get(0, ()):
            arcs.append(((0, 0), (v, self.demand[v])))
        for u, lst in sorted(self.succ.items()):
            if u == 0:
                continue
            for q in self.layers.get(u, ()):
                for v, _, _ in lst:
                    if v != 0 and q + self.demand[v] <= self.Q:
                        arcs.append(((u, q), (v, q + self.demand[v])))
        return arcs

    def topology(self):
        return (tuple(self.vertices()), tuple(self.expanded_arcs()))


def arc_charges(cuts, cut_duals) -> dict:
    """Sum of cut duals per arc (all cut coefficients are one)."""
    charge = {}
    for k, cut in enumerate(cuts):
        y = cut_duals[k] if k < len(cut_duals) else 0.0
        if y == 0.0:
            continue
        for a in cut.arcs:
            charge[a] = charge.get(a, 0.0) + y
    return charge


def build_graph(inst: Instance, last: int, node: BnBNode, duals,
                charge: Optional[dict] = None) -> Optional[LoadExpandedGraph]:
    """Pricing graph for routes ending at ``last``; None when the node forbids it."""
    if not node.arc_allowed(last, 0):
        return None
    charge = charge or {}
    coef = duals.length_cost + duals.lam + duals.alpha[last] - duals.beta[last]
    const = duals.big_m * duals.beta[last] - duals.sigma
    d = inst.d
    mu = duals.mu
    dem = inst.demand
    # customers forced to end another route cannot appear here
    usable = [j for j in inst.customers
              if j == last or (node.forced_successor(j) != 0 and dem[j] + dem[last] <= inst.Q)]
    succ = {0: []}
    pred = {}
    for v in usable:
        if node.arc_allowed(0, v):
            dd = d[0][v]
            succ[0].append((v, coef * dd - mu[v] - charge.get((0, v), 0.0), dd))
    for u in usable:
        if u == last:
            continue
        lst = []
        for v in usable:
            if v == u or not node.arc_allowed(u, v):
                continue
            dd = d[u][v]
            c = coef * dd - mu[v] - charge.get((u, v), 0.0)
            lst.append((v, c, dd))
            pred.setdefault(v, []).append((u, c, dd))
        succ[u] = lst
    back = d[last][0]
    sink_cost = coef * back - charge.get((last, 0), 0.0) + const
    layers = {j: range(inst.demand[j], inst.Q + 1) for j in usable}
    return LoadExpandedGraph(last, inst.Q, inst.demand, layers, succ, pred, sink_cost, back, coef, const)


class _Label:
    __slots__ = ("node", "load", "rc", "dist", "mem", "pred", "dead")

    def __init__(self, node, load, rc, dist, mem, pred):
        self.node = node
        self.load = load
        self.rc = rc
        self.dist = dist
        self.mem = mem
        self.pred = pred
        self.dead = False


def _insert(bucket: list, new: _Label, lo_active: bool, hi_active: bool, lo: float, bound: float) -> bool:
    """Dominance-filtered insertion; ``bound`` is the completion lower bound of
    the label's vertex, used to decide whether the length floor can bind."""
    nrc, nd, nm = new.rc, new.dist, new.mem
    new_safe = (not lo_active) or nd + bound >= lo
    for lab in bucket:
        if lab.rc <= nrc + DOM_TOL and lab.mem & nm == lab.mem:
            if hi_active and lab.dist > nd + DOM_TOL:
                continue
            if lo_active and lab.dist < nd - DOM_TOL and lab.dist + bound < lo:
                continue
            return False
    keep = []
    for lab in bucket:
        if nrc <= lab.rc + DOM_TOL and nm & lab.mem == nm:
            ok = True
            if hi_active and nd > lab.dist + DOM_TOL:
                ok = False
            if ok and lo_active and nd < lab.dist - DOM_TOL and not new_safe:
                ok = False
            if ok:
                lab.dead = True
                continue
        keep.append(lab)
    keep.append(new)
    bucket[:] = keep
    return True


def _forward_path(lab: _Label) -> list:
    out = []
    while lab is not None:
        out.append(lab.node)
        lab = lab.pred
    out.reverse()
    return out[1:]  # drop depot


def _backward_path(lab: _Label) -> list:
    out = []
    while lab is not None:
        out.append(lab.node)
        lab = lab.pred
    return out


class Pricer:
    """Holds per-instance pricing data (ng-sets, completion bounds)."""

    def __init__(self, inst: Instance, ng_size: int = 8, k_best: int = 30,
                 bidirectional: bool = True, use_dominance: bool = True):
        self.inst = inst
        self.ng = ng_neighbourhoods(inst, ng_size)
        self.k_best = k_best
        self.bidirectional = bidirectional
        self.use_dominance = use_dominance
        self.sp = shortest_customer_paths(inst)
        self._cb = {i: completion_bounds(inst, i, self.sp) for i in inst.customers}
        self._from_depot = [float(self.sp[0, j]) for j in inst.nodes]
        self.ng_growth = 0
        self.calls = 0

    # -- labeling -------------------------------------------------------

    def _forward(self, g: LoadExpandedGraph, lo: float, hi: float, load_cap: int, close: bool):
        inst = self.inst
        dem = inst.demand
        ng = self.ng
        last = g.last
        cb = self._cb[last]
        lo_active = lo > 0
        hi_active = hi < math.inf
        buckets = [[] for _ in range(inst.Q + 1)]
        store = {}
        start = _Label(0, 0, 0.0, 0.0, 0, None)
        buckets[0].append(start)
        store[(0, 0)] = [start]
        cands = []
        dom = self.use_dominance
        for q in range(inst.Q + 1):
            for lab in buckets[q]:
                if lab.dead:
                    continue
                u = lab.node
                if u == last:
                    if close:
                        dist = lab.dist + g.sink_dist
                        if lo - 1e-9 <= dist <= hi + 1e-9:
                            cands.append((lab.rc + g.sink_cost, dist, lab, None))
                    continue
                for v, cost, dd in g.succ.get(u, ()):
                    if v == 0 or lab.mem >> v & 1:
                        continue
                    if v == last and not close:
                        continue
                    nq = q + dem[v]
                    if nq > load_cap:
                        continue
                    nd = lab.dist + dd
                    if nd + cb[v] > hi + 1e-9:
                        continue
                    new = _Label(v, nq, lab.rc + cost, nd, (lab.mem & ng[v]) | (1 << v), lab)
                    key = (v, nq)
                    bucket = store.get(key)
                    if bucket is None:
                        store[key] = [new]
                        buckets[nq].append(new)
                    elif not dom:
                        bucket.append(new)
                        buckets[nq].append(new)
                    elif _insert(bucket, new, lo_active, hi_active, lo, cb[v]):
                        buckets[nq].append(new)
        return store, cands

    def _backward(self, g: LoadExpandedGraph, lo: float, hi: float, ext_cap: int):
        inst = self.inst
        dem = inst.demand
        ng = self.ng
        last = g.last
        fd = self._from_depot
        lo_active = lo > 0
        hi_active = hi < math.inf
        buckets = [[] for _ in range(inst.Q + 1)]
        store = {}
        if fd[last] + g.sink_dist > hi + 1e-9:
            return store
        b0 = _Label(last, dem[last], g.sink_cost, g.sink_dist, 1 << last, None)
        buckets[dem[last]].append(b0)
        store[(last, dem[last])] = [b0]
        dom = self.use_dominance
        for q in range(inst.Q + 1):
            if q >= ext_cap:
                break
            for lab in buckets[q]:
                if lab.dead:
                    continue
                w = lab.node
                for u, cost, dd in g.pred.get(w, ()):
                    if u == last or lab.mem >> u & 1:
                        continue
                    nq = q + dem[u]
                    if nq > inst.Q:
                        continue
                    nd = lab.dist + dd
                    if nd + fd[u] > hi + 1e-9:
                        continue
                    new = _Label(u, nq, lab.rc + cost, nd, (lab.mem & ng[u]) | (1 << u), lab)
                    key = (u, nq)
                    bucket = store.get(key)
                    if bucket is None:
                        store[key] = [new]
                        buckets[nq].append(new)
                    elif not dom:
                        bucket.append(new)
                        buckets[nq].append(new)
                    elif _insert(bucket, new, lo_active, hi_active, lo, fd[u]):
                        buckets[nq].append(new)
        return store

    def _candidates(self, g: LoadExpandedGraph, lo: float, hi: float, bidirectional: bool) -> list:
        """(rc, seq) for every surviving complete (ng-)route."""
        Q = self.inst.Q
        if not bidirectional:
            _, cands = self._forward(g, lo, hi, Q, close=True)
            return [(rc, tuple(_forward_path(lab))) for rc, _, lab, _ in cands if rc < -RC_EPS]
        H = Q // 2
        fstore, _ = self._forward(g, lo, hi, H, close=False)
        bstore = self._backward(g, lo, hi, Q - H)
        dem = self.inst.demand
        last = g.last
        by_node = {}
        for (w, _), labs in bstore.items():
            by_node.setdefault(w, []).extend(lab for lab in labs if not lab.dead)
        for labs in by_node.values():
            labs.sort(key=lambda lab: lab.rc)
        out = []
        for (u, qf), labs in fstore.items():
            succ = g.succ.get(u, ())
            for F in labs:
                if F.dead:
                    continue
                for w, cost, dd in succ:
                    if w == 0:
                        continue
                    # each route is joined at a unique arc
                    if qf + dem[w] <= H and w != last:
                        continue
                    head = F.rc + cost
                    for B in by_node.get(w, ()):
                        rc = head + B.rc
                        if rc >= -RC_EPS:
                            break
                        if qf + B.load > Q or F.mem & B.mem:
                            continue
                        dist = F.dist + dd + B.dist
                        if dist < lo - 1e-9 or dist > hi + 1e-9:
                            continue
                        out.append((rc, F, B))
        return [(rc, tuple(_forward_path(F) + _backward_path(B))) for rc, F, B in out]

    # -- public ---------------------------------------------------------

    def price(self, last: int, duals, cuts, node: BnBNode, k_best: Optional[int] = None,
              charge: Optional[dict] = None, len_hi: float = math.inf,
              bidirectional: Optional[bool] = None) -> list:
        """Up to ``k_best`` elementary routes ending at ``last`` with negative
        reduced cost. An empty list certifies that none exists."""
        self.calls += 1
        if charge is None:
            charge = arc_charges(cuts, duals.cut_duals)
        g = build_graph(self.inst, last, node, duals, charge)
        if g is None:
            return []
        k_best = self.k_best if k_best is None else k_best
        bidir = self.bidirectional if bidirectional is None else bidirectional
        lo = node.len_lo
        hi = min(node.len_hi, len_hi)
        while True:
            cands = self._candidates(g, lo, hi, bidir)
            cands.sort()
            routes = []
            seen = set()
            best_cycle = None
            for rc, seq in cands:
                if rc >= -RC_EPS:
                    break
                if len(set(seq)) != len(seq):
                    if best_cycle is None:
                        best_cycle = seq
                    continue
                if seq in seen:
                    continue
                seen.add(seq)
                routes.append(Route.from_seq(self.inst, seq))
                if len(routes) >= k_best:
                    break
            if routes or best_cycle is None:
                return routes
            self._grow_ng(best_cycle)

    def best_reduced_cost(self, last: int, duals, cuts, node: BnBNode, bidirectional=None,
                          len_hi: float = math.inf) -> float:
        """Most negative elementary reduced cost (0 if none is negative)."""
        routes = self.price(last, duals, cuts, node, k_best=1, len_hi=len_hi,
                            bidirectional=bidirectional)
        if not routes:
            return 0.0
        from .master import reduced_cost
        return reduced_cost(routes[0], duals, cuts)

    def _grow_ng(self, seq):
        seen = set()
        for c in seq:
            if c in seen:
                bit = 1 << c
                for j in self.inst.customers:
                    self.ng[j] |= bit
            seen.add(c)
        self.ng_growth += 1

    def price_all(self, duals, cuts, node: BnBNode, k_best: Optional[int] = None,
                  len_hi: float = math.inf) -> list:
        charge = arc_charges(cuts, duals.cut_duals)
        out = []
        for i in self.inst.customers:
            out.extend(self.price(i, duals, cuts, node, k_best, charge=charge, len_hi=len_hi))
        return out


def price(inst: Instance, last: int, duals, cuts, node: BnBNode, k_best: int = 30, **kw) -> list:
    return Pricer(inst, **kw).price(last, duals, cuts, node, k_best)
