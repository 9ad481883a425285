"""TSP-optimality cuts (base and lifted) and rounded capacity inequalities.

All cuts are written over arc flows ``x_a = sum of x_r over routes using a``
with unit coefficients, so their duals can be charged to pricing arcs.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instance import Instance, Route, ceil_div
from .tsp import TspOracle

EPS = 1e-6
SUPPORT_EPS = 1e-4

TSP_BASE = "TSP-base"
TSP_FORWARD = "TSP-forward-lifted"
TSP_BACKWARD = "TSP-backward-lifted"
RCI = "RCI"
TSP_KINDS = (TSP_BASE, TSP_FORWARD, TSP_BACKWARD)
LIFTING_MODES = ("none", "forward", "backward", "both")


@dataclass(frozen=True)
class Cut:
    kind: str
    arcs: frozenset
    sense: str
    rhs: float
    origin: tuple

    @property
    def is_tsp(self) -> bool:
        return self.kind in TSP_KINDS

    @property
    def key(self):
        return (self.sense, tuple(sorted(self.arcs)), self.rhs)

    def coeff(self, route: Route) -> int:
        return len(self.arcs & route.arc_set)

    def lhs(self, flows: dict) -> float:
        return sum(flows.get(a, 0.0) for a in self.arcs)

    def violation(self, flows: dict) -> float:
        lhs = self.lhs(flows)
        return lhs - self.rhs if self.sense == "<=" else self.rhs - lhs

    def satisfied_by(self, flows: dict, tol: float = EPS) -> bool:
        return self.violation(flows) <= tol

    def dump_line(self) -> str:
        arcs = ",".join(f"{u}-{v}" for u, v in sorted(self.arcs))
        return f"{self.kind} {self.rhs:g} {arcs}"


def path_arcs(path: Sequence[int]) -> list:
    return list(zip(path, path[1:]))


def base_cut(path: Sequence[int]) -> Cut:
    path = tuple(path)
    arcs = frozenset(path_arcs(path))
    return Cut(TSP_BASE, arcs, "<=", float(len(path) - 2), path)


def lift_forward(path: Sequence[int], inst: Instance, oracle: TspOracle) -> Cut:
    """Add arcs leaving each prefix end v_h (h < p) that make the prefix
    non-elementary, TSP-violating or over capacity."""
    v = tuple(path)
    p = len(v)
    dem = inst.demand
    arcs = set(path_arcs(v))
    load = 0
    for h in range(1, p):
        vh = v[h - 1]
        load += dem[vh]
        for j in range(1, h):
            if v[j - 1] != 0:
                arcs.add((vh, v[j - 1]))
        excluded = set(v[: h + 1])
        prefix = v[:h]
        for j in inst.customers:
            if j in excluded:
                continue
            if load + dem[j] > inst.Q:
                arcs.add((vh, j))
            elif h >= 2 and oracle.is_tsp_violating_path(prefix + (j,)):
                arcs.add((vh, j))
    return Cut(TSP_FORWARD, frozenset(arcs), "<=", float(p - 2), v)


def lift_backward(path: Sequence[int], inst: Instance, oracle: TspOracle) -> Cut:
    """Mirror of :func:`lift_forward` over suffixes (v_h, ..., v_p), h >= 2."""
    v = tuple(path)
    p = len(v)
    dem = inst.demand
    arcs = set(path_arcs(v))
    load = 0
    for h in range(p, 1, -1):
        vh = v[h - 1]
        load += dem[vh]
        for j in range(h + 1, p + 1):
            if v[j - 1] != 0:
                arcs.add((v[j - 1], vh))
        excluded = set(v[h - 2:])
        suffix = v[h - 1:]
        for j in inst.customers:
            if j in excluded:
                continue
            if dem[j] + load > inst.Q:
                arcs.add((j, vh))
            elif len(suffix) >= 2 and oracle.is_tsp_violating_path((j,) + suffix):
                arcs.add((j, vh))
    return Cut(TSP_BACKWARD, frozenset(arcs), "<=", float(p - 2), v)


def tsp_cuts_for_path(path, inst: Instance, oracle: TspOracle, lifting: str = "both") -> list:
    if lifting == "none":
        return [base_cut(path)]
    out = []
    if lifting in ("forward", "both"):
        out.append(lift_forward(path, inst, oracle))
    if lifting in ("backward", "both"):
        out.append(lift_backward(path, inst, oracle))
    return out


def _adjacency(flows: dict, reverse: bool = False) -> dict:
    adj = defaultdict(list)
    for (u, v), f in flows.items():
        if f > EPS:
            if reverse:
                adj[v].append((u, f))
            else:
                adj[u].append((v, f))
    for k in adj:
        adj[k].sort()
    return adj


def _bfs_paths(adj: dict, oracle: TspOracle, max_nodes: int, tol: float):
    found = []
    queue = deque([((0,), 0.0)])
    while queue:
        path, total = queue.popleft()
        u = path[-1]
        if len(path) > 1 and u == 0:
            continue
        for w, f in adj.get(u, ()):
            if w != 0 and w in path:
                continue
            if w == 0 and len(path) < 2:
                continue
            new = path + (w,)
            s = total + f
            # the cut for ``new`` can only be violated while this holds
            if s <= len(path) - 1 + tol:
                continue
            if len(new) >= 3:
                if oracle.is_tsp_violating_path(new):
                    found.append((new, s - (len(path) - 1)))
                    continue
            if w != 0 and len(new) < max_nodes:
                queue.append((new, s))
    return found


def separate_tsp_paths(flows: dict, inst: Instance, oracle: TspOracle,
                       max_nodes: int = 8, tol: float = EPS) -> list:
    """Depot-anchored TSP-violating paths whose base cut is violated by ``flows``.

    Returns ``(path, violation)`` pairs sorted by decreasing violation.
    """
    out = {}
    for path, viol in _bfs_paths(_adjacency(flows), oracle, max_nodes, tol):
        out[path] = viol
    for rpath, viol in _bfs_paths(_adjacency(flows, reverse=True), oracle, max_nodes, tol):
        path = tuple(reversed(rpath))
        out.setdefault(path, viol)
    return sorted(out.items(), key=lambda kv: (-kv[1], kv[0]))


def separate_tsp(flows: dict, inst: Instance, oracle: TspOracle, lifting: str = "none",
                 max_nodes: int = 8, tol: float = EPS) -> list:
    cuts = []
    for path, _ in separate_tsp_paths(flows, inst, oracle, max_nodes, tol):
        cuts.extend(tsp_cuts_for_path(path, inst, oracle, lifting))
    return cuts


# ---------------------------------------------------------------------------
# rounded capacity inequalities


def rci_cut(S: Iterable[int], inst: Instance) -> Cut:
    S = frozenset(S)
    outside = [w for w in inst.nodes if w not in S]
    arcs = frozenset((u, w) for u in S for w in outside)
    rhs = float(ceil_div(sum(inst.demand[i] for i in S), inst.Q))
    return Cut(RCI, arcs, ">=", rhs, tuple(sorted(S)))


def _outflow(S, flows_out: dict) -> float:
    return sum(f for u in S for w, f in flows_out.get(u, ()) if w not in S)


def separate_rci(flows: dict, inst: Instance, tol: float = EPS, max_cuts: int = 50) -> list:
    """Heuristic: support-graph components plus greedy single-node add/drop."""
    flows_out = defaultdict(list)
    neigh = defaultdict(set)
    for (u, w), f in flows.items():
        if f > 0:
            flows_out[u].append((w, f))
        if f > SUPPORT_EPS and u != 0 and w != 0:
            neigh[u].add(w)
            neigh[w].add(u)
    dem = inst.demand
    Q = inst.Q

    def slack(S):
        return _outflow(S, flows_out) - ceil_div(sum(dem[i] for i in S), Q)

    seen = set()
    comps = []
    for c in inst.customers:
        if c in seen:
            continue
        comp, stack = {c}, [c]
        while stack:
            u = stack.pop()
            for w in neigh[u]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(frozenset(comp))

    candidates = set()
    starts = comps + [frozenset([c]) for c in inst.customers]
    for S in starts:
        cur = set(S)
        cur_slack = slack(cur)
        candidates.add(frozenset(cur))
        improved = True
        while improved:
            improved = False
            best = None
            adj = set().union(*(neigh[u] for u in cur)) - cur if cur else set()
            moves = [cur | {w} for w in sorted(adj)]
            if len(cur) > 1:
                moves += [cur - {u} for u in sorted(cur)]
            for T in moves:
                s = slack(T)
                if s < cur_slack - 1e-9 and (best is None or s < best[0]):
                    best = (s, T)
            if best is not None:
                cur_slack, cur = best
                candidates.add(frozenset(cur))
                improved = True
    cuts = []
    for S in sorted(candidates, key=lambda s: (len(s), sorted(s))):
        if slack(S) < -tol:
            cuts.append(rci_cut(S, inst))
    cuts.sort(key=lambda c: -c.violation(flows))
    return cuts[:max_cuts]


def dump_cuts(cuts: Iterable[Cut]) -> str:
    return "".join(c.dump_line() + "\n" for c in cuts)
