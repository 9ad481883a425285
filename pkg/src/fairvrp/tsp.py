"""Held-Karp subset dynamic programs for tours and fixed-endpoint paths."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instance import LENGTH_TOL, Instance, Route

HK_LIMIT = 20


class HeldKarpLimitError(ValueError):
    pass


@dataclass(frozen=True)
class PathQuery:
    start: int
    end: int
    interior: frozenset

    def __post_init__(self):
        if self.start in self.interior or self.end in self.interior:
            raise ValueError("path endpoints must not be interior nodes")
        if self.start == self.end and not self.interior:
            raise ValueError("closed path needs a nonempty interior")


def _completion_table(d, end: int, nodes: Sequence[int]):
    """best[mask][k] = shortest path from nodes[k] through nodes in ``mask``
    (nodes[k] not in mask) finishing at ``end``."""
    m = len(nodes)
    full = 1 << m
    inf = float("inf")
    best = [[inf] * m for _ in range(full)]
    for k, v in enumerate(nodes):
        best[0][k] = d[v][end]
    for mask in range(1, full):
        row = best[mask]
        members = [j for j in range(m) if mask >> j & 1]
        for k in range(m):
            if mask >> k & 1:
                continue
            dk = d[nodes[k]]
            b = inf
            for j in members:
                c = dk[nodes[j]] + best[mask ^ (1 << j)][j]
                if c < b:
                    b = c
            row[k] = b
    return best


class TspOracle:
    """Per-instance Held-Karp queries with a bounded LRU cache on path lengths."""

    def __init__(self, inst: Instance, hk_limit: int = HK_LIMIT, cache_size: int = 1_000_000):
        self.inst = inst
        self.hk_limit = hk_limit
        self.cache_size = cache_size
        self._cache: OrderedDict = OrderedDict()
        self._tours: dict = {}
        self.queries = 0

    def _check(self, size: int):
        if size > self.hk_limit:
            raise HeldKarpLimitError(f"Held-Karp limited to {self.hk_limit} nodes, got {size}")

    def path_length(self, start: int, end: int, interior: Iterable[int]) -> float:
        interior = frozenset(interior)
        key = (start, end, interior)
        cache = self._cache
        if key in cache:
            cache.move_to_end(key)
            return cache[key]
        self.queries += 1
        PathQuery(start, end, interior)
        self._check(len(interior))
        d = self.inst.d
        if not interior:
            val = d[start][end]
        else:
            nodes = sorted(interior)
            best = _completion_table(d, end, nodes)
            full = (1 << len(nodes)) - 1
            ds = d[start]
            val = min(ds[v] + best[full ^ (1 << k)][k] for k, v in enumerate(nodes))
        cache[key] = val
        if len(cache) > self.cache_size:
            cache.popitem(last=False)
        return val

    def held_karp_path(self, q: PathQuery) -> float:
        return self.path_length(q.start, q.end, q.interior)

    def held_karp_tour(self, customers: Iterable[int]):
        """Shortest depot tour over ``customers``; ties go to the lexicographically
        smallest visiting order."""
        nodes = sorted(set(customers))
        if not nodes:
            raise ValueError("tour needs at least one customer")
        self._check(len(nodes))
        key = tuple(nodes)
        if key not in self._tours:
            if len(self._tours) >= self.cache_size:
                self._tours.clear()
            self._tours[key] = self._tour(nodes)
        return self._tours[key]

    def _tour(self, nodes):
        d = self.inst.d
        best = _completion_table(d, 0, nodes)
        full = (1 << len(nodes)) - 1
        opt = min(d[0][v] + best[full ^ (1 << k)][k] for k, v in enumerate(nodes))
        tol = 1e-9 * max(1.0, abs(opt))
        # greedy reconstruction in increasing node id keeps the lexicographic minimum
        order = []
        mask, cur, acc = full, 0, 0.0
        while mask:
            for k, v in enumerate(nodes):
                if not mask >> k & 1:
                    continue
                rest = mask ^ (1 << k)
                if acc + d[cur][v] + best[rest][k] <= opt + tol:
                    order.append(v)
                    acc += d[cur][v]
                    mask, cur = rest, v
                    break
            else:  # pragma: no cover - numerical safety net
                raise RuntimeError("Held-Karp reconstruction failed")
        return tuple(order), self.inst.path_length((0,) + tuple(order) + (0,))

    def is_tsp_violating_path(self, path: Sequence[int], tol: float = LENGTH_TOL) -> bool:
        path = tuple(path)
        if len(path) < 3:
            raise ValueError("a TSP-violating path needs at least 3 nodes")
        interior = path[1:-1]
        if 0 in interior:
            raise ValueError("depot may only appear as a path endpoint")
        if len(set(interior)) != len(interior) or path[0] in interior or path[-1] in interior:
            raise ValueError(f"path {path} is not elementary")
        best = self.path_length(path[0], path[-1], interior)
        return best < self.inst.path_length(path) - tol

    def is_tsp_optimal_route(self, route: Route, tol: float = LENGTH_TOL) -> bool:
        if len(route.seq) <= 2:
            return True
        return self.path_length(0, 0, route.seq) >= route.length - tol

    def tsp_optimalize_route(self, route: Route) -> Route:
        if self.is_tsp_optimal_route(route):
            return route
        order, _ = self.held_karp_tour(route.seq)
        return Route.from_seq(self.inst, order)


def held_karp_tour(inst: Instance, customers):
    return TspOracle(inst).held_karp_tour(customers)


def held_karp_path(inst: Instance, q: PathQuery) -> float:
    return TspOracle(inst).held_karp_path(q)


def is_tsp_violating_path(inst: Instance, path) -> bool:
    return TspOracle(inst).is_tsp_violating_path(path)


def is_tsp_optimal_route(inst: Instance, route: Route) -> bool:
    return TspOracle(inst).is_tsp_optimal_route(route)


def tsp_optimalize_route(inst: Instance, route: Route) -> Route:
    return TspOracle(inst).tsp_optimalize_route(route)
