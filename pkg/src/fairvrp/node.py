"""Branch-and-bound node state shared by the master, pricing and tree search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

from .instance import Route


@dataclass(frozen=True)
class BnBNode:
    """Restrictions active at one node of the search tree.

    Routes must satisfy ``len_lo <= length <= len_hi`` and use only allowed arcs.
    Forcing customer ``i`` to be last is the same as forcing arc ``(i, 0)``.
    """

    id: int = 0
    parent: Optional[int] = None
    depth: int = 0
    len_lo: float = 0.0
    len_hi: float = math.inf
    eta_lb: float = 0.0
    gamma_ub: float = math.inf
    forbidden_arcs: frozenset = frozenset()
    forced_arcs: frozenset = frozenset()
    forbidden_last: frozenset = frozenset()
    forced_last: frozenset = frozenset()
    lp_bound: float = -math.inf
    label: str = field(default="root", compare=False)

    @cached_property
    def _forced_succ(self) -> dict:
        succ = {u: v for u, v in self.forced_arcs if u != 0}
        succ.update({i: 0 for i in self.forced_last})
        return succ

    @cached_property
    def _forced_pred(self) -> dict:
        return {v: u for u, v in self.forced_arcs if v != 0}

    @cached_property
    def _banned(self) -> frozenset:
        return self.forbidden_arcs | {(i, 0) for i in self.forbidden_last}

    @cached_property
    def _forced_all(self) -> tuple:
        return tuple(sorted(self.forced_arcs | {(i, 0) for i in self.forced_last}))

    def arc_allowed(self, u: int, v: int) -> bool:
        if (u, v) in self.forbidden_arcs:
            return False
        if v == 0 and u in self.forbidden_last:
            return False
        s = self._forced_succ.get(u)
        if s is not None and s != v:
            return False
        p = self._forced_pred.get(v)
        if p is not None and p != u:
            return False
        return True

    def forced_successor(self, u: int) -> Optional[int]:
        return self._forced_succ.get(u)

    def last_allowed(self, i: int) -> bool:
        return self.arc_allowed(i, 0)

    def length_ok(self, length: float, tol: float = 1e-9) -> bool:
        return self.len_lo - tol <= length <= self.len_hi + tol

    def route_allowed(self, route: Route) -> bool:
        if not self.length_ok(route.length):
            return False
        arcs = route.arc_set
        if not arcs.isdisjoint(self._banned):
            return False
        # a forced arc must be used by every route visiting one of its customers
        covered = route.covered
        for u, v in self._forced_all:
            if (u in covered or v in covered) and (u, v) not in arcs:
                return False
        return True

    def child(self, **changes) -> "BnBNode":
        changes.setdefault("parent", self.id)
        changes.setdefault("depth", self.depth + 1)
        return replace(self, **changes)
