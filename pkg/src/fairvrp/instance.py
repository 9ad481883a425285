"""Problem data for the fair capacitated VRP: instances, routes, file format."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

LENGTH_TOL = 1e-6
ROUNDING_MODES = ("EXACT", "INT")


class InstanceError(ValueError):
    """Raised for malformed or infeasible instance data."""


@dataclass(frozen=True, eq=False)
class Instance:
    """Customers are 1..n, the depot is node 0.

    Either ``coords`` (n+1 points) or ``matrix`` (explicit (n+1)x(n+1)
    distances) must be given. ``budget`` may be left as None when only
    ``budget_pct`` is known; see :func:`fairvrp.bnb.resolve_budget`.
    """

    n: int
    K: int
    Q: int
    demand: tuple
    coords: Optional[tuple] = None
    matrix: Optional[tuple] = None
    budget: Optional[float] = None
    budget_pct: Optional[float] = None
    rounding: str = "EXACT"
    name: str = "instance"
    dist: np.ndarray = field(init=False, repr=False)
    d: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise InstanceError("need at least one customer")
        if self.K < 1:
            raise InstanceError("fleet size K must be positive")
        if self.Q < 1:
            raise InstanceError("capacity Q must be positive")
        if self.rounding not in ROUNDING_MODES:
            raise InstanceError(f"unknown rounding mode {self.rounding!r}")
        if len(self.demand) != self.n + 1 or self.demand[0] != 0:
            raise InstanceError("demand must have n+1 entries with depot demand 0")
        for i in self.customers:
            if not 1 <= self.demand[i] <= self.Q:
                raise InstanceError(f"demand of customer {i} must lie in [1, Q]")
        if sum(self.demand) > self.K * self.Q:
            raise InstanceError("total demand exceeds fleet capacity K*Q")
        if self.budget is not None and self.budget <= 0:
            raise InstanceError("budget must be positive")

        if self.matrix is not None:
            dist = np.array(self.matrix, dtype=np.float64)
            if dist.shape != (self.n + 1, self.n + 1):
                raise InstanceError("distance matrix must be (n+1)x(n+1)")
            if (dist < 0).any():
                raise InstanceError("distances must be nonnegative")
            np.fill_diagonal(dist, 0.0)
        elif self.coords is not None:
            if len(self.coords) != self.n + 1:
                raise InstanceError("need n+1 coordinates (depot first)")
            pts = np.array(self.coords, dtype=np.float64)
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=2))
            if self.rounding == "INT":
                dist = np.floor(dist + 0.5)
        else:
            raise InstanceError("instance needs coordinates or a distance matrix")
        dist.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "d", dist.tolist())

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    @property
    def nodes(self) -> range:
        return range(self.n + 1)

    def distance(self, i: int, j: int) -> float:
        return self.d[i][j]

    def path_length(self, path: Sequence[int]) -> float:
        d = self.d
        return sum(d[a][b] for a, b in zip(path, path[1:]))

    def with_budget(self, budget: float) -> "Instance":
        return replace(self, budget=float(budget))


def distance(inst: Instance, i: int, j: int) -> float:
    return inst.d[i][j]


def budget_from_percentage(pct: float, baseline: float) -> float:
    if pct < 100:
        raise ValueError("budget percentage must be at least 100")
    if baseline <= 0:
        raise ValueError("baseline distance must be positive")
    return baseline * pct / 100.0


@dataclass(frozen=True)
class Route:
    """Depot-to-depot elementary cycle; the depot is implicit at both ends."""

    seq: tuple
    length: float
    load: int

    @classmethod
    def from_seq(cls, inst: Instance, seq: Sequence[int]) -> "Route":
        seq = tuple(int(c) for c in seq)
        if not seq:
            raise ValueError("route must visit at least one customer")
        if len(set(seq)) != len(seq):
            raise ValueError(f"route {seq} is not elementary")
        if any(c < 1 or c > inst.n for c in seq):
            raise ValueError(f"route {seq} contains non-customer nodes")
        return cls(seq, inst.path_length((0,) + seq + (0,)), sum(inst.demand[c] for c in seq))

    @property
    def last(self) -> int:
        return self.seq[-1]

    @cached_property
    def covered(self) -> frozenset:
        return frozenset(self.seq)

    @property
    def nodes(self) -> tuple:
        return (0,) + self.seq + (0,)

    @cached_property
    def arcs(self) -> tuple:
        p = self.nodes
        return tuple(zip(p, p[1:]))

    @cached_property
    def arc_set(self) -> frozenset:
        return frozenset(self.arcs)


def solution_range(routes: Sequence[Route]) -> float:
    if not routes:
        return 0.0
    lengths = [r.length for r in routes]
    return max(lengths) - min(lengths)


def check_solution(inst: Instance, routes: Sequence[Route], tol: float = LENGTH_TOL) -> list:
    """Return a list of violated feasibility conditions (empty when feasible)."""
    problems = []
    if len(routes) != inst.K:
        problems.append(f"uses {len(routes)} routes, fleet is {inst.K}")
    seen = [c for r in routes for c in r.seq]
    if sorted(seen) != list(inst.customers):
        problems.append("customers not covered exactly once")
    for r in routes:
        if r.load > inst.Q:
            problems.append(f"route {r.seq} exceeds capacity")
    if inst.budget is not None and sum(r.length for r in routes) > inst.budget + tol:
        problems.append("total length exceeds budget")
    return problems


# ---------------------------------------------------------------------------
# text format


def _fail(lineno: int, msg: str):
    raise InstanceError(f"line {lineno}: {msg}")


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format (see README)."""
    header = {}
    coords = {}
    demands = {}
    matrix_rows = []
    section = None
    demand_line = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].upper()
        if key in ("COORDS", "DEMANDS", "MATRIX") and len(tok) == 1:
            section = key
            continue
        if key == "EOF":
            break
        if key in ("NAME", "N", "K", "Q", "BUDGET", "BUDGET_PCT", "ROUNDING"):
            if len(tok) != 2:
                _fail(lineno, f"{key} expects exactly one value")
            header[key] = (tok[1], lineno)
            section = None
            continue
        try:
            if section == "COORDS":
                if len(tok) != 3:
                    _fail(lineno, "COORDS entries are 'id x y'")
                coords[int(tok[0])] = (float(tok[1]), float(tok[2]))
            elif section == "DEMANDS":
                if len(tok) != 2:
                    _fail(lineno, "DEMANDS entries are 'id d'")
                demands[int(tok[0])] = int(tok[1])
                demand_line[int(tok[0])] = lineno
            elif section == "MATRIX":
                matrix_rows.append([float(v) for v in tok])
            else:
                _fail(lineno, f"unexpected content {line!r}")
        except ValueError as exc:
            if isinstance(exc, InstanceError):
                raise
            _fail(lineno, f"cannot parse {line!r}")

    def hdr_int(key):
        if key not in header:
            raise InstanceError(f"missing header {key}")
        val, lineno = header[key]
        try:
            v = int(val)
        except ValueError:
            _fail(lineno, f"{key} must be an integer")
        if v <= 0:
            _fail(lineno, f"{key} must be positive")
        return v

    n, K, Q = hdr_int("N"), hdr_int("K"), hdr_int("Q")
    for i, d in demands.items():
        if not 1 <= i <= n:
            _fail(demand_line[i], f"demand for unknown customer {i}")
        if d < 1:
            _fail(demand_line[i], f"demand of customer {i} must be positive")
        if d > Q:
            _fail(demand_line[i], f"demand {d} of customer {i} exceeds capacity Q={Q}")
    demand = [0] + [demands.get(i, 1) for i in range(1, n + 1)]
    if demands and len(demands) != n:
        raise InstanceError("DEMANDS section must list every customer")

    budget = budget_pct = None
    if "BUDGET" in header:
        val, lineno = header["BUDGET"]
        try:
            budget = float(val)
        except ValueError:
            _fail(lineno, "BUDGET must be a number")
    if "BUDGET_PCT" in header:
        val, lineno = header["BUDGET_PCT"]
        try:
            budget_pct = float(val)
        except ValueError:
            _fail(lineno, "BUDGET_PCT must be a number")
        if budget_pct < 100:
            _fail(lineno, "BUDGET_PCT must be at least 100")
    rounding = header.get("ROUNDING", ("EXACT", 0))[0].upper()
    if rounding not in ROUNDING_MODES:
        _fail(header["ROUNDING"][1], f"ROUNDING must be one of {ROUNDING_MODES}")

    coord_t = matrix_t = None
    if matrix_rows:
        matrix_t = tuple(tuple(r) for r in matrix_rows)
    else:
        if sorted(coords) != list(range(n + 1)):
            raise InstanceError("COORDS section must list ids 0..N")
        coord_t = tuple(coords[i] for i in range(n + 1))
    return Instance(
        n=n, K=K, Q=Q, demand=tuple(demand), coords=coord_t, matrix=matrix_t,
        budget=budget, budget_pct=budget_pct, rounding=rounding,
        name=header.get("NAME", ("instance", 0))[0],
    )


def emit_instance(inst: Instance) -> str:
    lines = [f"NAME {inst.name}", f"N {inst.n}", f"K {inst.K}", f"Q {inst.Q}"]
    if inst.budget is not None:
        lines.append(f"BUDGET {inst.budget!r}")
    if inst.budget_pct is not None:
        lines.append(f"BUDGET_PCT {inst.budget_pct!r}")
    lines.append(f"ROUNDING {inst.rounding}")
    if inst.matrix is not None:
        lines.append("MATRIX")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in inst.matrix)
    else:
        lines.append("COORDS")
        lines.extend(f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(inst.coords))
    lines.append("DEMANDS")
    lines.extend(f"{i} {inst.demand[i]}" for i in inst.customers)
    return "\n".join(lines) + "\n"


def load_instance(path) -> Instance:
    with open(path) as fh:
        return parse_instance(fh.read())


def random_instance(n: int, K: int, Q: int, seed: int, demand_max: int = 1,
                    budget: Optional[float] = None, budget_pct: Optional[float] = None,
                    rounding: str = "EXACT", name: Optional[str] = None) -> Instance:
    """Uniform coordinates in [0,1000]^2; demands uniform in [1, demand_max]."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1000.0, size=(n + 1, 2))
    pts = np.round(pts, 3)
    demand = [0] + [int(v) for v in rng.integers(1, demand_max + 1, size=n)]
    return Instance(
        n=n, K=K, Q=Q, demand=tuple(demand),
        coords=tuple((float(x), float(y)) for x, y in pts),
        budget=budget, budget_pct=budget_pct, rounding=rounding,
        name=name or f"rand_n{n}_k{K}_s{seed}",
    )


FIG1_COORDS = (
    (500, 80),
    (600, 400), (750, 600), (850, 350),
    (350, 250), (180, 370), (120, 570), (280, 710),
)


FIG1_Q = 4
FIG1_BUDGET_PCT = 105.0


def fig1_instance(budget: Optional[float] = None, budget_pct: Optional[float] = FIG1_BUDGET_PCT,
                  Q: int = FIG1_Q) -> Instance:
    """Two-vehicle example whose range improves by visiting customers out of order.

    With Q=4 and a 105% budget the best TSP-optimal range is 227 while the best
    range with free visiting order is 87.
    """
    return Instance(
        n=7, K=2, Q=Q, demand=(0,) + (1,) * 7,
        coords=tuple((float(x), float(y)) for x, y in FIG1_COORDS),
        budget=budget, budget_pct=None if budget is not None else budget_pct,
        name="fig1",
    )


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


__all__ = [
    "Instance", "InstanceError", "Route", "parse_instance", "emit_instance",
    "load_instance", "distance", "budget_from_percentage", "random_instance",
    "fig1_instance", "solution_range", "check_solution", "LENGTH_TOL", "ceil_div",
]
