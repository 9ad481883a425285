import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairvrp.bnb import resolve_budget
from fairvrp.cuts import base_cut
from fairvrp.instance import Route, parse_instance, random_instance
from fairvrp.master import (DualValues, Rmp, arc_flows, build_initial_rmp, reduced_cost, rmh,
                            solve_relaxation, zero_duals)
from fairvrp.node import BnBNode
from fairvrp.oracle import enumerate_optimum
from fairvrp.pricing import Pricer
from fairvrp.tsp import TspOracle


def routes(inst, *seqs):
    return [Route.from_seq(inst, s) for s in seqs]


def test_row_counts(fig1):
    rmp = build_initial_rmp(fig1)
    assert len(rmp.part) == 7 and rmp.budget is not None and rmp.fleet is not None
    assert len(rmp.maxlink) + len(rmp.minlink) == 14
    assert len(rmp.routes) == 7


def test_reduced_cost_examples(fig1):
    r = Route.from_seq(fig1, (1, 2, 3))
    assert reduced_cost(r, zero_duals(fig1)) == 0.0
    d = zero_duals(fig1)
    d.mu[1:4] = [100.0, 200.0, 300.0]
    d.sigma = 50.0
    assert reduced_cost(r, d) == pytest.approx(-650.0)
    d = zero_duals(fig1)
    d.lam = 1.0
    assert reduced_cost(r, d) == pytest.approx(1296.56, abs=0.01)


def test_cut_dual_enters_reduced_cost(fig1):
    cut = base_cut((1, 3, 2, 0))
    r = Route.from_seq(fig1, (1, 3, 2))
    d = zero_duals(fig1, n_cuts=1)
    d.cut_duals[0] = -2.0
    assert reduced_cost(r, d, [cut]) == pytest.approx(6.0)  # three arcs charged 2 each


def test_arc_flows(fig1):
    b = routes(fig1, (1, 3, 2), (4, 5, 6, 7))
    flows = arc_flows([1.0, 1.0], b)
    assert len(flows) == 9 and set(flows.values()) == {1.0}
    half = routes(fig1, (1, 2), (1, 3))
    assert arc_flows([0.5, 0.5], half)[(0, 1)] == pytest.approx(1.0)
    assert arc_flows([0.0, 0.0], half) == {}


def test_banned_seed_route_disabled(fig1):
    node = BnBNode(forbidden_arcs=frozenset({(0, 3)}))
    rmp = build_initial_rmp(fig1, node)
    k = rmp.index[(3,)]
    assert rmp.lp.ub[rmp.route_cols[k]] == 0.0
    assert rmp.lp.ub[rmp.route_cols[rmp.index[(2,)]]] == math.inf


def test_root_bound_sandwich(fig1):
    rmp = build_initial_rmp(fig1)
    rel = solve_relaxation(rmp, BnBNode(), Pricer(fig1))
    assert rel.status == "optimal"
    assert 0.0 <= rel.objective <= 227.0
    assert rel.certificate >= -1e-6


def test_single_customer_bound_zero():
    inst = parse_instance("N 1\nK 1\nQ 1\nBUDGET 100\nCOORDS\n0 0 0\n1 3 4\n")
    rel = solve_relaxation(build_initial_rmp(inst), BnBNode(), Pricer(inst))
    assert rel.objective == pytest.approx(0.0)


def test_rmh_examples(fig1):
    a = routes(fig1, (1, 2, 3), (4, 5, 6, 7))
    sol = rmh(fig1, a, oracle=TspOracle(fig1))
    assert sorted(r.seq for r in sol) == [(1, 2, 3), (4, 5, 6, 7)]
    b = routes(fig1, (1, 3, 2), (4, 5, 6, 7))
    sol_b = rmh(fig1, b, oracle=TspOracle(fig1))
    assert sorted(r.seq for r in sol_b) == sorted(r.seq for r in sol)
    assert max(r.length for r in sol_b) - min(r.length for r in sol_b) == pytest.approx(227, abs=1)
    assert rmh(fig1, routes(fig1, (1, 2, 3), (4, 5, 6))) is None


def test_rmh_respects_cutoff(fig1):
    a = routes(fig1, (1, 2, 3), (4, 5, 6, 7))
    assert rmh(fig1, a, incumbent=200.0) is None


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 6), K=st.integers(2, 3))
def test_root_bound_below_oracle_and_certificate(seed, n, K):
    inst = resolve_budget(random_instance(n, K, n, seed, budget_pct=110.0))
    rel = solve_relaxation(build_initial_rmp(inst), BnBNode(), Pricer(inst))
    best = enumerate_optimum(inst, "fcvrp").best
    assert rel.objective <= best + 1e-6
    assert rel.certificate >= -1e-6


def test_cut_never_lowers_bound(fig1):
    rmp = build_initial_rmp(fig1)
    pricer = Pricer(fig1)
    before = solve_relaxation(rmp, BnBNode(), pricer).objective
    rmp.add_cut(base_cut((1, 3, 2, 0)))
    after = solve_relaxation(rmp, BnBNode(), pricer).objective
    assert after >= before - 1e-6
