import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairvrp.bnb import resolve_budget
from fairvrp.cuts import (RCI, TSP_BACKWARD, TSP_BASE, TSP_FORWARD, Cut, base_cut, dump_cuts,
                          lift_backward, lift_forward, rci_cut, separate_rci, separate_tsp,
                          separate_tsp_paths, tsp_cuts_for_path)
from fairvrp.instance import Route, parse_instance, random_instance
from fairvrp.master import arc_flows
from fairvrp.oracle import validate_cuts
from fairvrp.tsp import TspOracle


def flows_of(inst, *seqs):
    rs = [Route.from_seq(inst, s) for s in seqs]
    return arc_flows([1.0] * len(rs), rs)


def permutation_violating(inst, path):
    best = min(inst.path_length((path[0],) + p + (path[-1],)) for p in itertools.permutations(path[1:-1]))
    return best < inst.path_length(path) - 1e-6


def test_separation_on_depicted_solutions(fig1, oracle):
    bad = flows_of(fig1, (1, 3, 2), (4, 5, 6, 7))
    cuts = separate_tsp(bad, fig1, oracle)
    hit = [c for c in cuts if c.origin == (1, 3, 2, 0)]
    assert hit and hit[0].rhs == 2 and hit[0].kind == TSP_BASE
    assert hit[0].violation(bad) == pytest.approx(1.0)
    good = flows_of(fig1, (1, 2, 3), (4, 5, 6, 7))
    assert separate_tsp(good, fig1, oracle) == []
    assert separate_tsp({}, fig1, oracle) == []


def test_base_cut_shape():
    c = base_cut((1, 3, 2, 0))
    assert c.arcs == frozenset({(1, 3), (3, 2), (2, 0)}) and c.sense == "<=" and c.rhs == 2


def test_forward_lifting_terms(fig1, oracle):
    path = (0, 1, 3, 2)
    c = lift_forward(path, fig1, oracle)
    assert c.kind == TSP_FORWARD and c.rhs == 2
    assert base_cut(path).arcs <= c.arcs
    assert (3, 1) in c.arcs                    # back to an earlier customer
    assert not any(u == 0 for u, v in c.arcs if (u, v) != (0, 1))  # depot prefix adds nothing
    for j in fig1.customers:
        if j not in path and oracle.is_tsp_violating_path((0, 1, j)):
            assert (1, j) in c.arcs


def test_forward_capacity_term():
    inst = parse_instance("N 3\nK 3\nQ 3\nCOORDS\n0 0 0\n1 0 10\n2 0 20\n3 0 30\n"
                          "DEMANDS\n1 2\n2 1\n3 2\n")
    o = TspOracle(inst)
    c = lift_forward((0, 1, 2, 0), inst, o)
    assert (1, 3) in c.arcs                    # 2 + 2 > 3


def test_backward_lifting_terms(fig1, oracle):
    path = (1, 3, 2, 0)
    c = lift_backward(path, fig1, oracle)
    assert c.kind == TSP_BACKWARD and base_cut(path).arcs <= c.arcs
    assert (2, 3) in c.arcs                    # later customer back into v_h
    inst = parse_instance("N 3\nK 3\nQ 3\nCOORDS\n0 0 0\n1 0 10\n2 0 20\n3 0 30\n"
                          "DEMANDS\n1 2\n2 1\n3 2\n")
    cb = lift_backward((2, 3, 0), inst, TspOracle(inst))
    assert (1, 3) in cb.arcs                   # d_1 + d_3 > Q


def test_both_gives_two_inequalities(fig1, oracle):
    kinds = [c.kind for c in tsp_cuts_for_path((1, 3, 2, 0), fig1, oracle, "both")]
    assert kinds == [TSP_FORWARD, TSP_BACKWARD]
    assert [c.kind for c in tsp_cuts_for_path((1, 3, 2, 0), fig1, oracle, "none")] == [TSP_BASE]


def test_rci_examples():
    inst = parse_instance("N 3\nK 2\nQ 2\nCOORDS\n0 0 0\n1 0 10\n2 10 10\n3 10 0\n")
    c = rci_cut({1, 2, 3}, inst)
    assert c.rhs == 2 and c.sense == ">="
    cycle = {(1, 2): 1.0, (2, 3): 1.0, (3, 1): 0.5, (3, 0): 0.5, (0, 1): 0.5}
    assert c.violation(cycle) == pytest.approx(1.5)
    assert any(k.origin == (1, 2, 3) for k in separate_rci(cycle, inst))
    assert rci_cut({1}, inst).rhs == 1
    feasible = flows_of(inst, (1, 2), (3,))
    assert separate_rci(feasible, inst) == []


def test_dump_format():
    text = dump_cuts([base_cut((1, 3, 2, 0))])
    assert text == "TSP-base 2 1-3,2-0,3-2\n"


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(4, 7))
def test_separation_sound_lifted_stronger_and_valid(seed, n):
    inst = resolve_budget(random_instance(n, 2, n, seed, budget_pct=120.0))
    o = TspOracle(inst)
    rng = np.random.default_rng(seed)
    # random fractional mix of routes
    pool = []
    for _ in range(6):
        k = int(rng.integers(1, n + 1))
        pool.append(Route.from_seq(inst, tuple(rng.permutation(np.arange(1, n + 1))[:k])))
    flows = arc_flows(rng.uniform(0, 1, size=len(pool)), pool)
    cuts = []
    for path, viol in separate_tsp_paths(flows, inst, o):
        assert permutation_violating(inst, path)
        base = base_cut(path)
        assert base.violation(flows) == pytest.approx(viol, abs=1e-9)
        for c in tsp_cuts_for_path(path, inst, o, "both"):
            assert c.violation(flows) >= base.violation(flows) - 1e-12
            cuts.append(c)
        cuts.append(base)
    cuts += separate_rci(flows, inst)
    report = validate_cuts(inst, cuts)
    assert report.clean, report.violation
