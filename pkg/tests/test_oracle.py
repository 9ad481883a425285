import math

import pytest
from hypothesis import given, settings, strategies as st

from fairvrp.bnb import resolve_budget
from fairvrp.cuts import Cut, TSP_BASE, base_cut
from fairvrp.instance import random_instance
from fairvrp.oracle import (OracleLimitError, enumerate_optimum, set_partitions,
                            tsp_optimal_solutions, validate_cuts)

STIRLING2 = {(4, 2): 7, (5, 2): 15, (5, 3): 25, (6, 3): 90, (7, 2): 63}


@pytest.mark.parametrize("nk", sorted(STIRLING2))
def test_partition_counts(nk):
    n, k = nk
    parts = list(set_partitions(range(n), k))
    assert len(parts) == STIRLING2[nk]
    assert len({tuple(sorted(p)) for p in parts}) == len(parts)


def test_example_optima(fig1):
    assert enumerate_optimum(fig1, "fcvrp_tsp").best == pytest.approx(227, abs=1)
    assert enumerate_optimum(fig1, "fcvrp").best == pytest.approx(87, abs=1)
    assert enumerate_optimum(fig1, "mindist").best == pytest.approx(2820.08, abs=0.01)


def test_singletons_forced():
    inst = random_instance(4, 4, 1, seed=3, budget=1e9)
    trips = [2 * inst.d[0][i] for i in inst.customers]
    assert enumerate_optimum(inst, "fcvrp_tsp").best == pytest.approx(max(trips) - min(trips))


def test_limits():
    with pytest.raises(OracleLimitError):
        enumerate_optimum(random_instance(10, 2, 10, seed=0, budget=1e9))


def test_validate_cuts(fig1):
    assert validate_cuts(fig1, []).clean
    assert validate_cuts(fig1, [base_cut((1, 3, 2, 0))]).clean
    # forbids using both arcs of a TSP-optimal route prefix, which some solution does
    fake = Cut(TSP_BASE, frozenset({(0, 1), (1, 2)}), "<=", 0.0, (0, 1, 2))
    rep = validate_cuts(fig1, [fake])
    assert not rep.clean and rep.violation[0] is fake


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 7), K=st.integers(2, 3))
def test_free_order_never_worse_and_deterministic(seed, n, K):
    inst = resolve_budget(random_instance(n, K, n, seed, budget_pct=105.0))
    a = enumerate_optimum(inst, "fcvrp")
    assert a.best_range_fcvrp <= a.best_range_tsp + 1e-9
    b = enumerate_optimum(inst, "fcvrp")
    assert a.to_json() == b.to_json()
    assert a.count_feasible >= 1
    sols = list(tsp_optimal_solutions(inst))
    assert sols and all(len(s) == K for s in sols)
