import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairvrp.instance import (InstanceError, Route, budget_from_percentage, check_solution,
                              distance, emit_instance, fig1_instance, load_instance,
                              parse_instance, random_instance, solution_range)


def same_instance(a, b):
    return (a.n, a.K, a.Q, a.demand, a.budget, a.budget_pct, a.rounding, a.name) == \
        (b.n, b.K, b.Q, b.demand, b.budget, b.budget_pct, b.rounding, b.name) and \
        np.array_equal(a.dist, b.dist)


def test_fixture_file(fig1_file):
    inst = load_instance(fig1_file)
    assert (inst.n, inst.K, inst.Q) == (7, 2, 4)
    assert inst.budget is None and inst.budget_pct == 105.0
    assert np.array_equal(inst.dist, fig1_instance().dist)


def test_minimal_instance():
    inst = parse_instance("N 1\nK 1\nQ 1\nCOORDS\n0 0 0\n1 3 4\nDEMANDS\n1 1\n")
    assert inst.n == 1 and inst.d[0][1] == 5.0


def test_demand_above_capacity_names_line():
    text = "N 1\nK 1\nQ 3\nCOORDS\n0 0 0\n1 3 4\nDEMANDS\n1 5\n"
    with pytest.raises(InstanceError, match="line 8"):
        parse_instance(text)


@pytest.mark.parametrize("bad", ["K 0", "Q -2"])
def test_nonpositive_header(bad):
    text = f"N 1\nK 1\nQ 1\n{bad}\nCOORDS\n0 0 0\n1 1 1\n"
    with pytest.raises(InstanceError, match="line 4"):
        parse_instance(text)


def test_distance_exact_and_rounded():
    inst = fig1_instance()
    assert distance(inst, 0, 1) == pytest.approx(math.hypot(100, 320), abs=1e-9)
    assert distance(inst, 0, 1) == pytest.approx(335.2611, abs=1e-4)
    assert distance(inst, 3, 3) == 0.0
    rounded = fig1_instance()
    rounded = parse_instance(emit_instance(rounded).replace("ROUNDING EXACT", "ROUNDING INT"))
    assert distance(rounded, 0, 1) == 335.0


def test_budget_from_percentage():
    assert budget_from_percentage(105, 1000) == pytest.approx(1050)
    assert budget_from_percentage(100, 1000) == 1000
    assert budget_from_percentage(110, 2820.08) == pytest.approx(3102.088)
    with pytest.raises(ValueError):
        budget_from_percentage(99, 1000)


def test_route_lengths_of_the_example(fig1):
    assert Route.from_seq(fig1, (1, 2, 3)).length == pytest.approx(1296.56, abs=0.01)
    assert Route.from_seq(fig1, (4, 5, 6, 7)).length == pytest.approx(1523.52, abs=0.01)
    assert Route.from_seq(fig1, (1, 3, 2)).length == pytest.approx(1436.45, abs=0.01)


def test_two_depicted_solutions(fig1):
    a = [Route.from_seq(fig1, (1, 2, 3)), Route.from_seq(fig1, (4, 5, 6, 7))]
    b = [Route.from_seq(fig1, (1, 3, 2)), Route.from_seq(fig1, (4, 5, 6, 7))]
    assert solution_range(a) == pytest.approx(227, abs=1)
    assert solution_range(b) == pytest.approx(87, abs=1)
    assert check_solution(fig1, a) == [] and check_solution(fig1, b) == []


def test_check_solution_reports_problems(fig1):
    routes = [Route.from_seq(fig1, (1, 2, 3, 4, 5))]
    problems = check_solution(fig1, routes)
    assert any("fleet" in p for p in problems)
    assert any("capacity" in p for p in problems)


def test_route_rejects_repeats(fig1):
    with pytest.raises(ValueError):
        Route.from_seq(fig1, (1, 2, 1))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**31 - 1), dmax=st.integers(1, 3),
       rounding=st.sampled_from(["EXACT", "INT"]))
def test_emit_parse_round_trip(n, seed, dmax, rounding):
    inst = random_instance(n, K=n, Q=3, seed=seed, demand_max=dmax, budget_pct=110.0,
                           rounding=rounding, name=f"r{seed}")
    assert same_instance(parse_instance(emit_instance(inst)), inst)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_triangle_inequality(seed):
    d = random_instance(8, 2, 8, seed).dist
    # d[i,k] <= d[i,j] + d[j,k] for all triples
    assert (d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9).all()
