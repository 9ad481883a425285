import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairvrp.instance import Route
from fairvrp.lp import LpModel, lp_solve, primal_residual
from fairvrp.master import Rmp


def test_single_variable():
    m = LpModel()
    r = m.add_row(">=", 3.0)
    m.add_column(1.0, {r: 1.0}, 0.0, 10.0)
    sol = lp_solve(m)
    assert sol.optimal
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.duals[r] == pytest.approx(1.0)


def test_infeasible_pair():
    m = LpModel()
    a = m.add_row("<=", 1.0)
    b = m.add_row(">=", 2.0)
    m.add_column(0.0, {a: 1.0, b: 1.0})
    assert lp_solve(m).status == "infeasible"


def test_incremental_edits_match_fresh_model():
    m = LpModel()
    r = m.add_row(">=", 2.0)
    m.add_column(3.0, {r: 1.0})
    assert lp_solve(m).objective == pytest.approx(6.0)
    m.add_column(1.0, {r: 1.0})
    assert lp_solve(m).objective == pytest.approx(2.0)
    m.set_bounds(1, 0.0, 0.5)
    assert lp_solve(m).objective == pytest.approx(0.5 + 3 * 1.5)
    c = m.add_row("<=", 2.0, coefs={0: 1.0})
    sol = lp_solve(m)
    assert sol.objective == pytest.approx(0.5 + 3 * 1.5)
    m.set_rhs(c, 1.0)
    assert lp_solve(m).status == "infeasible"


def test_example_master_relaxation_below_87(fig1):
    rmp = Rmp(fig1)
    for seq in [(1, 2, 3), (4, 5, 6, 7), (1, 3, 2)]:
        rmp.add_route(Route.from_seq(fig1, seq))
    sol = rmp.solve_lp()
    assert sol.optimal and sol.objective <= 87.1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), rows=st.integers(1, 6), cols=st.integers(1, 8))
def test_weak_duality_and_resolve(seed, rows, cols):
    rng = np.random.default_rng(seed)
    m = LpModel()
    senses = rng.choice(["<=", ">=", "="], size=rows)
    for s in senses:
        m.add_row(str(s), float(rng.integers(0, 5)))
    for _ in range(cols):
        coefs = {i: float(rng.integers(-2, 3)) for i in range(rows)}
        m.add_column(float(rng.integers(0, 6)), coefs, 0.0, float(rng.choice([np.inf, 4.0])))
    sol = lp_solve(m)
    if not sol.optimal:
        return
    assert primal_residual(m, sol.x) <= 1e-6
    assert sol.dual_objective <= sol.objective + 1e-6
    assert lp_solve(m).objective == pytest.approx(sol.objective, abs=1e-9)
