"""End-to-end checks against exhaustive enumeration. Each test prints one
PASS/FAIL line; the 50-instance runs are shared through module fixtures."""
import itertools
import math
import random
import time

import pytest

from fairvrp.bnb import SolverConfig, postprocess_mode, resolve_budget, solve
from fairvrp.instance import Route, fig1_instance, random_instance, solution_range
from fairvrp.oracle import enumerate_optimum, validate_cuts
from fairvrp.suite import suite_instances
from fairvrp.tsp import TspOracle

TOL = 1e-6
N_CUT_CHECK = 20


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def suite():
    runs = []
    for raw in suite_instances():
        t0 = time.perf_counter()
        inst = resolve_budget(raw)
        both = solve(inst, SolverConfig(mode="exact", lifting="both", trace=True))
        elapsed = time.perf_counter() - t0
        runs.append({"inst": inst, "both": both, "time": elapsed,
                     "oracle": enumerate_optimum(inst, "fcvrp_tsp").best})
    return runs


@pytest.fixture(scope="module")
def suite_none(suite):
    return [solve(r["inst"], SolverConfig(mode="exact", lifting="none", trace=True)) for r in suite]


def test_c1_example_reproduction(report):
    inst = fig1_instance()
    t0 = time.perf_counter()
    inst = resolve_budget(inst)
    tsp_sol = [Route.from_seq(inst, s) for s in ((1, 2, 3), (4, 5, 6, 7))]
    free_sol = [Route.from_seq(inst, s) for s in ((1, 3, 2), (4, 5, 6, 7))]
    exact = solve(inst, SolverConfig(mode="exact"))
    free = solve(inst, SolverConfig(mode="fcvrp"))
    elapsed = time.perf_counter() - t0
    o_exact = enumerate_optimum(inst, "fcvrp_tsp").best
    o_free = enumerate_optimum(inst, "fcvrp").best
    checks = [
        abs(solution_range(tsp_sol) - 227) <= 1,
        abs(solution_range(free_sol) - 87) <= 1,
        exact.status == "optimal" and abs(exact.ub - 227) <= 1 and abs(exact.ub - o_exact) <= TOL,
        free.status == "optimal" and abs(free.ub - 87) <= 1 and abs(free.ub - o_free) <= TOL,
        elapsed < 5.0,
    ]
    ok = report(1, all(checks),
                f"depicted={solution_range(tsp_sol):.3f}/{solution_range(free_sol):.3f} "
                f"exact={exact.ub:.3f} fcvrp={free.ub:.3f} time={elapsed:.2f}s")
    assert ok


def test_c2_oracle_equivalence(suite, report):
    bad = [r["inst"].name for r in suite
           if r["both"].status != "optimal" or abs(r["both"].ub - r["oracle"]) > TOL]
    total = sum(r["time"] for r in suite)
    ok = report(2, not bad and len(suite) == 50 and total < 600,
                f"matched={len(suite) - len(bad)}/{len(suite)} total={total:.1f}s mismatches={bad}")
    assert ok


def test_c3_cut_validity(suite, suite_none, report):
    checked = cuts = 0
    violations = []
    for r, none in zip(suite[:N_CUT_CHECK], suite_none[:N_CUT_CHECK]):
        pool = {c.key: c for c in r["both"].cuts + none.cuts}
        rep = validate_cuts(r["inst"], pool.values())
        checked += rep.checked
        cuts += len(pool)
        if not rep.clean:
            violations.append((r["inst"].name, rep.violation[0].kind))
    kinds = sorted({c.kind for r in suite[:N_CUT_CHECK] for c in r["both"].cuts}
                   | {c.kind for n in suite_none[:N_CUT_CHECK] for c in n.cuts})
    ok = report(3, not violations,
                f"cuts={cuts} kinds={kinds} solutions={checked} violations={violations}")
    assert ok


def test_c4_lifting_strength(suite, suite_none, report):
    pairs = [p for r in suite for p in r["both"].trace["lifting"]]
    weaker = sum(1 for base, lifted in pairs if lifted < base - TOL)
    wins = sum(1 for r, n in zip(suite, suite_none)
               if r["both"].stats["nodes"] <= n.stats["nodes"])
    share = wins / len(suite)
    nodes_both = sum(r["both"].stats["nodes"] for r in suite)
    nodes_none = sum(n.stats["nodes"] for n in suite_none)
    ok = report(4, weaker == 0 and bool(pairs) and share >= 0.6,
                f"separations={len(pairs)} weaker={weaker} nodes<= on {wins}/{len(suite)} "
                f"({share:.0%}) total nodes both={nodes_both} none={nodes_none}")
    assert ok


def test_c5_held_karp(report):
    # integer distances so "exact" is not blurred by summation order
    rng = random.Random(5)
    oracles = [TspOracle(random_instance(9, 1, 9, seed=s, rounding="INT")) for s in range(20)]
    bad = 0
    for trial in range(200):
        o = oracles[trial % len(oracles)]
        nodes = tuple(sorted(rng.sample(o.inst.customers, rng.randint(1, 9))))
        tour, hk = o.held_karp_tour(nodes)
        brute = min(o.inst.path_length((0,) + p + (0,)) for p in itertools.permutations(nodes))
        bad += hk != brute or sorted(tour) != list(nodes)
    ok = report(5, bad == 0, f"sets=200 mismatches={bad}")
    assert ok


def test_c6_exact_dominates_postprocess(suite, report):
    worse = []
    for r in suite:
        pp = postprocess_mode(r["inst"])
        if r["both"].ub > pp.ub + TOL:
            worse.append(r["inst"].name)
    fig = resolve_budget(fig1_instance())
    pp_fig = postprocess_mode(fig)
    ex_fig = solve(fig)
    ok = report(6, not worse and abs(pp_fig.gap - 0.617) <= 0.005 and ex_fig.gap == 0.0,
                f"exact>postprocess on {worse}; example gaps postprocess={pp_fig.gap:.4f} "
                f"exact={ex_fig.gap:.4f}")
    assert ok


def test_c7_pricing_certificate(suite, report):
    certs = [c for r in suite for c in r["both"].trace["certificates"]]
    worst = min(certs) if certs else math.inf
    ok = report(7, bool(certs) and worst >= -1e-6,
                f"relaxations={len(certs)} min_reduced_cost={worst:.3e}")
    assert ok
