"""Solve the 7-customer two-vehicle example in every mode and print the
ranges next to the enumerated optima."""
import argparse

from fairvrp.bnb import SolverConfig, mindist_mode, postprocess_mode, resolve_budget, solve
from fairvrp.instance import fig1_instance
from fairvrp.oracle import enumerate_optimum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget-pct", type=float, default=105.0)
    ap.add_argument("-Q", type=int, default=4)
    args = ap.parse_args()

    inst = fig1_instance(budget_pct=args.budget_pct, Q=args.Q)
    print(f"min total distance: {mindist_mode(inst):.4f}")
    inst = resolve_budget(inst)
    print(f"budget L: {inst.budget:.4f}")
    for mode, oracle_mode in (("exact", "fcvrp_tsp"), ("fcvrp", "fcvrp")):
        res = solve(inst, SolverConfig(mode=mode))
        best = enumerate_optimum(inst, oracle_mode).best
        print(f"{mode:>11}: range={res.ub:.4f} oracle={best:.4f} nodes={res.stats['nodes']} "
              f"time={res.stats['time_s']:.2f}s")
        for r in res.routes:
            print(f"{'':>13}route {r.seq} length={r.length:.3f}")
    pp = postprocess_mode(inst)
    print(f"postprocess: lb={pp.lb:.4f} ub={pp.ub:.4f} gap={pp.gap:.2%}")


if __name__ == "__main__":
    main()
