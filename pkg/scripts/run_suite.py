"""Seeded random suite: exact mode with and without lifting, postprocess
mode, and the enumerated optimum, one CSV row per instance."""
import argparse
import csv
import sys
import time

from fairvrp.bnb import SolverConfig, postprocess_mode, resolve_budget, solve
from fairvrp.oracle import enumerate_optimum
from fairvrp.suite import SUITE_SEED, suite_instances

FIELDS = ["instance", "oracle", "exact_ub", "nodes_both", "time_both",
          "nodes_none", "time_none", "postprocess_ub", "postprocess_gap"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=SUITE_SEED)
    ap.add_argument("--csv", default="-")
    args = ap.parse_args()

    out = sys.stdout if args.csv == "-" else open(args.csv, "w", newline="")
    w = csv.DictWriter(out, fieldnames=FIELDS)
    w.writeheader()
    for raw in suite_instances(args.count, args.seed):
        inst = resolve_budget(raw)
        row = {"instance": inst.name, "oracle": enumerate_optimum(inst, "fcvrp_tsp").best}
        for lifting in ("both", "none"):
            t0 = time.perf_counter()
            res = solve(inst, SolverConfig(lifting=lifting))
            row[f"nodes_{lifting}"] = res.stats["nodes"]
            row[f"time_{lifting}"] = round(time.perf_counter() - t0, 3)
            if lifting == "both":
                row["exact_ub"] = res.ub
        pp = postprocess_mode(inst)
        row["postprocess_ub"], row["postprocess_gap"] = pp.ub, pp.gap
        w.writerow(row)
        out.flush()


if __name__ == "__main__":
    main()
