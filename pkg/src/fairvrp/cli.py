"""Command line: ``fairvrp {solve,oracle,bench,gen} ...``.

Exit codes: 0 optimal, 2 stopped with a gap (limits or postprocessing), 1 error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .bnb import MODES, SolverConfig, resolve_budget, solve
from .cuts import LIFTING_MODES, dump_cuts
from .instance import InstanceError, emit_instance, load_instance, random_instance

log = logging.getLogger("fairvrp")

CSV_FIELDS = ["instance", "mode", "lifting", "lb", "ub", "gap", "time_s", "nodes", "cuts"]


@dataclass
class RunConfig:
    mode: str = "exact"
    lifting: str = "both"
    rci: bool = True
    time_limit_s: float = 3600.0
    node_limit: int = 1_000_000
    seed: int = 0
    output: str = "json"
    threads: int = 1

    def solver_config(self) -> SolverConfig:
        return SolverConfig(mode=self.mode, lifting=self.lifting, rci=self.rci,
                            time_limit_s=self.time_limit_s, node_limit=self.node_limit,
                            seed=self.seed)


def _add_run_flags(p: argparse.ArgumentParser, modes):
    p.add_argument("--mode", choices=modes, default="exact")
    p.add_argument("--lifting", choices=LIFTING_MODES, default="both")
    p.add_argument("--rci", dest="rci", action="store_true", default=True)
    p.add_argument("--no-rci", dest="rci", action="store_false")
    p.add_argument("--time-limit", type=float, default=3600.0, dest="time_limit_s")
    p.add_argument("--node-limit", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", choices=("json", "table"), default="json")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; the search is single-threaded")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairvrp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance")
    _add_run_flags(p, MODES)
    p.add_argument("--dump-cuts", metavar="PATH", help="write every generated cut, one per line")

    p = sub.add_parser("oracle", help="exhaustive enumeration (n <= 9)")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("fcvrp", "fcvrp_tsp", "mindist"), default="fcvrp_tsp")
    p.add_argument("--output", choices=("json", "table"), default="json")

    p = sub.add_parser("bench", help="solve every *.inst file in a directory")
    p.add_argument("directory")
    _add_run_flags(p, MODES)
    p.add_argument("--csv", metavar="PATH")

    p = sub.add_parser("gen", help="write a random Euclidean instance")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-Q", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--demand-max", type=int, default=1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--budget", type=float)
    g.add_argument("--budget-pct", type=float, default=110.0)
    p.add_argument("--rounding", choices=("EXACT", "INT"), default="EXACT")
    p.add_argument("-o", "--out", metavar="PATH")
    return ap


def _run_config(args) -> RunConfig:
    return RunConfig(mode=args.mode, lifting=args.lifting, rci=args.rci,
                     time_limit_s=args.time_limit_s, node_limit=args.node_limit,
                     seed=args.seed, output=args.output, threads=args.threads)


def _fmt(v) -> str:
    if v is None:
        return "-"
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _table(payload: dict) -> str:
    lines = [f"{k:>8}: {_fmt(payload[k])}" for k in ("status", "lb", "ub", "gap", "range")]
    for k, v in payload["stats"].items():
        lines.append(f"{k:>8}: {_fmt(v)}")
    for r in payload["routes"]:
        lines.append(f"   route: {' '.join(map(str, r['seq']))}  length={r['length']:.4f} load={r['load']}")
    return "\n".join(lines)


def _emit(payload: dict, output: str):
    if output == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(_table(payload))


def _exit_code(status: str) -> int:
    return 0 if status in ("optimal", "infeasible") else 2


def cmd_solve(args) -> int:
    rc = _run_config(args)
    inst = load_instance(args.instance)
    res = solve(inst, rc.solver_config())
    _emit(res.to_json(), rc.output)
    if args.dump_cuts:
        Path(args.dump_cuts).write_text(dump_cuts(res.cuts))
    return _exit_code(res.status)


def cmd_oracle(args) -> int:
    from .oracle import enumerate_optimum

    inst = load_instance(args.instance)
    if args.mode != "mindist":
        inst = resolve_budget(inst)
    res = enumerate_optimum(inst, args.mode)
    _emit(res.to_json(), args.output)
    return 0


def cmd_bench(args) -> int:
    rc = _run_config(args)
    files = sorted(Path(args.directory).glob("*.inst"))
    if not files:
        raise InstanceError(f"no *.inst files in {args.directory}")
    rows = []
    for f in files:
        res = solve(load_instance(f), rc.solver_config())
        s = res.stats
        rows.append({"instance": f.stem, "mode": rc.mode, "lifting": rc.lifting,
                     "lb": res.lb, "ub": res.ub, "gap": res.gap, "time_s": s.get("time_s", 0.0),
                     "nodes": s.get("nodes", 0), "cuts": s.get("cuts_rci", 0) + s.get("cuts_tsp", 0)})
        log.info("%s lb=%.4f ub=%.4f nodes=%d", f.stem, res.lb, res.ub, s.get("nodes", 0))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            w.writeheader()
            w.writerows(rows)
    n = len(rows)
    finite_gaps = [r["gap"] for r in rows if math.isfinite(r["gap"])]
    summary = {
        "instances": n,
        "solved": sum(1 for r in rows if r["gap"] <= 1e-6),
        "avg_gap": sum(finite_gaps) / len(finite_gaps) if finite_gaps else None,
        "avg_time_s": sum(r["time_s"] for r in rows) / n,
        "avg_nodes": sum(r["nodes"] for r in rows) / n,
        "avg_cuts": sum(r["cuts"] for r in rows) / n,
    }
    if rc.output == "json":
        clean = [{k: _finite(v) for k, v in r.items()} for r in rows]
        print(json.dumps({"rows": clean, "summary": summary}, sort_keys=True))
    else:
        print(" ".join(f"{h:>12}" for h in CSV_FIELDS))
        for r in rows:
            print(" ".join(f"{_fmt(r[h]):>12}" for h in CSV_FIELDS))
        print("summary: " + ", ".join(f"{k}={_fmt(v)}" for k, v in summary.items()))
    return 0 if summary["solved"] == n else 2


def _finite(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def cmd_gen(args) -> int:
    budget_pct = None if args.budget is not None else args.budget_pct
    inst = random_instance(args.n, args.K, args.Q, args.seed, demand_max=args.demand_max,
                           budget=args.budget, budget_pct=budget_pct, rounding=args.rounding)
    text = emit_instance(inst)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"solve": cmd_solve, "oracle": cmd_oracle, "bench": cmd_bench, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
