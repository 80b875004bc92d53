"""Command-line front end: parse inputs, run the engines, emit reports."""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from . import approx as approx_mod
from . import logic as logic_mod
from .cnf import parse_dimacs, probdpll, pwmc_bruteforce, WeightMap
from .core import InvalidInstanceError, QueryStats
from .inference import (
    SequentialOrder,
    dpnl,
    dpnl_gradient,
    finite_difference_partials,
    output_distribution,
)
from .sumtask import (
    SumInstanceSpec,
    build_sum_instance,
    parse_dist_rows,
    right_to_left_order,
    sum_distribution_reference,
)

CSV_HEADER = ["task", "size", "policy", "mean_time_s", "std_time_s", "mean_nodes", "provenance_clauses"]


@dataclass
class RunReport:
    """One command's outcome; serializes to a fixed JSON schema."""

    command: str
    result: object = None
    low: Optional[float] = None
    up: Optional[float] = None
    estimate: Optional[float] = None
    stats: Optional[QueryStats] = None
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_json_dict(self) -> dict:
        stats = self.stats
        return {
            "command": self.command,
            "result": self.result,
            "low": self.low,
            "up": self.up,
            "estimate": self.estimate,
            "oracle_calls": stats.oracle_calls if stats else None,
            "branch_nodes": stats.branch_nodes if stats else None,
            "wall_time_s": stats.wall_time if stats else None,
            "seed": self.seed,
        }


def _fmt(p: float) -> str:
    return "%.12g" % p


def _emit(report: RunReport, args) -> None:
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2)
            fh.write("\n")
    if report.stats is not None:
        print(
            "stats: oracle_calls=%d branch_nodes=%d wall_time_s=%.6f"
            % (report.stats.oracle_calls, report.stats.branch_nodes, report.stats.wall_time)
        )


def _cross_check(name: str, got: float, reference: float, tol: float) -> int:
    diff = abs(got - reference)
    print("%s = %s  |diff| = %.3e  (tol %.1e)" % (name, _fmt(reference), diff, tol))
    if diff > tol:
        print("cross-check FAILED: discrepancy exceeds tolerance", file=sys.stderr)
        return 1
    return 0


def _read_weight_lines(path: str, num_vars: int) -> WeightMap:
    probs = [0.5] * num_vars
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            fields = line.split()
            if fields[0] == "w":
                fields = fields[1:]
            if len(fields) != 2:
                raise InvalidInstanceError("weights line %d malformed" % lineno)
            var = int(fields[0])
            if not 1 <= var <= num_vars:
                raise InvalidInstanceError("weights line %d: variable out of range" % lineno)
            probs[var - 1] = float(fields[1])
    return WeightMap(probs)


def cmd_pwmc(args) -> int:
    with open(args.cnf) as fh:
        formula, file_weights = parse_dimacs(fh.read())
    if args.weights:
        sigma = _read_weight_lines(args.weights, formula.num_vars)
    elif file_weights is not None:
        sigma = file_weights
    else:
        sigma = WeightMap.uniform(formula.num_vars)
    stats = QueryStats()
    start = time.perf_counter()
    value = probdpll(formula, sigma, branch=args.branch, stats=stats)
    stats.wall_time = time.perf_counter() - start
    print("pwmc = %s" % _fmt(value))
    rc = 0
    if args.brute:
        rc = _cross_check("brute", value, pwmc_bruteforce(formula, sigma), args.tol)
    report = RunReport("pwmc", result=value, stats=stats, seed=args.seed)
    _emit(report, args)
    return rc


def _sum_spec_from_args(args) -> SumInstanceSpec:
    if args.uniform:
        return SumInstanceSpec.uniform(args.n)
    if not args.dists:
        raise InvalidInstanceError("need --uniform or --dists")
    text = args.dists
    if not text.lstrip().startswith("["):
        with open(text) as fh:
            text = fh.read()
    rows = parse_dist_rows(json.loads(text), n=args.n)
    return SumInstanceSpec(args.n, rows)


def _sum_order(name: str, n: int):
    if name == "r2l":
        return right_to_left_order(n)
    if name == "seq":
        return SequentialOrder()
    if name == "rev":
        return SequentialOrder(list(range(2 * n - 1, -1, -1)))
    raise InvalidInstanceError("unknown order %r" % name)


def cmd_sum(args) -> int:
    spec = _sum_spec_from_args(args)
    inst, _, oracle = build_sum_instance(spec)
    order = _sum_order(args.order, spec.n)
    rc = 0
    if args.full:
        dist, stats = output_distribution(inst, oracle, order=order)
        total = sum(dist.values())
        for o in range(inst.output_domain.size):
            print("%d %s" % (o, _fmt(dist[o])))
        print("total = %s" % _fmt(total))
        if abs(total - 1.0) > args.tol:
            print("distribution does not sum to 1 within tolerance", file=sys.stderr)
            rc = 1
        report = RunReport(
            "sum", result=[dist[o] for o in range(inst.output_domain.size)], stats=stats,
            seed=args.seed,
        )
    else:
        if args.sum is None:
            raise InvalidInstanceError("need --sum or --full")
        value, stats = dpnl(inst, args.sum, oracle, order=order)
        print("P(sum = %d) = %s" % (args.sum, _fmt(value)))
        if args.brute:
            rc = _cross_check(
                "reference", value, sum_distribution_reference(spec)[args.sum], args.tol
            )
        report = RunReport("sum", result=value, stats=stats, seed=args.seed)
    _emit(report, args)
    return rc


def _build_stop(args) -> approx_mod.StopPolicy:
    if args.stop == "eps-mult":
        if args.eps is None:
            raise InvalidInstanceError("--stop eps-mult needs --eps")
        return approx_mod.EpsMultiplicative(args.eps)
    if args.stop == "eps-add":
        if args.eps is None:
            raise InvalidInstanceError("--stop eps-add needs --eps")
        return approx_mod.EpsAdditive(args.eps)
    if args.stop == "time":
        if args.time is None:
            raise InvalidInstanceError("--stop time needs --time")
        return approx_mod.TimeBudget(args.time)
    return approx_mod.Exhaustive()


def _build_heuristic(args) -> approx_mod.ExploreHeuristic:
    if args.heuristic == "maxprob":
        return approx_mod.MaxProbability()
    if args.heuristic == "fifo":
        return approx_mod.Fifo()
    return approx_mod.RandomChoice(args.seed)


def cmd_approx(args) -> int:
    if args.program:
        with open(args.program) as fh:
            prog = logic_mod.parse_program(fh.read())
        inst, _, oracle = logic_mod.logic_instance(prog)
        order = logic_mod.applicable_rule_order(prog)
        target = 1
    else:
        spec = _sum_spec_from_args(args)
        inst, _, oracle = build_sum_instance(spec)
        order = _sum_order(args.order, spec.n)
        if args.sum is None:
            raise InvalidInstanceError("need --sum")
        target = args.sum
    stop = _build_stop(args)
    heuristic = _build_heuristic(args)
    trace = [] if args.trace else None
    bounds, stats = approx_mod.approx_dpnl(
        inst, target, oracle, stop, heuristic, order=order, trace=trace
    )
    if args.trace:
        with open(args.trace, "w") as fh:
            for snap in trace:
                fh.write(
                    json.dumps(
                        {"iteration": snap.iteration, "low": snap.bounds.low, "up": snap.bounds.up}
                    )
                )
                fh.write("\n")
    print("low = %s" % _fmt(bounds.low))
    print("up = %s" % _fmt(bounds.up))
    print("estimate = %s" % _fmt(bounds.estimate))
    report = RunReport(
        "approx",
        result=bounds.estimate,
        low=bounds.low,
        up=bounds.up,
        estimate=bounds.estimate,
        stats=stats,
        seed=args.seed,
    )
    _emit(report, args)
    return 0


def cmd_logic(args) -> int:
    rc = 0
    if args.count_provenance:
        if args.nodes is None:
            raise InvalidInstanceError("--count-provenance needs --nodes")
        n = args.nodes
        clauses = logic_mod.provenance_clause_count(n)
        table = [[args.edge_prob] * n for _ in range(n)]
        prog = logic_mod.reachability_program(n, table, self_loops=args.self_loops)
        value, stats = logic_mod.success_probability(prog, order=_logic_order(args, prog))
        print("provenance_clauses = %d" % clauses)
        print("branch_nodes = %d" % stats.branch_nodes)
        print("P(query) = %s" % _fmt(value))
        report = RunReport("logic", result=value, stats=stats, seed=args.seed)
        _emit(report, args)
        return rc
    if not args.program:
        raise InvalidInstanceError("need --program or --count-provenance")
    with open(args.program) as fh:
        prog = logic_mod.parse_program(fh.read())
    value, stats = logic_mod.success_probability(prog, order=_logic_order(args, prog))
    print("P(query) = %s" % _fmt(value))
    if args.brute:
        if prog.m > 12:
            raise InvalidInstanceError(
                "--brute supports at most 12 probabilistic rules, program has %d" % prog.m
            )
        rc = _cross_check(
            "brute", value, logic_mod.success_probability_bruteforce(prog), args.tol
        )
    report = RunReport("logic", result=value, stats=stats, seed=args.seed)
    _emit(report, args)
    return rc


def _logic_order(args, prog):
    if getattr(args, "order", "applicable") == "seq":
        return SequentialOrder()
    return logic_mod.applicable_rule_order(prog)


def cmd_gradcheck(args) -> int:
    if args.program:
        with open(args.program) as fh:
            prog = logic_mod.parse_program(fh.read())
        inst, sfn, oracle = logic_mod.logic_instance(prog)
        order = logic_mod.applicable_rule_order(prog)
        target = 1
    else:
        spec = _sum_spec_from_args(args)
        inst, sfn, oracle = build_sum_instance(spec)
        order = _sum_order(args.order, spec.n)
        if args.sum is None:
            raise InvalidInstanceError("need --sum")
        target = args.sum
    grad, stats = dpnl_gradient(inst, target, oracle, order=order)
    numeric = finite_difference_partials(inst, sfn, target, h=args.h)
    max_rel = 0.0
    for row_a, row_n in zip(grad.partials, numeric):
        for a, nmr in zip(row_a, row_n):
            rel = abs(a - nmr) / max(1.0, abs(a), abs(nmr))
            max_rel = max(max_rel, rel)
    print("value = %s" % _fmt(grad.value))
    print("max_rel_err = %.3e  (tol %.1e)" % (max_rel, args.tol))
    rc = 0
    if max_rel > args.tol:
        print("gradient check FAILED", file=sys.stderr)
        rc = 1
    report = RunReport("gradcheck", result=max_rel, stats=stats, seed=args.seed)
    _emit(report, args)
    return rc


def _parse_range(spec: str) -> list[int]:
    if ":" in spec:
        lo, _, hi = spec.partition(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",")]


def _bench_policies(args):
    yield "exact", None
    yield "eps-mult(%g)" % args.eps, approx_mod.EpsMultiplicative(args.eps)
    yield "eps-add(%g)" % args.eps_add, approx_mod.EpsAdditive(args.eps_add)
    yield "time(%g)" % args.time, approx_mod.TimeBudget(args.time)


def _bench_one(task, size, stop, seed):
    import random as _random

    rng = _random.Random(seed)
    if task == "sum":
        raw = [[rng.random() + 0.05 for _ in range(10)] for _ in range(2 * size)]
        rows = [[p / sum(row) for p in row] for row in raw]
        spec = SumInstanceSpec(size, rows)
        inst, _, oracle = build_sum_instance(spec)
        order = right_to_left_order(size)
        target = 10**size - 1
        provenance = ""
    else:
        table = [[0.5] * size for _ in range(size)]
        prog = logic_mod.reachability_program(size, table)
        inst, _, oracle = logic_mod.logic_instance(prog)
        order = logic_mod.applicable_rule_order(prog)
        target = 1
        provenance = logic_mod.provenance_clause_count(size)
    start = time.perf_counter()
    if stop is None:
        _, stats = dpnl(inst, target, oracle, order=order)
        nodes = stats.branch_nodes
    else:
        _, stats = approx_mod.approx_dpnl(
            inst, target, oracle, stop, approx_mod.MaxProbability(), order=order
        )
        nodes = stats.branch_nodes
    elapsed = time.perf_counter() - start
    return elapsed, nodes, provenance


def cmd_bench(args) -> int:
    sizes = _parse_range(args.n_range)
    rows = []
    for size in sizes:
        for policy_name, stop in _bench_policies(args):
            runs = []
            if args.parallel > 1:
                with ThreadPoolExecutor(max_workers=args.parallel) as pool:
                    futures = [
                        pool.submit(_bench_one, args.task, size, stop, args.seed + r)
                        for r in range(args.repeats)
                    ]
                    runs = [f.result() for f in futures]
            else:
                for r in range(args.repeats):
                    runs.append(_bench_one(args.task, size, stop, args.seed + r))
            times = [r[0] for r in runs]
            nodes = [r[1] for r in runs]
            provenance = runs[0][2]
            rows.append(
                {
                    "task": args.task,
                    "size": size,
                    "policy": policy_name,
                    "mean_time_s": statistics.mean(times),
                    "std_time_s": statistics.stdev(times) if len(times) > 1 else 0.0,
                    "mean_nodes": statistics.mean(nodes),
                    "provenance_clauses": provenance,
                }
            )
    fmt = "%-12s %-5s %-16s %-12s %-12s %-12s %s"
    print(fmt % ("task", "size", "policy", "mean_time_s", "std_time_s", "mean_nodes", "provenance"))
    for row in rows:
        print(
            fmt
            % (
                row["task"],
                row["size"],
                row["policy"],
                "%.6f" % row["mean_time_s"],
                "%.6f" % row["std_time_s"],
                "%.1f" % row["mean_nodes"],
                row["provenance_clauses"],
            )
        )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
            writer.writeheader()
            writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpnl",
        description="Exact and anytime-approximate inference over independent "
        "finite-domain random variables, guided by oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", help="write the JSON run report to this file")
        p.add_argument("--tol", type=float, default=1e-9, help="cross-check tolerance")
        p.add_argument("--seed", type=int, default=0, help="seed for any randomness")

    p = sub.add_parser("pwmc", help="weighted model count of a DIMACS CNF")
    p.add_argument("--cnf", required=True, help="DIMACS CNF file, 'w <var> <prob>' lines allowed")
    p.add_argument("--weights", help="separate weights file ('w <var> <prob>' lines)")
    p.add_argument("--brute", action="store_true", help="cross-check against enumeration")
    p.add_argument("--branch", choices=["occurrence", "fixed"], default="occurrence")
    common(p)
    p.set_defaults(fn=cmd_pwmc)

    p = sub.add_parser("sum", help="digit-sum task probabilities")
    p.add_argument("--n", type=int, required=True, help="digits per summand")
    p.add_argument("--uniform", action="store_true", help="uniform digit distributions")
    p.add_argument("--dists", help="JSON (inline or file): 2N rows of 10 probabilities")
    p.add_argument("--sum", type=int, help="query this output value")
    p.add_argument("--full", action="store_true", help="whole output distribution")
    p.add_argument("--order", choices=["r2l", "seq", "rev"], default="r2l")
    p.add_argument("--brute", action="store_true", help="cross-check against the convolution reference")
    common(p)
    p.set_defaults(fn=cmd_sum)

    p = sub.add_parser("approx", help="anytime bounds for one output probability")
    p.add_argument("--n", type=int, help="digits per summand (sum task)")
    p.add_argument("--uniform", action="store_true")
    p.add_argument("--dists")
    p.add_argument("--sum", type=int, help="queried output (sum task)")
    p.add_argument("--order", choices=["r2l", "seq", "rev"], default="r2l")
    p.add_argument("--program", help="logic program file (queries output 1)")
    p.add_argument(
        "--stop", choices=["eps-mult", "eps-add", "time", "exhaustive"], required=True
    )
    p.add_argument("--eps", type=float, help="epsilon for eps-mult / eps-add")
    p.add_argument("--time", type=float, help="seconds for the time stop")
    p.add_argument("--heuristic", choices=["maxprob", "fifo", "random"], default="maxprob")
    p.add_argument("--trace", help="write per-iteration bounds as JSON lines")
    common(p)
    p.set_defaults(fn=cmd_approx)

    p = sub.add_parser("logic", help="query success probability of a Horn program")
    p.add_argument("--program", help="program file")
    p.add_argument("--brute", action="store_true", help="cross-check against subset enumeration")
    p.add_argument("--order", choices=["applicable", "seq"], default="applicable")
    p.add_argument("--count-provenance", action="store_true", dest="count_provenance")
    p.add_argument("--nodes", type=int, help="complete-graph size for --count-provenance")
    p.add_argument("--edge-prob", type=float, default=0.5, dest="edge_prob")
    p.add_argument("--self-loops", action="store_true", dest="self_loops")
    common(p)
    p.set_defaults(fn=cmd_logic)

    p = sub.add_parser("gradcheck", help="compare exact gradients to finite differences")
    p.add_argument("--n", type=int, help="digits per summand (sum task)")
    p.add_argument("--uniform", action="store_true")
    p.add_argument("--dists")
    p.add_argument("--sum", type=int)
    p.add_argument("--order", choices=["r2l", "seq", "rev"], default="r2l")
    p.add_argument("--program", help="logic program file (queries output 1)")
    p.add_argument("--h", type=float, default=1e-6, help="finite-difference step")
    common(p)
    # central differences bottom out around 1e-8 in float64, 1e-9 is unreachable
    p.set_defaults(fn=cmd_gradcheck, tol=1e-6)

    p = sub.add_parser("bench", help="timing table for exact and approximate runs")
    p.add_argument("--task", choices=["sum", "logic-reach"], required=True)
    p.add_argument("--n-range", required=True, dest="n_range", help="e.g. 1:4 or 1,2,4")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eps-add", type=float, default=0.05, dest="eps_add")
    p.add_argument("--time", type=float, default=0.05)
    common(p)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
