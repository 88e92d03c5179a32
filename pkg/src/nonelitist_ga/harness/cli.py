"""Command line entry point.

Subcommands: ``run``, ``sweep``, ``conditions``, ``localsearch``, ``epsilon``.
Every config key can be given in a ``--config`` file or as a flag of the
same name; flags win. Exit status: 0 bound respected or inconclusive,
2 bound violated, 1 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..core import Genotype, InvalidInputError, make_rng
from ..levels import all_genotypes, local_optima_partition
from ..localsearch import NeighborhoodSpec, approximation_ratio, is_local_optimum, local_search
from ..operators import (CrossoverSpec, estimate_crossover_epsilon, fitness_key,
                         stratified_pair_sampler, uniform_pair_sampler)
from ..problems import make_problem
from .config import CONFIG_KEYS, SpecError, build_spec, load_spec
from .experiment import check_conditions, run_experiment, verify_bounds, worst_verdict

EXIT_OK, EXIT_USAGE, EXIT_VIOLATED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value experiment file")
    for key in CONFIG_KEYS:
        p.add_argument(f"--{key}", dest=key, default=None, metavar=key.upper())


def _spec_from(ns):
    overrides = {k: getattr(ns, k) for k in CONFIG_KEYS if getattr(ns, k) is not None}
    if ns.config:
        return load_spec(ns.config, overrides)
    return build_spec(overrides)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=lambda o: o.item() if isinstance(o, np.generic) else str(o))


def cmd_run(ns) -> int:
    result = run_experiment(_spec_from(ns))
    rep = result.report
    print(_dump({"conditions": result.resolved.conditions.to_dict(), "bound": rep.to_dict()}))
    return EXIT_VIOLATED if rep.verdict == "violated" else EXIT_OK


def cmd_sweep(ns) -> int:
    base = _spec_from(ns)
    sizes = [int(s) for s in ns.sizes.split(",") if s.strip()]
    specs = [base.with_overrides(n=n, experiment_id=f"{base.experiment_id}-n{n}", csv=None, json=None)
             for n in sizes]
    table = verify_bounds(specs)
    if base.csv:
        Path(base.csv).write_text(table.csv_text)
    out = table.to_dict()
    print(_dump(out))
    if base.json:
        Path(base.json).write_text(_dump(out) + "\n")
    return EXIT_VIOLATED if worst_verdict(r["verdict"] for r in table.rows) == "violated" else EXIT_OK


def cmd_conditions(ns) -> int:
    spec = _spec_from(ns)
    out = check_conditions(spec)
    if not out["c4_satisfied"]:
        print(f"warning: lambda={out['lam']} below required {out['lambda_required']}", file=sys.stderr)
    text = _dump(out)
    print(text)
    if spec.json:
        Path(spec.json).write_text(text + "\n")
    return EXIT_OK


def _feasible_starts(problem, count, rng):
    if count is None and problem.n <= 12:
        X = all_genotypes(problem.n)
    else:
        X = rng.integers(0, 2, size=(max(count or 100, 1) * 8, problem.n), dtype=np.uint8)
    X = X[problem.feasible_batch(X)]
    return X if count is None and problem.n <= 12 else X[: count or 100]


def cmd_localsearch(ns) -> int:
    problem = make_problem(ns.problem, int(ns.n), None if ns.p is None else int(ns.p))
    spec = NeighborhoodSpec(int(ns.radius or 1))
    starts = _feasible_starts(problem, ns.starts, make_rng(int(ns.seed or 0)))
    iterations, ratios, at_lo = [], [], 0
    for row in starts:
        res = local_search(Genotype(row), spec, problem, ns.pivot)
        iterations.append(res.iterations)
        at_lo += is_local_optimum(res.optimum, spec, problem)
        if problem.optimum is not None:
            ratios.append(approximation_ratio(problem, res.optimum))
    out = {"problem": problem.describe(), "radius": spec.radius, "pivot": ns.pivot,
           "starts": len(iterations), "mean_iterations": float(np.mean(iterations)),
           "max_iterations": int(max(iterations)), "endpoints_locally_optimal": int(at_lo)}
    if problem.n <= 20:
        out["m"] = local_optima_partition(problem, spec.radius).m
    if ratios:
        out["worst_ratio"] = float(max(ratios))
        out["mean_ratio"] = float(np.mean(ratios))
        if ns.glo_ratio is not None:
            out["declared_ratio"] = float(ns.glo_ratio)
            out["ratio_guarantee_met"] = bool(max(ratios) <= float(ns.glo_ratio) + 1e-12)
    print(_dump(out))
    return EXIT_OK


def cmd_epsilon(ns) -> int:
    problem = make_problem(ns.problem, int(ns.n), None if ns.p is None else int(ns.p))
    spec = CrossoverSpec(ns.crossover or "single-point", float(ns.pc if ns.pc is not None else 1.0),
                         int(ns.r or 2))
    sampler = stratified_pair_sampler(problem) if ns.sampler == "stratified" else uniform_pair_sampler(problem.n)
    est = estimate_crossover_epsilon(spec, sampler, ns.samples, make_rng(int(ns.seed or 0)),
                                     fitness_key(problem))
    print(_dump({"crossover": spec.kind, "pc": spec.pc, "r": spec.r, "sampler": ns.sampler,
                 "estimate": est.estimate, "radius": est.radius, "lower": est.lower,
                 "trials": est.trials}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nega", description="Non-elitist GA hitting-time experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one experiment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run an experiment over several sizes")
    _add_config_flags(p)
    p.add_argument("--sizes", required=True, help="comma separated n values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("conditions", help="print the condition ledger for an experiment")
    _add_config_flags(p)
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("localsearch", help="local search baseline")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--pivot", choices=("first-improvement", "best-improvement"),
                   default="first-improvement")
    p.add_argument("--starts", type=int, help="random starts (default: all feasible for n <= 12)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--glo_ratio", type=float, help="declared approximation ratio of local optima")
    p.set_defaults(func=cmd_localsearch)

    p = sub.add_parser("epsilon", help="estimate crossover success probability")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--crossover", default="single-point")
    p.add_argument("--pc", type=float, default=1.0)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--sampler", choices=("uniform", "stratified"), default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_epsilon)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except SpecError as exc:
        for key, msg in exc.errors.items():
            print(f"error: {key}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
