"""Experiment resolution, trial orchestration, statistics and bound reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .. import levels as lv
from ..core import FitnessMapping, InvalidInputError, Problem, derive_seed, make_rng
from ..engine import GaConfig, RunRecord, run_ga
from ..operators import (CrossoverSpec, MutationSpec, SelectionSpec, beta0_mu_lambda,
                         beta0_proportional, beta0_tournament, estimate_crossover_epsilon,
                         fitness_key, mutation_neighbor_lower_bound, nu_threshold,
                         stratified_pair_sampler, uniform_pair_sampler)
from ..problems import BalasSCP, LeadingOnes, make_problem
from .config import ExperimentSpec, SpecError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment_id", "problem", "n", "lambda", "selection", "sel_param", "crossover",
               "pc", "r", "mutation", "pm", "partition", "trial", "seed", "hit", "T",
               "generations", "restarts", "best_objective")

NU_MARGIN = 1.01
CENSORING_LIMIT = 0.01

# stream keys for auxiliary estimates, kept apart from per-trial streams
_S_STAR_STREAM = 0x5_0001
_EPS_STREAM = 0x5_0002


@dataclass
class Resolved:
    """An ExperimentSpec turned into concrete components."""

    spec: ExperimentSpec
    problem: Problem
    partition: lv.LevelPartition
    mapping: FitnessMapping
    config: GaConfig
    conditions: lv.ConditionReport
    bound: float | None
    provenance: str
    notes: list[str] = field(default_factory=list)

    def echo(self) -> dict:
        sel = self.config.selection
        return {
            "problem": self.problem.describe(),
            "partition": self.partition.describe(),
            "lambda": self.config.lam,
            "selection": {"kind": sel.kind, "k": sel.k, "mu": sel.mu, "alpha": sel.alpha},
            "fitness": {"mode": self.mapping.mode, "nu": self.mapping.exponent},
            "crossover": asdict(self.config.crossover),
            "mutation": asdict(self.config.mutation),
            "t_max": self.config.t_max,
            "multistart": self.config.multistart,
            "max_evaluations": self.config.max_evaluations,
        }


def _mutation_rate(spec: ExperimentSpec) -> float:
    pm = spec.pm
    if pm == "auto":
        pm = f"{spec.radius if spec.partition == 'local-optima' else 1}/n"
    if isinstance(pm, str):
        return float(pm[:-2]) / spec.n
    return float(pm)


def _partition(spec: ExperimentSpec, problem: Problem) -> lv.LevelPartition:
    if spec.partition == "canonical":
        return lv.canonical_partition(problem, include_infeasible_a0=problem.constrained)
    return lv.local_optima_partition(problem, spec.radius)


def _s_star(spec, problem, partition, mutation, notes) -> tuple[float, str, dict]:
    if spec.s_star is not None:
        return spec.s_star, "supplied", {}
    if mutation.kind == "bitwise":
        if isinstance(problem, LeadingOnes) and partition.kind == "canonical":
            return lv.leading_ones_s_star(problem.n, mutation.pm), "analytic", {}
        if partition.kind == "local-optima" and abs(mutation.pm * problem.n - spec.radius) < 1e-12 \
                and spec.radius <= problem.n / 2:
            return mutation_neighbor_lower_bound(problem.n, spec.radius), "analytic", {}
    sampler = (lv.canonical_level_sampler(partition) if partition.values is not None
               and partition.kind != "local-optima" else lv.rejection_level_sampler(partition))
    est = lv.estimate_s_star(partition, mutation, sampler, spec.s_trials,
                             make_rng(spec.seed, _S_STAR_STREAM))
    if est.lower <= 0:
        raise SpecError({"s_star": "estimated upgrade probability is not positive"})
    notes.append("s_star is a Monte Carlo lower confidence bound")
    return est.lower, "estimate", est.per_level


def _epsilon(spec, problem, crossover, notes) -> tuple[float, str]:
    if spec.epsilon is not None:
        return spec.epsilon, "supplied"
    if crossover.kind == "pass-through" or crossover.pc == 0:
        return 1.0, "analytic"
    if crossover.pc < 1:
        return 1.0 - crossover.pc, "analytic"
    if isinstance(problem, LeadingOnes):
        return 0.5, "literature"
    sampler = (stratified_pair_sampler(problem) if problem.objective_values() is not None
               else uniform_pair_sampler(problem.n))
    est = estimate_crossover_epsilon(crossover, sampler, 20_000, make_rng(spec.seed, _EPS_STREAM),
                                     fitness_key(problem))
    if est.lower <= 0:
        raise SpecError({"epsilon": "estimated crossover success probability is not positive"})
    notes.append("epsilon is a Monte Carlo lower confidence bound")
    return est.lower, "estimate"


def resolve(spec: ExperimentSpec) -> Resolved:
    """Build problem, partition, operators and the condition report from a spec."""
    notes: list[str] = []
    try:
        problem = make_problem(spec.problem, spec.n, spec.p)
        partition = _partition(spec, problem)
        mutation = MutationSpec(spec.mutation, _mutation_rate(spec))
        crossover = CrossoverSpec(spec.crossover, spec.pc, spec.r)
    except InvalidInputError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError({"components": str(exc)}) from exc

    if spec.selection == "mu-lambda":
        if spec.mu is None:
            raise SpecError({"mu": "required for mu-lambda selection"})
        beta0 = beta0_mu_lambda(spec.mu)
    elif spec.selection == "tournament":
        beta0 = beta0_tournament(spec.alpha)
    elif spec.selection == "proportional":
        beta0 = beta0_proportional(spec.alpha)
    else:
        raise SpecError({"selection": f"unknown selection {spec.selection!r}"})

    s_star, s_src, per_level = _s_star(spec, problem, partition, mutation, notes)
    eps, e_src = _epsilon(spec, problem, crossover, notes)

    if spec.lam == "auto":
        lam = lv.lambda_lower_bound(partition.m, s_star, eps, beta0)
        lam = lv.even_at_least(lam) if spec.r == 2 else lam
    else:
        lam = int(spec.lam)

    selection_kw = {"alpha": spec.alpha}
    if spec.selection == "tournament":
        k = math.ceil(spec.alpha * lam) if spec.k == "auto" else int(spec.k)
        if k < spec.alpha * lam:
            notes.append(f"k={k} is below alpha*lambda; beta0 guarantee does not apply")
        selection_kw["k"] = k
    elif spec.selection == "mu-lambda":
        selection_kw["mu"] = spec.mu
    try:
        selection = SelectionSpec(spec.selection, **selection_kw)
    except InvalidInputError as exc:
        raise SpecError({"selection": str(exc)}) from exc

    mapping = FitnessMapping()
    if spec.selection == "proportional" or spec.nu != "auto":
        if spec.nu == "auto":
            threshold = nu_threshold(spec.alpha, lam, problem.optimum)
            nu = NU_MARGIN * threshold if threshold > 0 else 1.0
        else:
            nu = float(spec.nu)
            if spec.selection == "proportional" and nu <= nu_threshold(spec.alpha, lam, problem.optimum):
                notes.append("nu is not above the threshold; beta0 guarantee does not apply")
        mapping = FitnessMapping.power(nu)

    t_max = partition.m if spec.t_max == "m" else (None if spec.t_max == "none" else spec.t_max)
    try:
        config = GaConfig(lam, selection, crossover, mutation, t_max, spec.multistart,
                          spec.max_evaluations, spec.seed)
    except InvalidInputError as exc:
        raise SpecError({"config": str(exc)}) from exc

    p1 = lv.initial_success_probability(partition, lam)
    conditions = lv.build_condition_report(problem, partition, config, {
        "s_star": s_star, "p1": p1, "beta0": beta0, "epsilon": eps,
        "sources": {"s_star": s_src, "epsilon": e_src, "beta0": "analytic",
                    "p1": "analytic" if partition.a0_empty or isinstance(problem, BalasSCP) else "estimate"},
        "per_level": per_level,
    })
    if not conditions.c4_satisfied:
        log.warning("lambda=%d is below the required %d", lam, conditions.lambda_required)
        notes.append(f"lambda below the population-size requirement ({conditions.lambda_required})")

    bound, provenance = _bound(spec, partition, config, conditions, notes)
    return Resolved(spec, problem, partition, mapping, config, conditions, bound, provenance, notes)


def _bound(spec, partition, config, cond, notes) -> tuple[float | None, str]:
    if spec.bound is not None:
        return spec.bound, "user"
    m, lam = partition.m, config.lam
    local = partition.kind == "local-optima"
    if config.multistart:
        if config.t_max != m:
            notes.append("multistart bound assumes t_max = m")
        return math.e * m * lam / cond.p1, "corollary5" if local else "corollary2"
    if not partition.a0_empty:
        notes.append("single-run bound requires an empty A_0; no bound applies")
        return None, "none"
    return math.e * m * lam, "corollary3" if local else "corollary1"


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

def trial_seed(master: int, trial: int) -> int:
    return derive_seed(master, trial)


def _run_trials(spec: ExperimentSpec, trials: list[int]) -> list[RunRecord]:
    res = resolve(spec)
    return [run_ga(res.config, res.problem, res.mapping, res.partition,
                   seed=trial_seed(spec.seed, t)) for t in trials]


def run_trials(resolved: Resolved) -> list[RunRecord]:
    spec = resolved.spec
    seeds = [trial_seed(spec.seed, t) for t in range(spec.trials)]
    if spec.workers == 1:
        return [run_ga(resolved.config, resolved.problem, resolved.mapping, resolved.partition,
                       seed=s) for s in seeds]
    chunks = [list(range(w, spec.trials, spec.workers)) for w in range(spec.workers)]
    out: dict[int, RunRecord] = {}
    with ProcessPoolExecutor(spec.workers) as pool:
        for chunk, records in zip(chunks, pool.map(_run_trials, [spec] * len(chunks), chunks)):
            out.update(zip(chunk, records))
    return [out[t] for t in range(spec.trials)]


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass
class BoundReport:
    bound: float | None
    provenance: str
    mean_T: float | None
    ci_low: float | None
    ci_high: float | None
    confidence: float
    trials: int
    hits: int
    censored: int
    verdict: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def mean_confidence_interval(values, confidence: float) -> tuple[float, float | None, float | None]:
    """Mean and two-sided Student-t interval; the interval is None for fewer than 2 values.

    Values are sorted before summation so the result does not depend on
    their order.
    """
    xs = sorted(float(v) for v in values)
    h = len(xs)
    mean = math.fsum(xs) / h
    if h < 2:
        return mean, None, None
    var = math.fsum((x - mean) ** 2 for x in xs) / (h - 1)
    half = stats.t.ppf(0.5 + confidence / 2, h - 1) * math.sqrt(var / h)
    return mean, mean - half, mean + half


def bound_report(records: list[RunRecord], bound: float | None, provenance: str,
                 confidence: float = 0.99, notes: list[str] | None = None) -> BoundReport:
    """Compare hitting times with a bound on their expectation.

    ``violated`` only when the interval's lower end exceeds the bound.
    More than 1% censored trials, fewer than two hits, or no bound give
    ``inconclusive``.
    """
    notes = list(notes or [])
    hits = [r.T for r in records if r.hit]
    censored = len(records) - len(hits)
    mean = lo = hi = None
    if hits:
        mean, lo, hi = mean_confidence_interval(hits, confidence)
    if not hits:
        verdict = "inconclusive"
        notes.append("all trials censored")
    elif lo is None:
        verdict = "inconclusive"
        notes.append("confidence interval undefined for fewer than two hits")
    elif censored / len(records) > CENSORING_LIMIT:
        verdict = "inconclusive"
        notes.append(f"censoring rate {censored / len(records):.3f} above {CENSORING_LIMIT}; "
                     "mean is a lower bound")
    elif bound is None:
        verdict = "inconclusive"
    else:
        verdict = "violated" if lo > bound else "bound-respected"
    if censored and hits:
        notes.append(f"{censored} censored trials excluded from the mean")
    return BoundReport(bound, provenance, mean, lo, hi, confidence, len(records), len(hits),
                       censored, verdict, notes)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() else repr(v)
    return "" if v is None else str(v)


def csv_rows(resolved: Resolved, records: list[RunRecord]) -> list[dict]:
    cfg = resolved.config
    sel = cfg.selection
    sel_param = {"tournament": sel.k, "mu-lambda": sel.mu}.get(sel.kind, resolved.mapping.exponent)
    common = {
        "experiment_id": resolved.spec.experiment_id,
        "problem": resolved.problem.name,
        "n": resolved.problem.n,
        "lambda": cfg.lam,
        "selection": sel.kind,
        "sel_param": sel_param,
        "crossover": cfg.crossover.kind,
        "pc": cfg.crossover.pc,
        "r": cfg.crossover.r,
        "mutation": cfg.mutation.kind,
        "pm": cfg.mutation.pm,
        "partition": resolved.partition.kind,
    }
    rows = []
    for trial, rec in enumerate(records):
        rows.append({**common, "trial": trial, "seed": rec.seed, "hit": rec.hit, "T": rec.T,
                     "generations": rec.generations, "restarts": rec.restarts,
                     "best_objective": rec.best_objective})
    return rows


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    resolved: Resolved
    records: list[RunRecord]
    report: BoundReport

    @property
    def csv_text(self) -> str:
        return render_csv(csv_rows(self.resolved, self.records))

    def to_json(self) -> dict:
        return {
            "experiment": self.resolved.spec.to_dict(),
            "resolved": self.resolved.echo(),
            "conditions": self.resolved.conditions.to_dict(),
            "bound": self.report.to_dict(),
        }


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run all trials of one experiment, write CSV/JSON if requested."""
    resolved = resolve(spec)
    records = run_trials(resolved)
    report = bound_report(records, resolved.bound, resolved.provenance, spec.confidence,
                          resolved.notes)
    result = ExperimentResult(resolved, records, report)
    if spec.csv:
        Path(spec.csv).write_text(result.csv_text)
    if spec.json:
        Path(spec.json).write_text(json.dumps(result.to_json(), indent=2, default=_json_default) + "\n")
    return result


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def check_conditions(spec: ExperimentSpec) -> dict:
    res = resolve(spec)
    out = res.conditions.to_dict()
    out["bound"] = res.bound
    out["provenance"] = res.provenance
    out["notes"] = res.notes
    return out


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

@dataclass
class ScalingTable:
    rows: list[dict]
    slope: float | None
    bound_slope: float
    results: list[ExperimentResult] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "slope": self.slope, "bound_slope": self.bound_slope}

    @property
    def csv_text(self) -> str:
        rows = [row for res in self.results for row in csv_rows(res.resolved, res.records)]
        return render_csv(rows)


def verify_bounds(specs: list[ExperimentSpec]) -> ScalingTable:
    """Run an experiment per size and fit log-log slopes of mean T and of the bound.

    Slopes are descriptive only.
    """
    if len(specs) < 2:
        raise SpecError({"sizes": "need at least two sizes"})
    rows, results = [], []
    for spec in specs:
        result = run_experiment(spec)
        results.append(result)
        rep = result.report
        rows.append({"n": spec.n, "lambda": result.resolved.config.lam, "m": result.resolved.partition.m,
                     "mean_T": rep.mean_T, "ci_low": rep.ci_low, "ci_high": rep.ci_high,
                     "bound": rep.bound, "provenance": rep.provenance, "verdict": rep.verdict,
                     "censored": rep.censored})
    ns = np.log([r["n"] for r in rows])
    slope = None
    if all(r["mean_T"] for r in rows):
        slope = float(np.polyfit(ns, np.log([r["mean_T"] for r in rows]), 1)[0])
    bound_slope = float("nan")
    if all(r["bound"] for r in rows):
        bound_slope = float(np.polyfit(ns, np.log([r["bound"] for r in rows]), 1)[0])
    return ScalingTable(rows, slope, bound_slope, results)


def worst_verdict(verdicts) -> str:
    verdicts = list(verdicts)
    if "violated" in verdicts:
        return "violated"
    if "inconclusive" in verdicts:
        return "inconclusive"
    return "bound-respected"
