"""Non-elitist generational GA with optional multistart and hitting-time accounting.

Each generation builds the next population only from mutated offspring
of selected parents: lambda/2 pairs for two-offspring crossover, lambda
single offspring otherwise. Every evaluated genotype is checked against
the target as soon as it is evaluated, so the reported hitting time is
exact in evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .core import (Evaluator, FitnessMapping, Genotype, InvalidInputError, Population, Problem,
                   make_rng, random_population)
from .levels import LevelPartition
from .operators import (CrossoverSpec, MutationSpec, SelectionSpec, as_mutation_operator,
                        crossover_batch, select_indices)

DEFAULT_MAX_EVALUATIONS = 10 ** 9

Initializer = Callable[[int, int, np.random.Generator], np.ndarray]
TargetFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GaConfig:
    lam: int
    selection: SelectionSpec
    crossover: CrossoverSpec
    mutation: MutationSpec | Callable
    t_max: int | None = None
    multistart: bool = False
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lam < 1:
            raise InvalidInputError("population size must be >= 1")
        if self.crossover.r == 2 and self.lam % 2:
            raise InvalidInputError(f"lambda={self.lam} must be even for two-offspring crossover")
        if self.multistart and (self.t_max is None or self.t_max < 1):
            raise InvalidInputError("multistart needs t_max >= 1")
        if self.t_max is not None and self.t_max < 0:
            raise InvalidInputError("t_max must be non-negative")
        if self.selection.kind == "mu-lambda" and self.selection.mu > self.lam:
            raise InvalidInputError("mu must not exceed lambda")
        if self.max_evaluations < 1:
            raise InvalidInputError("max_evaluations must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")


@dataclass
class RunRecord:
    hit: bool
    T: int
    generations: int
    restarts: int
    best_objective: float
    seed: int
    best_genotype: Genotype | None = None
    best_feasible: bool = False
    total_generations: int = 0


@dataclass
class GenerationTrace:
    """What one generation did: parent index pairs and the pre-mutation offspring."""

    parents: np.ndarray
    crossed: np.ndarray


def uniform_initializer(lam: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return random_population(lam, n, rng)


def generation(pop: Population, config: GaConfig, rng: np.random.Generator,
               mutation_op=None) -> tuple[np.ndarray, GenerationTrace]:
    """Produce the genomes of P^{t+1} from P^t.

    Offspring rows 2j and 2j+1 (r=2) come from the j-th parent pair; all
    random draws for a pair are taken from disjoint slices of the batched
    draws, so pairs are conditionally independent given P^t.
    """
    mut = mutation_op or as_mutation_operator(config.mutation)
    lam = pop.size
    r = config.crossover.r
    pairs = lam // 2 if r == 2 else lam
    parents = select_indices(pop, config.selection, 2 * pairs, rng).reshape(pairs, 2)
    G = pop.genomes
    a, b = crossover_batch(G[parents[:, 0]], G[parents[:, 1]], config.crossover, rng)
    crossed = np.stack((a, b), axis=1).reshape(lam, -1) if r == 2 else a
    return mut(crossed, rng), GenerationTrace(parents, crossed)


def _as_target(target) -> TargetFn:
    if isinstance(target, LevelPartition):
        return target.in_target
    if callable(target):
        return target
    raise InvalidInputError("target must be a LevelPartition or a predicate")


class _Best:
    def __init__(self) -> None:
        self.key = -np.inf
        self.genotype: Genotype | None = None
        self.objective = float("nan")
        self.feasible = False

    def update(self, X, obj, feas, key) -> None:
        i = int(np.argmax(key))
        if self.genotype is None or key[i] > self.key:
            self.key = key[i]
            self.genotype = Genotype(X[i])
            self.objective = float(obj[i])
            self.feasible = bool(feas[i])


class _Run:
    """State shared across restarts of one trial."""

    def __init__(self, config, problem, mapping, target, initializer, mutation_op):
        self.config = config
        self.problem = problem
        self.evaluator = Evaluator(problem, mapping)
        self.target = target
        self.initializer = initializer
        self.mutation_op = mutation_op
        self.best = _Best()
        self.total_generations = 0

    def _evaluate(self, X):
        """Evaluate within budget; returns (X, obj, feas, hit index or None, exhausted)."""
        room = self.config.max_evaluations - self.evaluator.count
        short = X.shape[0] > room
        if short:
            X = X[:room]
        if X.shape[0] == 0:
            return X, None, None, None, True
        obj, feas = self.evaluator.evaluate_batch(X)
        self.best.update(X, obj, feas, self.evaluator.mapping.rank_key(obj, feas))
        hits = np.flatnonzero(self.target(X, obj, feas))
        return X, obj, feas, (int(hits[0]) if hits.size else None), short

    def single(self, rng):
        """One GA run from a fresh P^0; returns (hit_T or None, generation, exhausted)."""
        cfg = self.config
        count0 = self.evaluator.count
        X = np.asarray(self.initializer(cfg.lam, self.problem.n, rng), dtype=np.uint8)
        if X.shape != (cfg.lam, self.problem.n):
            raise InvalidInputError("initializer returned a population of the wrong shape")
        X, obj, feas, hit, exhausted = self._evaluate(X)
        if hit is not None:
            return count0 + hit + 1, 0, False
        if exhausted:
            return None, 0, True
        pop = Population(X, obj, feas, self.evaluator.mapping)
        t = 0
        while cfg.t_max is None or t < cfg.t_max:
            t += 1
            self.total_generations += 1
            count0 = self.evaluator.count
            offspring, _ = generation(pop, cfg, rng, self.mutation_op)
            X, obj, feas, hit, exhausted = self._evaluate(offspring)
            if hit is not None:
                return count0 + hit + 1, t, False
            if exhausted:
                return None, t, True
            pop = Population(X, obj, feas, self.evaluator.mapping)
        return None, t, False


def run_ga(config: GaConfig, problem: Problem, mapping: FitnessMapping, target,
           initializer: Initializer | None = None, seed: int | None = None) -> RunRecord:
    """Run the GA until the first evaluated genotype lies in the target.

    ``target`` is a LevelPartition (target = A_{m+1}) or a predicate
    ``(X, objective, feasible) -> bool array``. Without multistart the run
    also stops after ``t_max`` generations when set. With multistart a
    fresh P^0 is drawn after each ``t_max`` cutoff; restart r draws from
    the stream derived from (seed, r). The evaluation budget bounds
    everything; unsuccessful runs return ``hit=False`` with T equal to the
    evaluations spent.
    """
    seed = config.seed if seed is None else int(seed)
    run = _Run(config, problem, mapping, _as_target(target),
               initializer or uniform_initializer, as_mutation_operator(config.mutation))
    restart = 0
    while True:
        T, gen, exhausted = run.single(make_rng(seed, restart))
        if T is not None or exhausted or not config.multistart:
            break
        restart += 1
    return RunRecord(
        hit=T is not None,
        T=T if T is not None else run.evaluator.count,
        generations=gen,
        restarts=restart,
        best_objective=run.best.objective,
        seed=seed,
        best_genotype=run.best.genotype,
        best_feasible=run.best.feasible,
        total_generations=run.total_generations,
    )


def run_multistart(config: GaConfig, problem: Problem, mapping: FitnessMapping, target,
                   initializer: Initializer | None = None, seed: int | None = None) -> RunRecord:
    """GA with restarts every ``t_max`` generations until the target is hit."""
    if config.t_max is None:
        raise InvalidInputError("multistart needs t_max")
    if not config.multistart:
        config = replace(config, multistart=True)
    return run_ga(config, problem, mapping, target, initializer, seed)


def best_of_run(source: RunRecord | Iterable[Population]) -> Genotype:
    """Genotype of maximal fitness seen, earliest evaluation winning ties."""
    if isinstance(source, RunRecord):
        if source.best_genotype is None:
            raise InvalidInputError("run performed no evaluations")
        return source.best_genotype
    best = _Best()
    for pop in source:
        best.update(pop.genomes, pop.objective, pop.feasible, pop.rank_key)
    if best.genotype is None:
        raise InvalidInputError("no evaluated populations")
    return best.genotype
