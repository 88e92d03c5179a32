"""Negative control: an absorbing infeasible region stalls single runs but not multistart."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FitnessMapping
from ..engine import GaConfig, RunRecord, run_ga
from ..levels import canonical_partition
from ..operators import CrossoverSpec, MutationSpec, SelectionSpec, absorbing_mutation
from ..problems import BalasSCP
from .experiment import trial_seed


@dataclass
class ControlOutcome:
    single: list[RunRecord]
    multistart: list[RunRecord]

    @property
    def single_stall_rate(self) -> float:
        return sum(not r.hit for r in self.single) / len(self.single)

    @property
    def multistart_hit_rate(self) -> float:
        return sum(r.hit for r in self.multistart) / len(self.multistart)


def all_ones_initializer(lam: int, n: int, rng) -> np.ndarray:
    # the full selection is a cover of the lowest level, never optimal for p < n
    return np.ones((lam, n), dtype=np.uint8)


def absorbing_control(n: int = 12, lam: int = 8, trials: int = 100, seed: int = 0,
                      kill_prob: float = 0.7, budget: int = 20_000) -> ControlOutcome:
    """Run the same adversarial GA on B(n, n/2) without and with restarts.

    Infeasible offspring can never become feasible again (pass-through
    crossover, absorbing mutation), so a single run dies once a whole
    generation is infeasible. Restarting every m generations escapes.
    """
    problem = BalasSCP(n, n // 2)
    partition = canonical_partition(problem, include_infeasible_a0=True)
    mutation = absorbing_mutation(problem, MutationSpec("bitwise", 1 / n), kill_prob,
                                  np.zeros(n, dtype=np.uint8))
    common = dict(lam=lam, selection=SelectionSpec("tournament", k=lam, alpha=1.0),
                  crossover=CrossoverSpec("pass-through", 0.0, 2), mutation=mutation,
                  max_evaluations=budget, seed=seed)
    single = GaConfig(**common)
    multi = GaConfig(**common, t_max=partition.m, multistart=True)
    mapping = FitnessMapping()
    outcome = ControlOutcome([], [])
    for t in range(trials):
        s = trial_seed(seed, t)
        outcome.single.append(run_ga(single, problem, mapping, partition, all_ones_initializer, s))
        outcome.multistart.append(run_ga(multi, problem, mapping, partition, all_ones_initializer, s))
    return outcome
