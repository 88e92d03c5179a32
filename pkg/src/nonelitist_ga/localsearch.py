"""Hamming neighborhoods, local optima and the local search baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import Genotype, InvalidInputError, Problem
from .levels import flip_masks


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Hamming ball of radius R around a feasible genotype (feasible points only)."""

    radius: int = 1
    kind: str = "hamming"

    def __post_init__(self) -> None:
        if self.kind != "hamming":
            raise InvalidInputError(f"unknown neighborhood {self.kind!r}")
        if self.radius < 1:
            raise InvalidInputError("radius must be >= 1")


def _require_feasible(x: Genotype, problem: Problem) -> None:
    if len(x) != problem.n:
        raise InvalidInputError("genotype length does not match problem dimension")
    if not problem.is_feasible(x):
        raise InvalidInputError("neighborhoods are defined for feasible genotypes only")


def _neighbor_block(x: Genotype, spec: NeighborhoodSpec, problem: Problem) -> np.ndarray:
    masks = flip_masks(problem.n, min(spec.radius, problem.n))
    Y = np.repeat(x.bits[None, :], len(masks), axis=0)
    for row, positions in enumerate(masks):
        Y[row, list(positions)] ^= 1
    return Y[problem.feasible_batch(Y)] if problem.constrained else Y


def neighbors(x: Genotype, spec: NeighborhoodSpec, problem: Problem) -> Iterator[Genotype]:
    """Feasible y != x with d(x, y) <= R, by flip-set size then lexicographically."""
    _require_feasible(x, problem)
    for row in _neighbor_block(x, spec, problem):
        yield Genotype(row)


def is_local_optimum(x: Genotype, spec: NeighborhoodSpec, problem: Problem) -> bool:
    _require_feasible(x, problem)
    Y = _neighbor_block(x, spec, problem)
    if Y.shape[0] == 0:
        return True
    return not (np.asarray(problem.objective_batch(Y), float) > problem.objective(x)).any()


@dataclass
class LocalSearchResult:
    optimum: Genotype
    iterations: int
    objectives: list[float] = field(default_factory=list)

    def __iter__(self):
        return iter((self.optimum, self.iterations))


def local_search(x0: Genotype, spec: NeighborhoodSpec, problem: Problem,
                 pivot_rule: str = "first-improvement") -> LocalSearchResult:
    """Climb strictly improving neighbors until none exists.

    ``first-improvement`` takes the first improving neighbor in
    enumeration order; ``best-improvement`` the best one (first on ties).
    """
    if pivot_rule not in ("first-improvement", "best-improvement"):
        raise InvalidInputError(f"unknown pivot rule {pivot_rule!r}")
    _require_feasible(x0, problem)
    x = x0
    fx = problem.objective(x)
    trace = [fx]
    while True:
        Y = _neighbor_block(x, spec, problem)
        if Y.shape[0] == 0:
            break
        fy = np.asarray(problem.objective_batch(Y), float)
        better = np.flatnonzero(fy > fx)
        if better.size == 0:
            break
        pick = better[0] if pivot_rule == "first-improvement" else int(np.argmax(fy))
        x, fx = Genotype(Y[pick]), float(fy[pick])
        trace.append(fx)
    return LocalSearchResult(x, len(trace) - 1, trace)


def approximation_ratio(problem: Problem, x: Genotype) -> float:
    """F*/F(x) for a feasible x of a maximization problem."""
    if problem.optimum is None:
        raise InvalidInputError("problem optimum is unknown")
    value = problem.objective(x)
    return float("inf") if value <= 0 else problem.optimum / value
