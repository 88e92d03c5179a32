"""Benchmark instances: LeadingOnes, OneMax and the Balas set-cover family."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .core import Genotype, InvalidInputError, Problem


def leading_ones(x) -> int:
    """Length of the maximal all-ones prefix."""
    bits = x.bits if isinstance(x, Genotype) else np.asarray(x)
    zeros = np.flatnonzero(bits == 0)
    return int(zeros[0]) if zeros.size else int(bits.size)


def one_max(x) -> int:
    bits = x.bits if isinstance(x, Genotype) else np.asarray(x)
    return int(bits.sum())


def _leading_ones_batch(X: np.ndarray) -> np.ndarray:
    is_zero = X == 0
    first = np.argmax(is_zero, axis=1)
    return np.where(is_zero.any(axis=1), first, X.shape[1])


def _check_n(n: int) -> None:
    if n < 1:
        raise InvalidInputError("dimension must be at least 1")


@dataclass(frozen=True)
class LeadingOnes(Problem):
    n: int
    name = "leadingones"

    def __post_init__(self) -> None:
        _check_n(self.n)

    @property
    def optimum(self) -> int:
        return self.n

    def objective_batch(self, X):
        return _leading_ones_batch(np.asarray(X))

    def objective_values(self):
        return np.arange(self.n + 1, dtype=float)

    def sample_with_objective(self, value, rng):
        v = int(value)
        if not 0 <= v <= self.n:
            return None
        bits = rng.integers(0, 2, size=self.n, dtype=np.uint8)
        bits[:v] = 1
        if v < self.n:
            bits[v] = 0
        return Genotype(bits)


@dataclass(frozen=True)
class OneMax(Problem):
    n: int
    name = "onemax"

    def __post_init__(self) -> None:
        _check_n(self.n)

    @property
    def optimum(self) -> int:
        return self.n

    def objective_batch(self, X):
        return np.asarray(X).sum(axis=1)

    def objective_values(self):
        return np.arange(self.n + 1, dtype=float)

    def sample_with_objective(self, value, rng):
        v = int(value)
        if not 0 <= v <= self.n:
            return None
        bits = np.zeros(self.n, dtype=np.uint8)
        bits[rng.choice(self.n, size=v, replace=False)] = 1
        return Genotype(bits)


@dataclass(frozen=True)
class BalasSCP(Problem):
    """Set cover instance B(n, p) in maximization form.

    The m = C(n, p-1) constraint sets N_i are all (n-p+1)-subsets of [n].
    A selection J(x) covers iff it meets every N_i, which happens exactly
    when |J(x)| >= p. Covers score n - |J(x)| + 1; non-covers score 0 and
    are infeasible.
    """

    n: int
    p: int
    name = "balas"
    constrained = True

    def __post_init__(self) -> None:
        _check_n(self.n)
        if not 1 <= self.p <= self.n:
            raise InvalidInputError("Balas instance needs 1 <= p <= n")

    @property
    def optimum(self) -> int:
        return self.n - self.p + 1

    @property
    def num_elements(self) -> int:
        return comb(self.n, self.p - 1)

    def cover_size_batch(self, X):
        return np.asarray(X).sum(axis=1)

    def feasible_batch(self, X):
        return self.cover_size_batch(X) >= self.p

    def objective_batch(self, X):
        size = self.cover_size_batch(X)
        return np.where(size >= self.p, self.n - size + 1, 0)

    def objective_values(self):
        return np.arange(1, self.n - self.p + 2, dtype=float)

    def sample_with_objective(self, value, rng):
        v = int(value)
        size = self.n - v + 1
        if not self.p <= size <= self.n:
            return None
        bits = np.zeros(self.n, dtype=np.uint8)
        bits[rng.choice(self.n, size=size, replace=False)] = 1
        return Genotype(bits)

    def feasible_probability(self) -> float:
        """Pr(|J(x)| >= p) for uniform x."""
        return sum(comb(self.n, k) for k in range(self.p, self.n + 1)) / 2 ** self.n

    def describe(self):
        return {"problem": self.name, "n": self.n, "p": self.p}


def balas_is_cover(instance: BalasSCP, x: Genotype) -> bool:
    if len(x) != instance.n:
        raise InvalidInputError("genotype length does not match instance")
    return x.count_ones() >= instance.p


def balas_objective(instance: BalasSCP, x: Genotype) -> int:
    """n - |J| + 1 for covers, 0 (the infeasible marker) otherwise."""
    if len(x) != instance.n:
        raise InvalidInputError("genotype length does not match instance")
    size = x.count_ones()
    return instance.n - size + 1 if size >= instance.p else 0


def balas_constraint_sets(n: int, p: int) -> list[frozenset[int]]:
    """Explicit sets N_1..N_m (0-based indices); exponential, for checking only."""
    return [frozenset(c) for c in combinations(range(n), n - p + 1)]


def balas_is_cover_bruteforce(n: int, p: int, x) -> bool:
    bits = x.bits if isinstance(x, Genotype) else np.asarray(x)
    chosen = {i for i, b in enumerate(bits) if b}
    return all(chosen & N for N in balas_constraint_sets(n, p))


def make_problem(name: str, n: int, p: int | None = None) -> Problem:
    name = name.lower()
    if name in ("leadingones", "leading_ones", "lo"):
        return LeadingOnes(n)
    if name in ("onemax", "one_max", "om"):
        return OneMax(n)
    if name in ("balas", "scp", "balas_scp"):
        return BalasSCP(n, n // 2 if p is None else p)
    raise InvalidInputError(f"unknown problem {name!r}")
