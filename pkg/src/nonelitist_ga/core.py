"""Genotypes, populations, the problem interface and fitness mapping.

Genotypes are fixed-length bit strings. Individual genotypes are wrapped
in :class:`Genotype`; whole populations are kept as ``(lambda, n)`` uint8
matrices so that the engine can vary and evaluate them in one shot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RngHandle = np.random.Generator


class InvalidInputError(ValueError):
    """Raised when an operation receives input violating its preconditions."""


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Create a generator from a 64-bit seed and an optional spawn path.

    Distinct ``keys`` give statistically independent streams for the same
    seed (used for trials and restarts).
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a reproducible 64-bit child seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Genotype:
    """Immutable bit string of length n.

    Bits are kept as a read-only uint8 array; a packed byte form backs
    hashing, equality and Hamming distance.
    """

    __slots__ = ("_bits", "_packed")

    def __init__(self, bits: Sequence[int] | np.ndarray) -> None:
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise InvalidInputError("genotype must be one-dimensional")
        if arr.size == 0:
            raise InvalidInputError("genotype must have at least one gene")
        if not np.isin(arr, (0, 1)).all():
            raise InvalidInputError("genes must be 0 or 1")
        arr = arr.astype(np.uint8, copy=True)
        arr.flags.writeable = False
        self._bits = arr
        self._packed = np.packbits(arr).tobytes()

    @classmethod
    def zeros(cls, n: int) -> Genotype:
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> Genotype:
        return cls(np.ones(n, dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def n(self) -> int:
        return int(self._bits.size)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self._bits[i]

    def __iter__(self):
        return (int(b) for b in self._bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Genotype):
            return NotImplemented
        return self.n == other.n and self._packed == other._packed

    def __hash__(self) -> int:
        return hash((self.n, self._packed))

    def __repr__(self) -> str:
        return f"Genotype('{''.join(str(b) for b in self._bits)}')"

    def count_ones(self) -> int:
        return int(self._bits.sum())

    def hamming(self, other: Genotype) -> int:
        if self.n != other.n:
            raise InvalidInputError("Hamming distance needs equal lengths")
        a = np.frombuffer(self._packed, dtype=np.uint8)
        b = np.frombuffer(other._packed, dtype=np.uint8)
        return int(np.bitwise_count(a ^ b).sum())

    def flip(self, positions: Sequence[int]) -> Genotype:
        bits = self._bits.copy()
        bits[list(positions)] ^= 1
        return Genotype(bits)


def hamming_distance(x: Genotype, y: Genotype) -> int:
    return x.hamming(y)


def random_genotype(n: int, rng: np.random.Generator) -> Genotype:
    """Draw x uniformly from {0,1}^n."""
    if n < 1:
        raise InvalidInputError("dimension must be at least 1")
    return Genotype(rng.integers(0, 2, size=n, dtype=np.uint8))


def random_population(lam: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=(lam, n), dtype=np.uint8)


class Problem:
    """Maximization problem over {0,1}^n.

    Subclasses implement :meth:`objective_batch` (and
    :meth:`feasible_batch` when constrained). The single-genotype methods
    route through the batch versions.
    """

    n: int
    optimum: float | None = None
    constrained: bool = False
    name: str = "problem"

    def objective_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def feasible_batch(self, X: np.ndarray) -> np.ndarray:
        return np.ones(X.shape[0], dtype=bool)

    def objective(self, x: Genotype) -> float:
        return self.objective_batch(x.bits[None, :])[0].item()

    def is_feasible(self, x: Genotype) -> bool:
        return bool(self.feasible_batch(x.bits[None, :])[0])

    def objective_values(self) -> np.ndarray | None:
        """Sorted distinct objective values attained on feasible genotypes.

        ``None`` when not known analytically.
        """
        return None

    def sample_with_objective(self, value: float, rng: np.random.Generator) -> Genotype | None:
        """Return a random feasible genotype with the given objective, if constructible."""
        return None

    def describe(self) -> dict:
        return {"problem": self.name, "n": self.n}


@dataclass(frozen=True)
class FitnessMapping:
    """Monotone map from objective to fitness; infeasible genotypes get 0.

    ``mode`` is ``"raw"`` (f = F) or ``"power"`` (f = F**nu).
    """

    mode: str = "raw"
    nu: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("raw", "power"):
            raise InvalidInputError(f"unknown fitness mode {self.mode!r}")
        if self.mode == "power" and not self.nu > 0:
            raise InvalidInputError("nu must be positive")

    @classmethod
    def power(cls, nu: float) -> FitnessMapping:
        return cls("power", float(nu))

    @property
    def exponent(self) -> float:
        return self.nu if self.mode == "power" else 1.0

    def log_fitness(self, objective: np.ndarray, feasible: np.ndarray) -> np.ndarray:
        """log f, with -inf for zero fitness (penalty or F = 0)."""
        objective = np.asarray(objective, dtype=float)
        with np.errstate(divide="ignore"):
            logf = self.exponent * np.log(objective)
        return np.where(np.asarray(feasible, dtype=bool), logf, -np.inf)

    def fitness(self, objective: np.ndarray, feasible: np.ndarray) -> np.ndarray:
        """Absolute fitness values; overflow to inf is possible in power mode."""
        if self.mode == "raw":
            objective = np.asarray(objective, dtype=float)
            return np.where(np.asarray(feasible, dtype=bool), objective, 0.0)
        with np.errstate(over="ignore"):
            return np.exp(self.log_fitness(objective, feasible))

    def selection_weights(self, objective: np.ndarray, feasible: np.ndarray) -> np.ndarray:
        """Fitness rescaled by the population maximum, (F/F_max)**nu.

        All zeros when every fitness is zero.
        """
        logf = self.log_fitness(objective, feasible)
        top = logf.max() if logf.size else -np.inf
        if top == -np.inf:
            return np.zeros_like(logf)
        return np.exp(logf - top)

    def rank_key(self, objective: np.ndarray, feasible: np.ndarray) -> np.ndarray:
        """Ordering key consistent with fitness, infeasible strictly lowest."""
        return np.where(np.asarray(feasible, dtype=bool), np.asarray(objective, dtype=float), -np.inf)


@dataclass
class Evaluator:
    """Evaluates genotypes and counts every evaluation."""

    problem: Problem
    mapping: FitnessMapping = field(default_factory=FitnessMapping)
    count: int = 0

    def evaluate_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.problem.n:
            raise InvalidInputError(
                f"expected genotypes of length {self.problem.n}, got shape {X.shape}"
            )
        obj = np.asarray(self.problem.objective_batch(X), dtype=float)
        feas = np.asarray(self.problem.feasible_batch(X), dtype=bool)
        self.count += X.shape[0]
        return obj, feas

    def __call__(self, x: Genotype) -> float:
        obj, feas = self.evaluate_batch(_as_row(x, self.problem.n))
        return float(self.mapping.fitness(obj, feas)[0])


def _as_row(x: Genotype, n: int) -> np.ndarray:
    if not isinstance(x, Genotype):
        x = Genotype(x)
    if x.n != n:
        raise InvalidInputError(f"genotype length {x.n} does not match dimension {n}")
    return x.bits[None, :]


def evaluate(problem: Problem, mapping: FitnessMapping, x: Genotype,
             counter: Evaluator | None = None) -> float:
    """Fitness of a single genotype: 0 if infeasible, else phi(F(x))."""
    ev = counter if counter is not None else Evaluator(problem, mapping)
    if ev.problem is not problem:
        raise InvalidInputError("counter belongs to a different problem")
    obj, feas = ev.evaluate_batch(_as_row(x, problem.n))
    return float(mapping.fitness(obj, feas)[0])


class Population:
    """Lambda genotypes with their objective values and feasibility cached."""

    def __init__(self, genomes: np.ndarray, objective: np.ndarray, feasible: np.ndarray,
                 mapping: FitnessMapping) -> None:
        genomes = np.asarray(genomes, dtype=np.uint8)
        if genomes.ndim != 2 or genomes.shape[0] == 0:
            raise InvalidInputError("population must be a non-empty (lambda, n) array")
        self.genomes = genomes
        self.objective = np.asarray(objective, dtype=float)
        self.feasible = np.asarray(feasible, dtype=bool)
        self.mapping = mapping
        self.log_fitness = mapping.log_fitness(self.objective, self.feasible)
        self.rank_key = mapping.rank_key(self.objective, self.feasible)

    @classmethod
    def evaluate(cls, genomes: np.ndarray, evaluator: Evaluator) -> Population:
        obj, feas = evaluator.evaluate_batch(genomes)
        return cls(genomes, obj, feas, evaluator.mapping)

    @classmethod
    def from_fitness(cls, fitness: Sequence[float], n: int = 1) -> Population:
        """Population with the given raw fitness values and placeholder genomes.

        Handy for exercising selection operators directly.
        """
        fit = np.asarray(fitness, dtype=float)
        return cls(np.zeros((fit.size, n), dtype=np.uint8), fit, np.ones(fit.size, bool), FitnessMapping())

    @property
    def size(self) -> int:
        return int(self.genomes.shape[0])

    def __len__(self) -> int:
        return self.size

    @property
    def fitness(self) -> np.ndarray:
        return self.mapping.fitness(self.objective, self.feasible)

    def member(self, i: int) -> Genotype:
        return Genotype(self.genomes[i])

    def best_index(self) -> int:
        return int(np.argmax(self.rank_key))


def binomial_radius(p_hat: float, trials: int, confidence: float = 0.99) -> float:
    """Normal-approximation half-width for a binomial proportion."""
    from scipy.stats import norm

    z = norm.ppf(0.5 + confidence / 2)
    return float(z * math.sqrt(max(p_hat * (1 - p_hat), 0.0) / trials))
