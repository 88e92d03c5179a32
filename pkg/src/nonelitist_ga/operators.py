"""Selection, crossover and mutation operators and their closed-form bounds.

Every operator has a single-genotype form, used for instrumented tests
and small experiments, and a batched form over ``(rows, n)`` uint8 arrays
used by the engine. Both draw all randomness from the caller's generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import FitnessMapping, Genotype, InvalidInputError, Population, binomial_radius

SELECTION_KINDS = ("tournament", "mu-lambda", "proportional")
CROSSOVER_KINDS = ("single-point", "pass-through")
MUTATION_KINDS = ("bitwise", "point")


@dataclass(frozen=True)
class SelectionSpec:
    kind: str
    k: int | None = None
    mu: int | None = None
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in SELECTION_KINDS:
            raise InvalidInputError(f"unknown selection {self.kind!r}")
        if self.kind == "tournament" and (self.k is None or self.k < 1):
            raise InvalidInputError("tournament size k must be >= 1")
        if self.kind == "mu-lambda" and (self.mu is None or self.mu < 1):
            raise InvalidInputError("mu must be >= 1")
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidInputError("alpha must be positive")

    @property
    def param(self):
        return {"tournament": self.k, "mu-lambda": self.mu}.get(self.kind)

    def beta0(self) -> float:
        """Selection-pressure lower bound implied by the operator parameters."""
        if self.kind == "mu-lambda":
            return beta0_mu_lambda(self.mu)
        if self.alpha is None:
            raise InvalidInputError(f"{self.kind} selection needs alpha for beta0")
        if self.kind == "tournament":
            return beta0_tournament(self.alpha)
        return beta0_proportional(self.alpha)


@dataclass(frozen=True)
class CrossoverSpec:
    kind: str = "single-point"
    pc: float = 1.0
    r: int = 2

    def __post_init__(self) -> None:
        if self.kind not in CROSSOVER_KINDS:
            raise InvalidInputError(f"unknown crossover {self.kind!r}")
        if not 0.0 <= self.pc <= 1.0:
            raise InvalidInputError("pc must lie in [0, 1]")
        if self.r not in (1, 2):
            raise InvalidInputError("crossover arity r must be 1 or 2")


@dataclass(frozen=True)
class MutationSpec:
    kind: str = "bitwise"
    pm: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in MUTATION_KINDS:
            raise InvalidInputError(f"unknown mutation {self.kind!r}")
        if not 0.0 <= self.pm <= 1.0:
            raise InvalidInputError("pm must lie in [0, 1]")


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

def _check_pop(pop: Population) -> None:
    if pop.size == 0:
        raise InvalidInputError("empty population")


def elite_indices(pop: Population, mu: int) -> np.ndarray:
    """Indices of the mu fittest members, ties broken by lower index."""
    if mu > pop.size:
        raise InvalidInputError("mu exceeds population size")
    order = np.lexsort((np.arange(pop.size), -pop.rank_key))
    return order[:mu]


def tournament_draw(pop: Population, k: int, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """One k-tournament with replacement; returns (winner, sampled indices).

    Ties among sampled maximal members are broken uniformly.
    """
    samples = rng.integers(0, pop.size, size=k)
    keys = pop.rank_key[samples]
    best = samples[keys == keys.max()]
    return int(best[rng.integers(best.size)]), samples


def select(pop: Population, spec: SelectionSpec, rng: np.random.Generator) -> int:
    """Draw one parent index."""
    _check_pop(pop)
    if spec.kind == "tournament":
        return tournament_draw(pop, spec.k, rng)[0]
    if spec.kind == "mu-lambda":
        elite = elite_indices(pop, spec.mu)
        return int(elite[rng.integers(spec.mu)])
    return int(_proportional(pop, 1, rng)[0])


def _proportional(pop: Population, size: int, rng: np.random.Generator) -> np.ndarray:
    weights = pop.mapping.selection_weights(pop.objective, pop.feasible)
    cum = np.cumsum(weights)
    total = cum[-1]
    if not total > 0:
        return rng.integers(0, pop.size, size=size)
    idx = np.searchsorted(cum, rng.random(size) * total, side="right")
    return np.minimum(idx, pop.size - 1)


def _tournament_batch(pop: Population, k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    # The maximum sampled position in fitness order has CDF (i/lambda)^k;
    # the winner is then uniform over members sharing that fitness, which is
    # the law of an explicit tournament with uniform tie-breaking.
    lam = pop.size
    order = np.argsort(pop.rank_key, kind="stable")
    sorted_key = pop.rank_key[order]
    u = rng.random(size)
    pos = np.clip(np.ceil(lam * u ** (1.0 / k)).astype(np.int64), 1, lam) - 1
    v = sorted_key[pos]
    lo = np.searchsorted(sorted_key, v, side="left")
    hi = np.searchsorted(sorted_key, v, side="right")
    pick = lo + (rng.random(size) * (hi - lo)).astype(np.int64)
    return order[np.minimum(pick, hi - 1)]


def select_indices(pop: Population, spec: SelectionSpec, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` independent parent indices."""
    _check_pop(pop)
    if spec.kind == "tournament":
        return _tournament_batch(pop, spec.k, size, rng)
    if spec.kind == "mu-lambda":
        elite = elite_indices(pop, spec.mu)
        return elite[rng.integers(0, spec.mu, size=size)]
    return _proportional(pop, size, rng)


def selection_probabilities(pop: Population, spec: SelectionSpec) -> np.ndarray:
    """Exact Pr(select returns i) for every index i."""
    _check_pop(pop)
    lam = pop.size
    if spec.kind == "mu-lambda":
        probs = np.zeros(lam)
        probs[elite_indices(pop, spec.mu)] = 1.0 / spec.mu
        return probs
    if spec.kind == "proportional":
        w = pop.mapping.selection_weights(pop.objective, pop.feasible)
        return w / w.sum() if w.sum() > 0 else np.full(lam, 1.0 / lam)
    key = pop.rank_key
    values, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
    at_most = np.cumsum(counts)
    below = at_most - counts
    level_prob = (at_most / lam) ** spec.k - (below / lam) ** spec.k
    return (level_prob / counts)[inverse]


def selective_pressure_exact(pop: Population, partition, spec: SelectionSpec) -> float:
    """Probability that one selection returns a member of the highest occupied level.

    ``partition`` is a LevelPartition or an array of the members' levels.
    """
    if hasattr(partition, "levels"):
        levels = partition.levels(pop.genomes, pop.objective, pop.feasible)
    else:
        levels = np.asarray(partition)
    if levels.shape[0] != pop.size:
        raise InvalidInputError("levels must align with population members")
    top = levels == levels.max()
    return float(min(1.0, selection_probabilities(pop, spec)[top].sum()))


def beta0_tournament(alpha: float) -> float:
    """Lower bound 1 - e^-alpha for k-tournament with k >= alpha * lambda."""
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    return -math.expm1(-alpha)


def beta0_mu_lambda(mu: int) -> float:
    if mu < 1:
        raise InvalidInputError("mu must be >= 1")
    return 1.0 / mu


def beta0_proportional(alpha: float) -> float:
    """Lower bound 1/(1 + 1/alpha) for power-scaled proportional selection."""
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    return 1.0 / (1.0 + 1.0 / alpha)


def nu_threshold(alpha: float, lam: float, f_star: float) -> float:
    """max(0, ln(alpha*lambda) * F*); the power exponent must exceed it."""
    if not alpha > 0 or lam < 1 or f_star < 1:
        raise InvalidInputError("need alpha > 0, lambda >= 1, F* >= 1")
    return max(0.0, math.log(alpha * lam) * f_star)


# ---------------------------------------------------------------------------
# crossover
# ---------------------------------------------------------------------------

def crossover_batch(X: np.ndarray, Y: np.ndarray, spec: CrossoverSpec, rng: np.random.Generator,
                    chi: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Recombine row pairs (X[j], Y[j]); returns both offspring arrays.

    For arity 1 callers keep the first array only.
    """
    X = np.asarray(X, dtype=np.uint8)
    Y = np.asarray(Y, dtype=np.uint8)
    if X.shape != Y.shape:
        raise InvalidInputError("parents must have equal shapes")
    if spec.kind == "pass-through":
        return X.copy(), Y.copy()
    rows, n = X.shape
    if n < 2:
        raise InvalidInputError("single-point crossover needs n >= 2")
    apply = rng.random(rows) < spec.pc
    if chi is None:
        chi = rng.integers(1, n, size=rows)
    else:
        chi = np.broadcast_to(np.asarray(chi), (rows,))
        if ((chi < 1) | (chi > n - 1)).any():
            raise InvalidInputError("crossover point must lie in [1, n-1]")
    keep = (np.arange(n)[None, :] < chi[:, None]) | ~apply[:, None]
    return np.where(keep, X, Y), np.where(keep, Y, X)


def crossover(x: Genotype, y: Genotype, spec: CrossoverSpec, rng: np.random.Generator,
              chi: int | None = None):
    """Single-point (or pass-through) crossover of two genotypes.

    Returns ``(x', y')`` for arity 2 and ``x'`` for arity 1.
    """
    if len(x) != len(y):
        raise InvalidInputError("parents must have equal length")
    a, b = crossover_batch(x.bits[None, :], y.bits[None, :], spec, rng,
                           None if chi is None else np.array([chi]))
    if spec.r == 1:
        return Genotype(a[0])
    return Genotype(a[0]), Genotype(b[0])


# ---------------------------------------------------------------------------
# mutation
# ---------------------------------------------------------------------------

def mutate_batch(X: np.ndarray, spec: MutationSpec, rng: np.random.Generator) -> np.ndarray:
    X = np.asarray(X, dtype=np.uint8)
    rows, n = X.shape
    if spec.kind == "bitwise":
        return X ^ (rng.random((rows, n)) < spec.pm).astype(np.uint8)
    apply = rng.random(rows) < spec.pm
    pos = rng.integers(0, n, size=rows)
    out = X.copy()
    hit = np.flatnonzero(apply)
    out[hit, pos[hit]] ^= 1
    return out


def mutate(x: Genotype, spec: MutationSpec, rng: np.random.Generator) -> Genotype:
    return Genotype(mutate_batch(x.bits[None, :], spec, rng)[0])


def as_mutation_operator(mutation) -> Callable[[np.ndarray, np.random.Generator], np.ndarray]:
    """Normalize a MutationSpec or a batch callable to a batch callable."""
    if isinstance(mutation, MutationSpec):
        return lambda X, rng: mutate_batch(X, mutation, rng)
    if callable(mutation):
        return mutation
    raise InvalidInputError("mutation must be a MutationSpec or a callable")


def mutation_transition_prob(n: int, pm: float, d: int) -> float:
    """Pr(bitwise mutation maps y to a fixed x at Hamming distance d)."""
    if not 0 <= d <= n:
        raise InvalidInputError("distance must lie in [0, n]")
    if not 0.0 <= pm <= 1.0:
        raise InvalidInputError("pm must lie in [0, 1]")
    log_p = 0.0
    if d:
        if pm == 0.0:
            return 0.0
        log_p += d * math.log(pm)
    if n - d:
        if pm == 1.0:
            return 0.0
        log_p += (n - d) * math.log1p(-pm)
    return math.exp(log_p)


def mutation_neighbor_lower_bound(n: int, k_radius: int) -> float:
    """(K/(e n))^K: floor on reaching any point within distance K when pm = K/n."""
    if not 1 <= k_radius <= n / 2:
        raise InvalidInputError("bound requires 1 <= K <= n/2")
    return (k_radius / (math.e * n)) ** k_radius


# ---------------------------------------------------------------------------
# crossover success estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonEstimate:
    estimate: float
    radius: float
    successes: int
    trials: int

    @property
    def lower(self) -> float:
        return max(0.0, self.estimate - self.radius)


PairSampler = Callable[[int, np.random.Generator], tuple[np.ndarray, np.ndarray]]


def uniform_pair_sampler(n: int) -> PairSampler:
    def sample(size, rng):
        return (rng.integers(0, 2, size=(size, n), dtype=np.uint8),
                rng.integers(0, 2, size=(size, n), dtype=np.uint8))
    return sample


def stratified_pair_sampler(problem) -> PairSampler:
    """Parents drawn with objective values chosen uniformly among attainable ones."""
    values = problem.objective_values()
    if values is None:
        raise InvalidInputError("problem has no enumerable objective values")

    def sample(size, rng):
        X = np.empty((size, problem.n), dtype=np.uint8)
        Y = np.empty_like(X)
        for row in range(size):
            X[row] = problem.sample_with_objective(values[rng.integers(values.size)], rng).bits
            Y[row] = problem.sample_with_objective(values[rng.integers(values.size)], rng).bits
        return X, Y
    return sample


def estimate_crossover_epsilon(spec: CrossoverSpec, sampler: PairSampler, trials: int,
                               rng: np.random.Generator, key: Callable[[np.ndarray], np.ndarray],
                               confidence: float = 0.99) -> EpsilonEstimate:
    """Monte Carlo estimate of the probability that crossover does not lose the parents' best fitness.

    ``key`` maps a genotype batch to values ordered like fitness. With r=2
    success means max(f(x'), f(y')) >= max(f(x), f(y)); with r=1 only x'
    is compared.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    X, Y = sampler(trials, rng)
    Xc, Yc = crossover_batch(X, Y, spec, rng)
    parent_best = np.maximum(key(X), key(Y))
    child_best = key(Xc) if spec.r == 1 else np.maximum(key(Xc), key(Yc))
    successes = int((child_best >= parent_best).sum())
    p_hat = successes / trials
    return EpsilonEstimate(p_hat, binomial_radius(p_hat, trials, confidence), successes, trials)


def fitness_key(problem, mapping: FitnessMapping | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Ordering key for genotype batches (objective, infeasible lowest)."""
    mapping = mapping or FitnessMapping()

    def key(X):
        return mapping.rank_key(problem.objective_batch(X), problem.feasible_batch(X))
    return key


def absorbing_mutation(problem, base: MutationSpec, kill_prob: float, sink: np.ndarray):
    """Adversarial mutation that traps the search outside the feasible set.

    Infeasible inputs are returned unchanged, so they never become
    feasible again. A feasible input is replaced by the infeasible
    genotype ``sink`` with probability ``kill_prob`` and otherwise
    mutated by ``base``.
    """
    sink = np.asarray(sink, dtype=np.uint8)
    if problem.feasible_batch(sink[None, :])[0]:
        raise InvalidInputError("sink genotype must be infeasible")
    if not 0.0 <= kill_prob <= 1.0:
        raise InvalidInputError("kill_prob must lie in [0, 1]")

    def mut(X, rng):
        feasible = problem.feasible_batch(X)
        out = mutate_batch(X, base, rng)
        kill = rng.random(X.shape[0]) < kill_prob
        out[~feasible] = X[~feasible]
        out[feasible & kill] = sink
        return out
    return mut
