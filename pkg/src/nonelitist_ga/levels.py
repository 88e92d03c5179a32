"""Level partitions of the search space and the level-based run-time conditions.

A partition A_0, ..., A_{m+1} is represented by a vectorized membership
function; A_{m+1} is the target. ``H_j`` is the union of levels j..m+1,
so ``x in H_j`` is simply ``level(x) >= j``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .core import FitnessMapping, Genotype, InvalidInputError, Problem, binomial_radius
from .operators import as_mutation_operator

EAGER_MAX_N = 20
EXHAUSTIVE_MAX_N = 16

LevelFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def genotype_codes(X: np.ndarray) -> np.ndarray:
    """Integer code of each row, first gene most significant."""
    X = np.asarray(X, dtype=np.int64)
    weights = np.int64(1) << np.arange(X.shape[1] - 1, -1, -1, dtype=np.int64)
    return X @ weights


def all_genotypes(n: int) -> np.ndarray:
    """All 2^n genotypes as rows, in code order."""
    codes = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def flip_masks(n: int, radius: int) -> list[tuple[int, ...]]:
    """Flip-position subsets of size 1..radius, by size then lexicographically."""
    return [c for d in range(1, radius + 1) for c in combinations(range(n), d)]


class LevelPartition:
    """Ordered partition A_0..A_{m+1} given by a level function.

    ``level_fn(X, objective, feasible)`` returns the level of every row.
    """

    def __init__(self, m: int, level_fn: LevelFn, problem: Problem, kind: str = "custom",
                 a0_empty: bool = True, values: np.ndarray | None = None) -> None:
        if m < 1:
            raise InvalidInputError("partition needs at least one intermediate level (m >= 1)")
        self.m = int(m)
        self.kind = kind
        self.problem = problem
        self.a0_empty = a0_empty
        self.values = values
        self._level_fn = level_fn

    def levels(self, X: np.ndarray, objective: np.ndarray | None = None,
               feasible: np.ndarray | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.uint8)
        if objective is None:
            objective = self.problem.objective_batch(X)
        if feasible is None:
            feasible = self.problem.feasible_batch(X)
        return np.asarray(self._level_fn(X, np.asarray(objective, float), np.asarray(feasible, bool)))

    def level_of(self, x: Genotype) -> int:
        return int(self.levels(x.bits[None, :])[0])

    def in_h(self, j: int, X: np.ndarray, objective=None, feasible=None) -> np.ndarray:
        return self.levels(X, objective, feasible) >= j

    def in_target(self, X: np.ndarray, objective=None, feasible=None) -> np.ndarray:
        return self.levels(X, objective, feasible) == self.m + 1

    def describe(self) -> dict:
        return {"kind": self.kind, "m": self.m, "a0_empty": self.a0_empty}


def canonical_partition(problem: Problem, mapping: FitnessMapping | None = None,
                        include_infeasible_a0: bool = False) -> LevelPartition:
    """Levels grouping feasible genotypes by equal fitness, ordered increasingly.

    With ``include_infeasible_a0`` the infeasible genotypes form A_0.
    """
    values = problem.objective_values()
    if values is None:
        raise InvalidInputError(f"objective range of {problem.name} is unknown")
    if problem.constrained and not include_infeasible_a0:
        raise InvalidInputError("constrained problem: infeasible genotypes need A_0")
    values = np.asarray(values, dtype=float)

    def level_fn(X, objective, feasible):
        idx = np.searchsorted(values, objective)
        safe = np.minimum(idx, values.size - 1)
        if (feasible & (values[safe] != objective)).any():
            raise InvalidInputError("objective value outside the declared range")
        return np.where(feasible, safe + 1, 0)

    kind = "canonical-with-infeasible-A0" if include_infeasible_a0 else "canonical"
    return LevelPartition(values.size - 1, level_fn, problem, kind,
                          a0_empty=not problem.constrained, values=values)


def _local_optima_mask(problem: Problem, X: np.ndarray, objective: np.ndarray,
                       feasible: np.ndarray, radius: int) -> np.ndarray:
    """Which rows are feasible with no strictly better feasible neighbor."""
    is_lo = feasible.copy()
    rows = np.flatnonzero(is_lo)
    if rows.size == 0:
        return is_lo
    base = X[rows]
    base_obj = objective[rows]
    for positions in flip_masks(problem.n, radius):
        Y = base.copy()
        Y[:, list(positions)] ^= 1
        better = problem.feasible_batch(Y) & (np.asarray(problem.objective_batch(Y), float) > base_obj)
        is_lo[rows[better]] = False
    return is_lo


def local_optima_partition(problem: Problem, radius: int = 1, mapping: FitnessMapping | None = None,
                           lazy: bool | None = None) -> LevelPartition:
    """Partition with A_{m+1} = local optima and A_j = {f = f_j} minus local optima.

    Eager mode enumerates {0,1}^n (n <= 20) and gives the exact m. Lazy
    mode tests local optimality on demand and takes m as the number of
    attainable objective values, an upper bound.
    """
    n = problem.n
    if radius < 1:
        raise InvalidInputError("radius must be >= 1")
    if lazy is None:
        lazy = n > EAGER_MAX_N
    if not lazy and n > EAGER_MAX_N:
        raise InvalidInputError(f"n={n} too large for eager local-optima enumeration; use lazy=True")

    if not lazy:
        X = all_genotypes(n)
        obj = np.asarray(problem.objective_batch(X), float)
        feas = np.asarray(problem.feasible_batch(X), bool)
        lo = _local_optima_mask(problem, X, obj, feas, radius)
        rest = feas & ~lo
        values = np.unique(obj[rest])
        m = values.size
        table = np.zeros(2 ** n, dtype=np.int64)
        table[rest] = np.searchsorted(values, obj[rest]) + 1
        table[lo] = m + 1
        if m < 1:
            raise InvalidInputError("every feasible genotype is a local optimum (m = 0)")

        def level_fn(Xb, objective, feasible):
            return table[genotype_codes(Xb)]

        part = LevelPartition(m, level_fn, problem, "local-optima",
                              a0_empty=not problem.constrained, values=values)
        part.local_optima = X[lo]
        return part

    values = problem.objective_values()
    if values is None:
        raise InvalidInputError("lazy mode needs the problem's attainable objective values")
    values = np.asarray(values, float)

    def lazy_level_fn(Xb, objective, feasible):
        lo = _local_optima_mask(problem, Xb, objective, feasible, radius)
        lv = np.searchsorted(values, objective) + 1
        return np.where(lo, values.size + 1, np.where(feasible, lv, 0))

    return LevelPartition(values.size, lazy_level_fn, problem, "local-optima",
                          a0_empty=not problem.constrained, values=values)


# ---------------------------------------------------------------------------
# monotonicity
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityResult:
    ok: bool
    witness: tuple[Genotype, Genotype] | None = None
    level: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_monotonicity(partition: LevelPartition, mode: str = "auto", samples: int = 100_000,
                       rng: np.random.Generator | None = None,
                       mapping: FitnessMapping | None = None) -> MonotonicityResult:
    """Check f(x) < f(y) for x in A_{j-1}, y in A_j, j = 2..m.

    Exhaustive for n <= 16 under ``mode="auto"``, sampled otherwise.
    On failure the first violating pair is returned.
    """
    problem = partition.problem
    mapping = mapping or FitnessMapping()
    if mode == "auto":
        mode = "exhaustive" if problem.n <= EXHAUSTIVE_MAX_N else "sampled"
    if mode == "exhaustive":
        X = all_genotypes(problem.n)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        X = rng.integers(0, 2, size=(samples, problem.n), dtype=np.uint8)
    obj = np.asarray(problem.objective_batch(X), float)
    feas = np.asarray(problem.feasible_batch(X), bool)
    key = mapping.rank_key(obj, feas)
    lv = partition.levels(X, obj, feas)
    for j in range(2, partition.m + 1):
        lower = np.flatnonzero(lv == j - 1)
        upper = np.flatnonzero(lv == j)
        if lower.size == 0 or upper.size == 0:
            continue
        hi = lower[np.argmax(key[lower])]
        lo = upper[np.argmin(key[upper])]
        if key[hi] >= key[lo]:
            return MonotonicityResult(False, (Genotype(X[hi]), Genotype(X[lo])), j)
    return MonotonicityResult(True)


# ---------------------------------------------------------------------------
# condition estimators and bounds
# ---------------------------------------------------------------------------

LevelSampler = Callable[[int, np.random.Generator], "Genotype | None"]


def canonical_level_sampler(partition: LevelPartition) -> LevelSampler:
    """Sampler of level-j members for canonical partitions of built-in problems."""
    if partition.values is None:
        raise InvalidInputError("partition has no value table")
    values = partition.values

    def sample(j, rng):
        if not 1 <= j <= values.size:
            return None
        return partition.problem.sample_with_objective(values[j - 1], rng)
    return sample


def rejection_level_sampler(partition: LevelPartition, attempts: int = 10_000) -> LevelSampler:
    """Uniform genotypes filtered by level; returns None when none is found."""
    n = partition.problem.n

    def sample(j, rng):
        X = rng.integers(0, 2, size=(attempts, n), dtype=np.uint8)
        hits = np.flatnonzero(partition.levels(X) == j)
        return Genotype(X[hits[0]]) if hits.size else None
    return sample


@dataclass
class SStarEstimate:
    per_level: dict[int, tuple[float, float]]
    minimum: float
    radius: float
    flagged: list[int] = field(default_factory=list)

    @property
    def lower(self) -> float:
        return max(0.0, self.minimum - self.radius)


def estimate_s_star(partition: LevelPartition, mutation, sampler: LevelSampler, trials: int,
                    rng: np.random.Generator, representatives: int = 5,
                    confidence: float = 0.99) -> SStarEstimate:
    """Monte Carlo upgrade probabilities Pr(Mut(x) in H_{j+1}) for x in A_j, j = 1..m.

    For each level the minimum over ``representatives`` sampled members is
    kept. Levels without a sampleable member are flagged and skipped.
    """
    import warnings

    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    mut = as_mutation_operator(mutation)
    per_level: dict[int, tuple[float, float]] = {}
    flagged: list[int] = []
    for j in range(1, partition.m + 1):
        best: tuple[float, float] | None = None
        for _ in range(representatives):
            x = sampler(j, rng)
            if x is None:
                continue
            if partition.level_of(x) != j:
                raise InvalidInputError(f"sampler returned a genotype outside level {j}")
            Y = mut(np.repeat(x.bits[None, :], trials, axis=0), rng)
            p_hat = float(np.mean(partition.levels(Y) >= j + 1))
            if best is None or p_hat < best[0]:
                best = (p_hat, binomial_radius(p_hat, trials, confidence))
        if best is None:
            flagged.append(j)
            continue
        per_level[j] = best
    if flagged:
        warnings.warn(f"levels without sampleable members skipped: {flagged}", stacklevel=2)
    if not per_level:
        raise InvalidInputError("no level could be sampled")
    j_min = min(per_level, key=lambda j: per_level[j][0])
    return SStarEstimate(per_level, per_level[j_min][0], per_level[j_min][1], flagged)


def leading_ones_s_star(n: int, pm: float) -> float:
    """Flip the first zero and nothing else: pm (1-pm)^(n-1)."""
    return pm * (1 - pm) ** (n - 1)


def balas_upgrade_probabilities(n: int, p: int, pm: float) -> dict[int, float]:
    """Exact Pr(Mut(x) in H_{j+1}) under bitwise mutation for the canonical Balas levels.

    Level j holds covers with |J| = n - j + 1; the probability depends on
    |J| only, so it is computed by convolving the two flip binomials.
    """
    from scipy.stats import binom

    out = {}
    m = n - p + 1 - 1
    for j in range(1, m + 1):
        ones = n - j + 1
        lost = binom.pmf(np.arange(ones + 1), ones, pm)
        gained = binom.pmf(np.arange(n - ones + 1), n - ones, pm)
        total = 0.0
        for a, pa in enumerate(lost):
            for b, pb in enumerate(gained):
                if p <= ones - a + b <= ones - 1:
                    total += pa * pb
        out[j] = float(total)
    return out


def lambda_lower_bound(m: int, s_star: float, epsilon: float, beta0: float) -> int:
    """Smallest population size meeting 2(1 + ln m) / (s* eps beta0 (2 - beta0))."""
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    for name, v in (("s_star", s_star), ("epsilon", epsilon), ("beta0", beta0)):
        if not 0 < v <= 1:
            raise InvalidInputError(f"{name} must lie in (0, 1]")
    return math.ceil(2 * (1 + math.log(m)) / (s_star * epsilon * beta0 * (2 - beta0)))


def even_at_least(lam: int) -> int:
    return lam + (lam % 2)


def initial_success_probability(partition: LevelPartition, lam: int,
                                feasible_rate: float | None = None) -> float:
    """p_1 for uniform initialization: 1 when A_0 is empty, else 1 - (1 - q)^lambda.

    ``q`` is the probability that a uniform genotype lies in H_1.
    """
    if partition.a0_empty:
        return 1.0
    if feasible_rate is None:
        fp = getattr(partition.problem, "feasible_probability", None)
        if fp is None:
            raise InvalidInputError("feasible rate of the initializer is required")
        feasible_rate = fp()
    return 1.0 - (1.0 - feasible_rate) ** lam


@dataclass
class ConditionReport:
    m: int
    lam: int
    s_star: float
    p1: float
    beta0: float
    epsilon: float
    lambda_required: int
    c4_satisfied: bool
    success_floor: float
    sources: dict[str, str] = field(default_factory=dict)
    per_level: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("s_star", "p1", "beta0", "epsilon"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise InvalidInputError(f"{name}={v} is not a probability in (0, 1]")
        if self.lambda_required < 1:
            raise InvalidInputError("lambda_required must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_level"] = {str(j): {"estimate": p, "radius": r} for j, (p, r) in self.per_level.items()}
        return d


REQUIRED_ESTIMATES = ("s_star", "p1", "beta0", "epsilon")


def build_condition_report(problem: Problem, partition: LevelPartition, config, estimates: dict) -> ConditionReport:
    """Collect the five condition values and test the population-size requirement.

    ``estimates`` maps ``s_star``, ``p1``, ``beta0``, ``epsilon`` to values;
    optional ``sources`` and ``per_level`` are carried into the report.
    """
    missing = [k for k in REQUIRED_ESTIMATES if estimates.get(k) is None]
    if missing:
        raise InvalidInputError(f"missing condition values: {', '.join(missing)}")
    lam = int(config.lam)
    s, p1, b, e = (float(estimates[k]) for k in REQUIRED_ESTIMATES)
    required = lambda_lower_bound(partition.m, s, e, b)
    return ConditionReport(
        m=partition.m, lam=lam, s_star=s, p1=p1, beta0=b, epsilon=e,
        lambda_required=required, c4_satisfied=lam >= required,
        success_floor=p1 / math.e,
        sources=dict(estimates.get("sources", {})),
        per_level=dict(estimates.get("per_level", {})),
    )
