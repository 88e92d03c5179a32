"""Selection, crossover and mutation operators."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonelitist_ga.core import FitnessMapping, Genotype, InvalidInputError, Population, make_rng
from nonelitist_ga.operators import (CrossoverSpec, MutationSpec, SelectionSpec, absorbing_mutation,
                                     beta0_mu_lambda, beta0_proportional, beta0_tournament,
                                     crossover, crossover_batch, elite_indices,
                                     estimate_crossover_epsilon, fitness_key, mutate, mutate_batch,
                                     mutation_neighbor_lower_bound, mutation_transition_prob,
                                     nu_threshold, select, select_indices, selection_probabilities,
                                     selective_pressure_exact, stratified_pair_sampler,
                                     tournament_draw, uniform_pair_sampler)
from nonelitist_ga.problems import BalasSCP, LeadingOnes

fitness_lists = st.lists(st.integers(0, 6), min_size=1, max_size=7)


def tournament_oracle(fitness, k):
    """Exact tournament law by enumerating all lambda^k ordered samples."""
    lam = len(fitness)
    probs = [Fraction(0)] * lam
    for sample in itertools.product(range(lam), repeat=k):
        best = max(fitness[i] for i in sample)
        winners = [i for i in sample if fitness[i] == best]
        for i in winners:
            probs[i] += Fraction(1, lam ** k * len(winners))
    return probs


def power_pop(objective, nu):
    obj = np.asarray(objective, float)
    return Population(np.zeros((obj.size, 1), np.uint8), obj, np.ones(obj.size, bool),
                      FitnessMapping.power(nu))


class TestSelectExamples:
    def test_proportional_two_members(self):
        pop = Population.from_fitness([1, 3])
        probs = selection_probabilities(pop, SelectionSpec("proportional"))
        assert probs.tolist() == [0.25, 0.75]
        draws = select_indices(pop, SelectionSpec("proportional"), 100_000, make_rng(0))
        assert abs(draws.mean() - 0.75) < 3 * math.sqrt(0.75 * 0.25 / 100_000)

    def test_tournament_all_equal_is_uniform(self):
        pop = Population.from_fitness([2] * 5)
        spec = SelectionSpec("tournament", k=5)
        assert np.allclose(selection_probabilities(pop, spec), 0.2)
        counts = np.bincount(select_indices(pop, spec, 50_000, make_rng(1)), minlength=5)
        assert np.all(np.abs(counts / 50_000 - 0.2) < 3 * math.sqrt(0.16 / 50_000))

    def test_mu_one_is_argmax(self):
        pop = Population.from_fitness([3, 9, 1, 4])
        rng = make_rng(2)
        assert {select(pop, SelectionSpec("mu-lambda", mu=1), rng) for _ in range(50)} == {1}

    def test_empty_population_rejected(self):
        with pytest.raises(InvalidInputError):
            Population.from_fitness([])

    def test_elite_tie_break_by_index(self):
        pop = Population.from_fitness([5, 7, 5, 5])
        assert elite_indices(pop, 3).tolist() == [1, 0, 2]

    @pytest.mark.parametrize("kwargs", [{"kind": "roulette"}, {"kind": "tournament"},
                                        {"kind": "mu-lambda", "mu": 0},
                                        {"kind": "proportional", "alpha": -1.0}])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InvalidInputError):
            SelectionSpec(**kwargs)


class TestSelectivePressure:
    def test_tournament_enumeration(self):
        pop = Population.from_fitness([9, 1, 1, 1])
        exact = selective_pressure_exact(pop, [1, 0, 0, 0], SelectionSpec("tournament", k=2))
        oracle = tournament_oracle([9, 1, 1, 1], 2)[0]
        assert oracle == Fraction(7, 16)
        assert exact == pytest.approx(0.4375, abs=1e-15)

    @pytest.mark.parametrize("spec", [SelectionSpec("tournament", k=3), SelectionSpec("mu-lambda", mu=2),
                                      SelectionSpec("proportional")])
    def test_all_top(self, spec):
        pop = Population.from_fitness([4, 4, 4, 4])
        assert selective_pressure_exact(pop, [2, 2, 2, 2], spec) == pytest.approx(1.0)

    def test_mu_lambda_half(self):
        pop = Population.from_fitness([8, 5, 2, 1])
        assert selective_pressure_exact(pop, [3, 2, 1, 0], SelectionSpec("mu-lambda", mu=2)) == 0.5

    @settings(max_examples=60, deadline=None)
    @given(fitness_lists, st.integers(1, 3))
    def test_tournament_matches_enumeration(self, fitness, k):
        if len(fitness) ** k > 400:
            return
        pop = Population.from_fitness(fitness)
        exact = selection_probabilities(pop, SelectionSpec("tournament", k=k))
        oracle = [float(p) for p in tournament_oracle(fitness, k)]
        assert np.allclose(exact, oracle, atol=1e-12)

    @given(st.lists(st.integers(1, 50), min_size=1, max_size=40), st.floats(0.5, 30))
    def test_proportional_normalizes(self, objective, nu):
        probs = selection_probabilities(power_pop(objective, nu), SelectionSpec("proportional"))
        assert abs(probs.sum() - 1.0) <= 1e-12

    @pytest.mark.parametrize("spec", [SelectionSpec("tournament", k=3), SelectionSpec("mu-lambda", mu=3),
                                      SelectionSpec("proportional")])
    @pytest.mark.parametrize("seed", range(3))
    def test_empirical_matches_exact(self, spec, seed):
        rng = make_rng(seed, 99)
        pop = Population.from_fitness(rng.integers(1, 6, size=8))
        probs = selection_probabilities(pop, spec)
        draws = 100_000
        freq = np.bincount(select_indices(pop, spec, draws, rng), minlength=8) / draws
        se = np.sqrt(probs * (1 - probs) / draws)
        assert np.all(np.abs(freq - probs) <= 3 * se + 1e-12)

    def test_single_draw_tournament_matches_exact(self):
        pop = Population.from_fitness([1, 2, 2, 5, 3])
        spec = SelectionSpec("tournament", k=2)
        rng = make_rng(4)
        draws = 40_000
        freq = np.bincount([select(pop, spec, rng) for _ in range(draws)], minlength=5) / draws
        probs = selection_probabilities(pop, spec)
        assert np.all(np.abs(freq - probs) <= 3 * np.sqrt(probs * (1 - probs) / draws) + 1e-12)

    @given(st.lists(st.integers(0, 8), min_size=2, max_size=8), st.integers(1, 8), st.integers(0, 2**32))
    def test_tournament_postcondition(self, fitness, k, seed):
        pop = Population.from_fitness(fitness)
        winner, samples = tournament_draw(pop, k, make_rng(seed))
        assert winner in samples
        assert fitness[winner] == max(fitness[i] for i in samples)

    @given(st.lists(st.integers(0, 30), min_size=1, max_size=30), st.floats(0.5, 200))
    def test_argmax_invariant_under_power(self, objective, nu):
        obj = np.asarray(objective, float)
        feas = np.ones(obj.size, bool)
        raw = FitnessMapping().fitness(obj, feas)
        powered = FitnessMapping.power(nu).log_fitness(obj, feas)
        assert np.array_equal(np.flatnonzero(raw == raw.max()),
                              np.flatnonzero(powered == powered.max()))


class TestBounds:
    def test_beta0_tournament(self):
        assert beta0_tournament(1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
        assert beta0_tournament(math.log(2)) == pytest.approx(0.5, abs=1e-15)
        assert beta0_tournament(1e-12) < 1e-11

    @pytest.mark.parametrize("mu,expected", [(1, 1.0), (4, 0.25), (2, 0.5)])
    def test_beta0_mu_lambda(self, mu, expected):
        assert beta0_mu_lambda(mu) == expected

    @pytest.mark.parametrize("alpha,expected", [(1.0, 0.5), (1 / 3, 0.25)])
    def test_beta0_proportional(self, alpha, expected):
        assert beta0_proportional(alpha) == pytest.approx(expected, abs=1e-15)

    def test_beta0_proportional_limit(self):
        assert beta0_proportional(1e9) > 1 - 1e-8

    @pytest.mark.parametrize("fn,arg", [(beta0_tournament, 0.0), (beta0_mu_lambda, 0),
                                        (beta0_proportional, -0.5)])
    def test_beta0_rejects(self, fn, arg):
        with pytest.raises(InvalidInputError):
            fn(arg)

    def test_nu_threshold(self):
        assert nu_threshold(1.0, 1, 10) == 0.0
        assert nu_threshold(1.0, math.e, 10) == pytest.approx(10.0)
        assert nu_threshold(0.5, 1, 10) == 0.0


class TestCrossover:
    def test_forced_point(self):
        x, y = Genotype([0, 0, 1, 1]), Genotype([1, 1, 0, 0])
        a, b = crossover(x, y, CrossoverSpec(), make_rng(0), chi=2)
        assert a == Genotype([0, 0, 0, 0]) and b == Genotype([1, 1, 1, 1])

    def test_pc_zero_copies(self):
        rng = make_rng(1)
        x, y = Genotype([0, 1, 1, 0, 1]), Genotype([1, 0, 0, 1, 1])
        for _ in range(20):
            assert crossover(x, y, CrossoverSpec(pc=0.0), rng) == (x, y)

    def test_arity_one(self):
        out = crossover(Genotype([0, 0, 1, 1]), Genotype([1, 1, 0, 0]), CrossoverSpec(r=1), make_rng(0), chi=1)
        assert out == Genotype([0, 1, 0, 0])

    def test_rejects_short(self):
        with pytest.raises(InvalidInputError):
            crossover(Genotype([1]), Genotype([0]), CrossoverSpec(), make_rng(0))

    def test_rejects_bad_point(self):
        with pytest.raises(InvalidInputError):
            crossover(Genotype([1, 0, 1]), Genotype([0, 1, 0]), CrossoverSpec(), make_rng(0), chi=3)

    def test_chi_range_uniform(self):
        n = 6
        X = np.zeros((60_000, n), np.uint8)
        Y = np.ones_like(X)
        a, _ = crossover_batch(X, Y, CrossoverSpec(), make_rng(3))
        chi = n - a.sum(axis=1)
        counts = np.bincount(chi, minlength=n)
        assert counts[0] == 0 and counts[1:].min() > 0.18 * 60_000

    @given(st.data())
    def test_suffix_exchange(self, data):
        n = data.draw(st.integers(2, 40))
        x = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        y = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        pc = data.draw(st.sampled_from([0.0, 0.5, 1.0]))
        a, b = crossover(Genotype(x), Genotype(y), CrossoverSpec(pc=pc), make_rng(data.draw(st.integers(0, 999))))
        for i in range(n):
            assert sorted((a[i], b[i])) == sorted((x[i], y[i]))


class TestMutation:
    def test_pm_zero_identity(self):
        x = Genotype([1, 0, 1, 1, 0])
        assert mutate(x, MutationSpec("bitwise", 0.0), make_rng(0)) == x

    def test_pm_one_complement(self):
        assert mutate(Genotype([1, 0, 1]), MutationSpec("bitwise", 1.0), make_rng(0)) == Genotype([0, 1, 0])

    def test_point_mutation_distance_one(self):
        rng = make_rng(1)
        x = Genotype([0, 1, 0, 1])
        for _ in range(50):
            assert mutate(x, MutationSpec("point", 1.0), rng).hamming(x) == 1

    @pytest.mark.parametrize("n,pm", [(10, 0.1), (32, 1 / 32), (50, 0.3)])
    def test_flip_count_mean(self, n, pm):
        trials = 100_000
        X = np.zeros((trials, n), np.uint8)
        flips = mutate_batch(X, MutationSpec("bitwise", pm), make_rng(n)).sum(axis=1)
        se = math.sqrt(n * pm * (1 - pm) / trials)
        assert abs(flips.mean() - n * pm) <= 3 * se

    @pytest.mark.parametrize("kwargs", [{"kind": "gaussian", "pm": 0.1}, {"kind": "bitwise", "pm": 1.5}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            MutationSpec(**kwargs)

    def test_transition_examples(self):
        assert mutation_transition_prob(10, 0.1, 1) == pytest.approx(0.1 * 0.9 ** 9, rel=1e-13)
        assert mutation_transition_prob(7, 0.0, 0) == 1.0
        for d in range(3):
            assert mutation_transition_prob(2, 0.5, d) == pytest.approx(0.25, rel=1e-15)

    def test_transition_sums_to_one(self):
        n, pm = 12, 0.17
        total = sum(math.comb(n, d) * mutation_transition_prob(n, pm, d) for d in range(n + 1))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_neighbor_bound_examples(self):
        assert mutation_neighbor_lower_bound(10, 1) == pytest.approx(1 / (10 * math.e), rel=1e-14)
        assert mutation_neighbor_lower_bound(4, 2) == pytest.approx(1 / (4 * math.e ** 2), rel=1e-14)

    def test_neighbor_bound_rejects(self):
        with pytest.raises(InvalidInputError):
            mutation_neighbor_lower_bound(4, 3)

    @given(st.integers(2, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n // 2))),
           st.data())
    def test_neighbor_floor_holds(self, nk, data):
        n, K = nk
        d = data.draw(st.integers(0, K))
        assert mutation_transition_prob(n, K / n, d) >= mutation_neighbor_lower_bound(n, K)


class TestEpsilon:
    def test_single_point_copy_floor(self):
        est = estimate_crossover_epsilon(CrossoverSpec(pc=0.3), uniform_pair_sampler(12), 20_000,
                                         make_rng(0), fitness_key(LeadingOnes(12)))
        assert est.estimate >= 0.7 - est.radius

    def test_pass_through_exact(self):
        est = estimate_crossover_epsilon(CrossoverSpec("pass-through"), uniform_pair_sampler(12), 5_000,
                                         make_rng(0), fitness_key(LeadingOnes(12)))
        assert est.estimate == 1.0 and est.successes == 5_000

    @pytest.mark.parametrize("sampler", ["uniform", "stratified"])
    def test_leading_ones_half(self, sampler):
        problem = LeadingOnes(16)
        pairs = uniform_pair_sampler(16) if sampler == "uniform" else stratified_pair_sampler(problem)
        est = estimate_crossover_epsilon(CrossoverSpec(pc=1.0), pairs, 20_000, make_rng(1),
                                         fitness_key(problem))
        assert est.estimate >= 0.5 - est.radius

    def test_rejects_zero_trials(self):
        with pytest.raises(InvalidInputError):
            estimate_crossover_epsilon(CrossoverSpec(), uniform_pair_sampler(4), 0, make_rng(0),
                                       fitness_key(LeadingOnes(4)))


class TestAbsorbingMutation:
    def test_infeasible_stays(self):
        problem = BalasSCP(8, 4)
        sink = np.zeros(8, np.uint8)
        mut = absorbing_mutation(problem, MutationSpec("bitwise", 0.5), 0.5, sink)
        X = np.array([[1, 1, 0, 0, 0, 0, 0, 0]] * 100, np.uint8)
        assert np.array_equal(mut(X, make_rng(0)), X)

    def test_kill_rate(self):
        problem = BalasSCP(8, 4)
        sink = np.zeros(8, np.uint8)
        mut = absorbing_mutation(problem, MutationSpec("bitwise", 0.0), 0.3, sink)
        X = np.ones((50_000, 8), np.uint8)
        killed = (mut(X, make_rng(1)).sum(axis=1) == 0).mean()
        assert abs(killed - 0.3) < 3 * math.sqrt(0.21 / 50_000)

    def test_sink_must_be_infeasible(self):
        with pytest.raises(InvalidInputError):
            absorbing_mutation(BalasSCP(8, 4), MutationSpec("bitwise", 0.1), 0.5, np.ones(8, np.uint8))
