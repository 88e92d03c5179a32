"""Benchmark problems and the Balas cover oracle."""

from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonelitist_ga.core import Genotype, InvalidInputError, make_rng
from nonelitist_ga.levels import all_genotypes
from nonelitist_ga.problems import (BalasSCP, LeadingOnes, OneMax, balas_constraint_sets,
                                    balas_is_cover, balas_is_cover_bruteforce, balas_objective,
                                    leading_ones, make_problem, one_max)


def cover_of_size(n, size):
    return Genotype([1] * size + [0] * (n - size))


@pytest.mark.parametrize("bits,expected", [((1, 1, 0, 1), 2), ((0, 1, 1, 1), 0), ((1, 1, 1), 3)])
def test_leading_ones(bits, expected):
    assert leading_ones(Genotype(bits)) == expected


@pytest.mark.parametrize("bits,expected", [((0, 0, 0), 0), ((1, 0, 1, 1), 3), ((1,) * 5, 5)])
def test_one_max(bits, expected):
    assert one_max(Genotype(bits)) == expected


class TestLeadingOnes:
    def test_optimum(self):
        p = LeadingOnes(3)
        assert p.optimum == 3 and p.objective(Genotype.ones(3)) == 3

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.data())
    def test_zeroing_a_leading_one_never_increases(self, bits, data):
        x = Genotype(bits)
        lo = leading_ones(x)
        if lo == 0:
            return
        i = data.draw(st.integers(0, lo - 1))
        y = Genotype([0 if j == i else b for j, b in enumerate(bits)])
        assert leading_ones(y) <= lo
        assert leading_ones(y) == i

    def test_batch_matches_scalar(self):
        X = all_genotypes(8)
        batch = LeadingOnes(8).objective_batch(X)
        assert batch.tolist() == [leading_ones(Genotype(row)) for row in X]

    @pytest.mark.parametrize("value", range(0, 7))
    def test_sample_with_objective(self, value):
        p = LeadingOnes(6)
        rng = make_rng(value)
        for _ in range(20):
            assert p.objective(p.sample_with_objective(value, rng)) == value

    def test_rejects_zero_dimension(self):
        with pytest.raises(InvalidInputError):
            LeadingOnes(0)


class TestBalas:
    def test_cover_examples(self):
        inst = BalasSCP(6, 3)
        assert balas_is_cover(inst, cover_of_size(6, 3))
        assert not balas_is_cover(inst, cover_of_size(6, 2))
        assert balas_is_cover(inst, Genotype.ones(6))

    def test_objective_examples(self):
        inst = BalasSCP(6, 3)
        assert balas_objective(inst, cover_of_size(6, 3)) == 4 == inst.optimum
        assert balas_objective(inst, cover_of_size(6, 6)) == 1
        assert balas_objective(inst, cover_of_size(6, 1)) == 0

    def test_constraint_sets_oracle(self):
        sets = balas_constraint_sets(6, 3)
        assert len(sets) == comb(6, 2) == BalasSCP(6, 3).num_elements
        assert all(len(s) == 4 for s in sets)
        # the 4-subset avoiding J = {0, 1} witnesses that J is not a cover
        assert frozenset({2, 3, 4, 5}) in sets

    @pytest.mark.parametrize("n,p", [(4, 2), (5, 1), (5, 5), (6, 3), (7, 4)])
    def test_closed_form_equals_bruteforce(self, n, p):
        inst = BalasSCP(n, p)
        X = all_genotypes(n)
        closed = inst.feasible_batch(X)
        brute = np.array([balas_is_cover_bruteforce(n, p, row) for row in X])
        assert np.array_equal(closed, brute)

    @pytest.mark.parametrize("n", [8, 12, 16, 20])
    def test_initial_feasibility_rate(self, n):
        inst = BalasSCP(n, n // 2)
        trials = 100_000
        X = make_rng(n).integers(0, 2, size=(trials, n), dtype=np.uint8)
        rate = inst.feasible_batch(X).mean()
        se = np.sqrt(rate * (1 - rate) / trials)
        assert rate >= 0.5 - 3 * se
        assert inst.feasible_probability() >= 0.5
        assert abs(rate - inst.feasible_probability()) <= 4 * se

    def test_objective_values(self):
        assert BalasSCP(8, 4).objective_values().tolist() == [1, 2, 3, 4, 5]

    def test_sample_with_objective(self):
        inst = BalasSCP(10, 5)
        rng = make_rng(2)
        for v in inst.objective_values():
            x = inst.sample_with_objective(v, rng)
            assert inst.is_feasible(x) and inst.objective(x) == v

    @pytest.mark.parametrize("n,p", [(0, 0), (4, 0), (4, 5)])
    def test_invalid_instances(self, n, p):
        with pytest.raises(InvalidInputError):
            BalasSCP(n, p)

    def test_describe_reports_p(self):
        assert BalasSCP(8, 4).describe()["p"] == 4


class TestMakeProblem:
    @pytest.mark.parametrize("name,cls", [("leadingones", LeadingOnes), ("LO", LeadingOnes),
                                          ("onemax", OneMax), ("balas", BalasSCP)])
    def test_names(self, name, cls):
        assert isinstance(make_problem(name, 8), cls)

    def test_balas_default_p(self):
        assert make_problem("balas", 10).p == 5

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            make_problem("knapsack", 5)
