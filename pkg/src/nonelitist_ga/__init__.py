"""Non-elitist genetic algorithms with level-based hitting-time bounds."""

from .core import (Evaluator, FitnessMapping, Genotype, InvalidInputError, Population, Problem,
                   derive_seed, evaluate, hamming_distance, make_rng, random_genotype)
from .engine import GaConfig, RunRecord, best_of_run, run_ga, run_multistart
from .levels import (ConditionReport, LevelPartition, build_condition_report, canonical_partition,
                     check_monotonicity, estimate_s_star, lambda_lower_bound,
                     local_optima_partition)
from .localsearch import NeighborhoodSpec, is_local_optimum, local_search, neighbors
from .operators import (CrossoverSpec, MutationSpec, SelectionSpec, beta0_mu_lambda,
                        beta0_proportional, beta0_tournament, crossover, mutate,
                        mutation_neighbor_lower_bound, mutation_transition_prob, nu_threshold,
                        select, selective_pressure_exact)
from .problems import BalasSCP, LeadingOnes, OneMax, make_problem

__version__ = "0.1.0"
