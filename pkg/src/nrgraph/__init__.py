"""Bayesian Norros-Reittu random graphs: generation, degree laws and MCMC inference."""

__version__ = "0.1.0"

from .diagnostics import (DegreeCdf, GofReport, clustering_accuracy, credible_interval, goodness_of_fit,
                          posterior_predictive_degrees, reweighted_ks)
from .estimators import Rank1NR, RankCNR
from .graph import EdgeListError, Graph, degree_histogram, read_edge_list, write_edge_list
from .mcmc_rank1 import ChainError, Schedule, run_chain_rank1
from .mcmc_rankc import RankCConfig, run_chain_rankc
from .models import GIG, InverseGamma, degree_pmf, degree_pmf_asymptotic, expected_edges_per_node, make_prior
from .sampler import sample_prior_graph, sample_rank1_fast, sample_rankc_fast

__all__ = [
    "DegreeCdf", "GofReport", "clustering_accuracy", "credible_interval", "goodness_of_fit",
    "posterior_predictive_degrees", "reweighted_ks", "Rank1NR", "RankCNR", "EdgeListError", "Graph",
    "degree_histogram", "read_edge_list", "write_edge_list", "ChainError", "Schedule", "run_chain_rank1",
    "RankCConfig", "run_chain_rankc", "GIG", "InverseGamma", "degree_pmf", "degree_pmf_asymptotic",
    "expected_edges_per_node", "make_prior", "sample_prior_graph", "sample_rank1_fast", "sample_rankc_fast",
]
