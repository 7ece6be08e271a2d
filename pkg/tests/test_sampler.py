import math

import numpy as np
import pytest
from scipy import stats

from nrgraph.graph import degree_histogram
from nrgraph.models import GIG, InverseGamma, RankCParams, Rank1Params, degree_pmf
from nrgraph.sampler import (
    AliasTable,
    sample_prior_graph,
    sample_rank1_fast,
    sample_rank1_naive,
    sample_rankc_fast,
    sample_rankc_naive,
)


def test_alias_table_frequencies():
    w = np.array([0.1, 0.0, 3.0, 1.2, 0.7])
    rng = np.random.default_rng(0)
    draws = AliasTable(w).sample(rng, 500_000)
    freq = np.bincount(draws, minlength=len(w)) / len(draws)
    p = w / w.sum()
    assert freq[1] == 0
    assert np.all(np.abs(freq - p) < 5 * np.sqrt(p * (1 - p) / len(draws)) + 1e-12)
    with pytest.raises(ValueError):
        AliasTable([0.0, 0.0])


@pytest.mark.parametrize("sampler", [sample_rank1_naive, sample_rank1_fast])
def test_single_node_has_no_edges(sampler):
    assert sampler(Rank1Params(np.array([5.0])), np.random.default_rng(0)).n_edges == 0


@pytest.mark.parametrize("sampler", [sample_rank1_naive, sample_rank1_fast])
def test_two_equal_weights(sampler):
    w = 1.3
    rng = np.random.default_rng(1)
    reps = 20_000
    hits = sum(sampler(Rank1Params(np.array([w, w])), rng).n_edges for _ in range(reps))
    p = 1 - math.exp(-w / 2)
    assert abs(hits / reps - p) < 4 * math.sqrt(p * (1 - p) / reps)


def test_naive_mean_edge_count():
    rng = np.random.default_rng(2)
    w = InverseGamma(1.5, 3.0).sample(rng, size=100)
    i, j = np.triu_indices(100, k=1)
    p = -np.expm1(-w[i] * w[j] / w.sum())
    counts = np.array([sample_rank1_naive(Rank1Params(w), rng).n_edges for _ in range(1000)])
    sd = math.sqrt(np.sum(p * (1 - p)))
    assert abs(counts.mean() - p.sum()) < 4 * sd / math.sqrt(len(counts))


def test_rankc_disjoint_communities_have_no_cross_edges():
    n = 40
    V = np.zeros((n, 2))
    V[: n // 2, 0] = 1.0
    V[n // 2:, 1] = 1.0
    params = RankCParams(np.full(n, 4.0), V, np.ones(2))
    rng = np.random.default_rng(3)
    for sampler in (sample_rankc_fast, sample_rankc_naive):
        for _ in range(20):
            g = sampler(params, rng)
            assert g.n_edges > 0
            assert np.all((g.edges[:, 0] < n // 2) == (g.edges[:, 1] < n // 2))


def test_rankc_one_community_matches_rank1():
    rng = np.random.default_rng(4)
    w = InverseGamma(2.0, 4.0).sample(rng, size=15)
    params = RankCParams(w, np.ones((15, 1)), np.ones(1))
    reps = 20_000
    a = np.zeros((15, 15))
    b = np.zeros((15, 15))
    for _ in range(reps):
        ga = sample_rankc_fast(params, rng)
        gb = sample_rank1_fast(Rank1Params(w), rng)
        a[ga.edges[:, 0], ga.edges[:, 1]] += 1
        b[gb.edges[:, 0], gb.edges[:, 1]] += 1
    i, j = np.triu_indices(15, k=1)
    p = -np.expm1(-w[i] * w[j] / w.sum())
    band = 4 * np.sqrt(2 * p * (1 - p) / reps) + 1e-12
    assert np.all(np.abs(a[i, j] - b[i, j]) / reps < band)


def test_prior_graph_shapes_and_empty():
    rng = np.random.default_rng(5)
    g, lat = sample_prior_graph(0, InverseGamma(1.5, 3.0), rng)
    assert g.n == 0 and g.n_edges == 0 and lat["w"].shape == (0,)
    g, lat = sample_prior_graph(50, GIG(-0.5, 0.1, 3.0), rng, gamma=[0.5, 0.5, 0.5])
    assert g.n == 50 and lat["V"].shape == (50, 3)
    assert np.allclose(lat["V"].sum(axis=1), 1.0)


def test_prior_graph_deterministic():
    a, la = sample_prior_graph(2000, InverseGamma(1.5, 3.0), np.random.default_rng(6), gamma=[1.0, 1.0])
    b, lb = sample_prior_graph(2000, InverseGamma(1.5, 3.0), np.random.default_rng(6), gamma=[1.0, 1.0])
    assert a == b and np.array_equal(la["w"], lb["w"]) and np.array_equal(la["V"], lb["V"])


def test_sparsity_trend_ig():
    # finite-n bias shrinks as n grows; |E|/n approaches the limit from below
    prior = InverseGamma(1.5, 3.0)
    rng = np.random.default_rng(7)
    means = []
    for n in (1000, 10_000, 100_000):
        reps = 5 if n == 100_000 else 20
        means.append(np.mean([sample_prior_graph(n, prior, rng)[0].n_edges / n for _ in range(reps)]))
    assert means[0] < means[1] < means[2] < 3.0
    assert abs(means[2] - 3.0) / 3.0 < 0.05


def test_degree_bands_gig_rank1():
    # at n = 10^4 the empirical N_k / n sits inside 4-sigma multinomial bands
    prior = GIG(-0.5, 0.1, 3.0)
    n = 10_000
    g, _ = sample_prior_graph(n, prior, np.random.default_rng(8))
    hist = degree_histogram(g)
    ks = [k for k in range(200) if n * degree_pmf(prior, k) >= 25]
    for k in ks:
        p = degree_pmf(prior, k)
        assert abs(hist.get(k, 0) - n * p) < 4 * math.sqrt(n * p * (1 - p))


def test_rankc_dirichlet_sparsity_matches_rank1():
    prior = InverseGamma(2.5, 3.0)
    rng = np.random.default_rng(9)
    n = 20_000
    r1 = [sample_prior_graph(n, prior, rng)[0].n_edges / n for _ in range(5)]
    rc = [sample_prior_graph(n, prior, rng, gamma=[0.3, 0.3, 0.3])[0].n_edges / n for _ in range(5)]
    # both near beta / (2 (alpha - 1)) = 1
    assert abs(np.mean(r1) - np.mean(rc)) < 0.03
    assert stats.ttest_ind(r1, rc).pvalue > 0.001
