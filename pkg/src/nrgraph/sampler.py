"""Exact generation of rank-1 and rank-c Norros-Reittu graphs.

The fast generators Poissonize: a Poisson number of candidate endpoint
pairs is drawn with weight-proportional endpoints, so each unordered pair
receives an independent Poisson number of multi-edges with exactly the
model's rate. Collapsing multi-edges and dropping self-pairs then yields
the simple graph with edge probability ``1 - exp(-rate)``.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .models import Rank1Params, RankCParams, sample_affiliations

__all__ = [
    "AliasTable",
    "sample_rank1_naive",
    "sample_rank1_fast",
    "sample_rankc_naive",
    "sample_rankc_fast",
    "sample_prior_graph",
]


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a finite discrete law."""

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0 or np.any(weights < 0) or not weights.sum() > 0:
            raise ValueError("weights must be a non-empty vector of non-negative reals with positive sum")
        n = weights.size
        scaled = weights * (n / weights.sum())
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        scaled = scaled.tolist()
        while small and large:
            lo = small.pop()
            hi = large.pop()
            prob[lo] = scaled[lo]
            alias[lo] = hi
            scaled[hi] = scaled[hi] + scaled[lo] - 1.0
            if scaled[hi] < 1.0:
                small.append(hi)
            else:
                large.append(hi)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias

    def __len__(self):
        return len(self.prob)

    def sample(self, rng, size):
        idx = rng.integers(0, len(self.prob), size=size)
        keep = rng.random(size) < self.prob[idx]
        return np.where(keep, idx, self.alias[idx])


def _pairs_to_graph(n, heads, tails):
    return Graph.from_edges(n, np.column_stack([heads, tails]))


def sample_rank1_naive(params, rng):
    """O(n^2) reference: an independent Bernoulli draw for every pair."""
    w = params.w
    n = len(w)
    if n < 2:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    i, j = np.triu_indices(n, k=1)
    p = -np.expm1(-w[i] * w[j] / w.sum())
    hit = rng.random(len(p)) < p
    return Graph(n, np.column_stack([i[hit], j[hit]]))


def sample_rank1_fast(params, rng):
    """Poissonized generator with expected cost O(n + |E|)."""
    w = params.w
    n = len(w)
    if n < 2:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    s = w.sum()
    m = rng.poisson(s / 2.0)
    table = AliasTable(w)
    return _pairs_to_graph(n, table.sample(rng, m), table.sample(rng, m))


def sample_rankc_naive(params, rng):
    n = params.n
    if n < 2:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    i, j = np.triu_indices(n, k=1)
    w, V = params.w, params.V
    rate = w[i] * w[j] / params.s * ((V[i] * V[j]) @ (n / params.r))
    hit = rng.random(len(rate)) < -np.expm1(-rate)
    return Graph(n, np.column_stack([i[hit], j[hit]]))


def sample_rankc_fast(params, rng):
    """Poissonized rank-c generator: one candidate batch per community, unioned."""
    n = params.n
    if n < 2:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    s = params.s
    r = params.r
    heads, tails = [], []
    for q in range(params.c):
        u = params.w * params.V[:, q]
        total = u.sum()
        if total <= 0:
            continue
        m = rng.poisson(total * total * n / (2.0 * s * r[q]))
        table = AliasTable(u)
        heads.append(table.sample(rng, m))
        tails.append(table.sample(rng, m))
    return _pairs_to_graph(n, np.concatenate(heads), np.concatenate(tails))


def sample_prior_graph(n, prior, rng, gamma=None):
    """Draw latent weights (and affiliations if ``gamma`` is given), then a graph.

    Returns ``(graph, latents)`` where ``latents`` holds ``w`` and, for the
    rank-c model, ``V``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    w = np.asarray(prior.sample(rng, size=n), dtype=float).reshape(n)
    if gamma is None:
        g = sample_rank1_fast(Rank1Params(w), rng) if n else Graph(0, np.empty((0, 2)))
        return g, {"w": w}
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    V = sample_affiliations(gamma, n, rng)
    if n == 0:
        return Graph(0, np.empty((0, 2))), {"w": w, "V": V}
    return sample_rankc_fast(RankCParams(w, V, gamma), rng), {"w": w, "V": V}
