"""Posterior-predictive degree checks, credible intervals and clustering accuracy."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, degree_histogram
from .models import GIG, InverseGamma, degree_pmf
from .sampler import sample_prior_graph

__all__ = [
    "DegreeCdf",
    "GofReport",
    "reweighted_ks",
    "posterior_predictive_degrees",
    "goodness_of_fit",
    "credible_interval",
    "clustering_accuracy",
    "ccdf_bands",
    "degree_table",
    "prior_from_record",
]


@dataclass(frozen=True)
class DegreeCdf:
    """Empirical degree CDF on its support (isolated nodes excluded by default)."""

    support: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        cdf = np.asarray(self.cdf, dtype=float)
        if support.size == 0:
            raise ValueError("empty degree CDF")
        if np.any(np.diff(support) <= 0) or np.any(np.diff(cdf) < 0) or not math.isclose(cdf[-1], 1.0):
            raise ValueError("support must be increasing and the CDF nondecreasing, ending at 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cdf", cdf)

    @classmethod
    def from_degrees(cls, degrees, drop_zero=True):
        degrees = np.asarray(degrees, dtype=np.int64)
        if drop_zero:
            degrees = degrees[degrees > 0]
        if degrees.size == 0:
            raise ValueError("no degrees to build a CDF from")
        support, counts = np.unique(degrees, return_counts=True)
        return cls(support, np.cumsum(counts) / counts.sum())

    @classmethod
    def from_histogram(cls, hist, drop_zero=True):
        ks = np.array(sorted(k for k, c in hist.items() if c > 0 and (k > 0 or not drop_zero)), dtype=np.int64)
        if ks.size == 0:
            raise ValueError("no degrees to build a CDF from")
        counts = np.array([hist[k] for k in ks], dtype=float)
        return cls(ks, np.cumsum(counts) / counts.sum())

    def __call__(self, x):
        """Right-continuous step CDF at ``x``."""
        idx = np.searchsorted(self.support, np.asarray(x), side="right")
        return np.where(idx > 0, self.cdf[np.maximum(idx - 1, 0)], 0.0)


def reweighted_ks(observed, predicted):
    """Variance-weighted KS distance ``max |S - P| / sqrt(P (1 - P))``.

    ``observed`` gives S and ``predicted`` gives P; the weight uses P only,
    so the statistic is not symmetric. The max runs over integers from the
    smallest degree in either support up to the largest, skipping points
    where P is 0 or 1.
    """
    x_min = int(min(observed.support[0], predicted.support[0]))
    x_max = int(max(observed.support[-1], predicted.support[-1]))
    x = np.arange(x_min, x_max + 1)
    S = observed(x)
    P = predicted(x)
    ok = (P > 0) & (P < 1)
    if not np.any(ok):
        raise ValueError("no degree with 0 < P(x) < 1; the statistic is undefined")
    return float(np.max(np.abs(S[ok] - P[ok]) / np.sqrt(P[ok] * (1.0 - P[ok]))))


@dataclass
class GofReport:
    d_values: list
    mean: float
    std: float
    x_min: int

    def to_dict(self):
        return {"D_mean": self.mean, "D_std": self.std, "x_min": self.x_min, "D": list(self.d_values)}


def prior_from_record(record):
    """Weight prior from a sample record with either (alpha, beta) or (nu, a, b)."""
    if isinstance(record, (InverseGamma, GIG)):
        return record
    if "alpha" in record:
        return InverseGamma(record["alpha"], record["beta"])
    return GIG(record["nu"], record["a"], record["b"])


def posterior_predictive_degrees(samples, n, rng):
    """One fresh graph of size ``n`` per posterior sample; returns degree histograms.

    Each sample is a prior object or a record dict of hyperparameters; a
    ``gamma`` entry switches to the rank-c generator with Dirichlet
    affiliations.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one posterior sample")
    out = []
    for rec in samples:
        gamma = rec.get("gamma") if isinstance(rec, dict) else None
        g, _ = sample_prior_graph(n, prior_from_record(rec), rng, gamma=gamma)
        out.append(degree_histogram(g))
    return out


def goodness_of_fit(observed, predictive_histograms):
    """Reweighted KS of the observed degrees against each predictive graph."""
    if isinstance(observed, Graph):
        observed = DegreeCdf.from_degrees(observed.degrees())
    elif isinstance(observed, dict):
        observed = DegreeCdf.from_histogram(observed)
    d_values, x_mins = [], []
    for hist in predictive_histograms:
        pred = DegreeCdf.from_histogram(hist)
        d_values.append(reweighted_ks(observed, pred))
        x_mins.append(int(min(observed.support[0], pred.support[0])))
    d = np.asarray(d_values)
    return GofReport(d_values=d.tolist(), mean=float(d.mean()),
                     std=float(d.std(ddof=1)) if d.size > 1 else 0.0, x_min=min(x_mins))


def credible_interval(samples, level=0.95):
    """Equal-tailed interval from linearly interpolated empirical quantiles."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise ValueError("need at least two samples")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(samples, [tail, 1.0 - tail])
    return float(lo), float(hi)


def clustering_accuracy(pred_labels, true_labels, c):
    """Best percentage agreement over all relabelings of the predictions."""
    pred = np.asarray(pred_labels, dtype=np.int64)
    true = np.asarray(true_labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise ValueError("label vectors must have equal length")
    if c > 10:
        raise ValueError("c > 10: brute-force relabeling would need c! permutations")
    if pred.size == 0:
        raise ValueError("no labels")
    if pred.min() < 0 or pred.max() >= c or true.min() < 0 or true.max() >= c:
        raise ValueError("labels must lie in 0..c-1")
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (pred, true), 1)
    best = max(confusion[np.arange(c), list(perm)].sum() for perm in itertools.permutations(range(c)))
    return 100.0 * best / pred.size


def _ccdf(hist, ks):
    total = sum(hist.values())
    counts = np.zeros(int(ks[-1]) + 2)
    for k, c in hist.items():
        counts[min(k, len(counts) - 1)] += c
    tail = np.cumsum(counts[::-1])[::-1]
    return tail[ks] / total


def ccdf_bands(predictive_histograms, max_degree, quantiles=(0.025, 0.5, 0.975)):
    """Pointwise quantiles of predictive CCDFs ``P(K >= k)`` for ``k = 1..max_degree``."""
    ks = np.arange(1, max_degree + 1)
    curves = np.array([_ccdf(h, ks) for h in predictive_histograms])
    return ks, np.quantile(curves, quantiles, axis=0)


def degree_table(g, prior=None):
    """Rows ``(degree, empirical_ccdf, theoretical_pmf)`` for degrees 0..max."""
    hist = degree_histogram(g)
    max_k = max(hist) if hist else 0
    ks = np.arange(0, max_k + 1)
    ccdf = _ccdf(hist, ks) if hist else np.zeros(len(ks))
    pmf = degree_pmf(prior, ks) if prior is not None else np.full(len(ks), np.nan)
    return [(int(k), float(c), float(p)) for k, c, p in zip(ks, ccdf, pmf)]
