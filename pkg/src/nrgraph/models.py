"""Norros-Reittu rank-1 and rank-c models: priors, link rates and degree laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .stats_kernel import (
    AsymptoticForm,
    log_bessel_k,
    log_gamma,
    sample_dirichlet,
    sample_gig,
    sample_inverse_gamma,
)

__all__ = [
    "InverseGamma",
    "GIG",
    "WeightPrior",
    "Rank1Params",
    "RankCParams",
    "DegreeLaw",
    "make_prior",
    "link_probability_rank1",
    "link_rate_rankc",
    "expected_edges_per_node",
    "degree_pmf",
    "degree_pmf_asymptotic",
    "degree_pmf_rankc",
    "degree_law",
]


@dataclass(frozen=True)
class InverseGamma:
    """Inverse gamma weight prior with density ``beta^alpha / Gamma(alpha) w^(-alpha-1) e^(-beta/w)``."""

    alpha: float
    beta: float

    kind = "ig"
    param_names = ("alpha", "beta")

    def __post_init__(self):
        if not (self.alpha > 1 and self.beta > 0):
            raise ValueError("InverseGamma needs alpha > 1 (finite mean) and beta > 0")

    def mean(self):
        return self.beta / (self.alpha - 1.0)

    def logpdf(self, w):
        w = np.asarray(w, dtype=float)
        return (self.alpha * math.log(self.beta) - log_gamma(self.alpha)
                - (self.alpha + 1.0) * np.log(w) - self.beta / w)

    def dlogpdf(self, w):
        """Derivative of ``logpdf`` with respect to ``w``."""
        return -(self.alpha + 1.0) / w + self.beta / (w * w)

    def sample(self, rng, size=None):
        return sample_inverse_gamma(self.alpha, self.beta, rng, size=size)

    def scaled(self, u):
        """Law of ``u * w`` for a constant ``u > 0``."""
        return InverseGamma(self.alpha, self.beta * u)

    # unconstrained coordinates: alpha = 1 + exp(a_hat), beta = exp(b_hat)
    def to_unconstrained(self):
        return np.array([math.log(self.alpha - 1.0), math.log(self.beta)])

    @classmethod
    def from_unconstrained(cls, theta):
        return cls(1.0 + math.exp(theta[0]), math.exp(theta[1]))

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class GIG:
    """Generalized inverse Gaussian prior, density ``∝ w^(nu-1) exp(-(a w + b / w) / 2)``."""

    nu: float
    a: float
    b: float

    kind = "gig"
    param_names = ("nu", "a", "b")

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("GIG needs a > 0 and b > 0")

    def _log_norm(self):
        return (0.5 * self.nu * math.log(self.a / self.b) - math.log(2.0)
                - log_bessel_k(self.nu, math.sqrt(self.a * self.b)))

    def mean(self):
        omega = math.sqrt(self.a * self.b)
        return math.sqrt(self.b / self.a) * math.exp(
            log_bessel_k(self.nu + 1.0, omega) - log_bessel_k(self.nu, omega))

    def logpdf(self, w):
        w = np.asarray(w, dtype=float)
        return self._log_norm() + (self.nu - 1.0) * np.log(w) - 0.5 * (self.a * w + self.b / w)

    def dlogpdf(self, w):
        return (self.nu - 1.0) / w - 0.5 * self.a + 0.5 * self.b / (w * w)

    def sample(self, rng, size=None):
        return sample_gig(self.nu, self.a, self.b, rng, size=size)

    def scaled(self, u):
        return GIG(self.nu, self.a / u, self.b * u)

    # unconstrained coordinates: nu = -exp(nu_hat), a = exp(a_hat), b = exp(b_hat)
    def to_unconstrained(self):
        if not self.nu < 0:
            raise ValueError("the unconstrained GIG parameterization requires nu < 0")
        return np.array([math.log(-self.nu), math.log(self.a), math.log(self.b)])

    @classmethod
    def from_unconstrained(cls, theta):
        return cls(-math.exp(theta[0]), math.exp(theta[1]), math.exp(theta[2]))

    def as_dict(self):
        return {"nu": self.nu, "a": self.a, "b": self.b}


WeightPrior = Union[InverseGamma, GIG]

PRIORS = {"ig": InverseGamma, "gig": GIG}


def make_prior(kind, **params):
    try:
        cls = PRIORS[kind]
    except KeyError:
        raise ValueError(f"unknown prior kind {kind!r}; expected one of {sorted(PRIORS)}") from None
    return cls(**params)


@dataclass(frozen=True)
class Rank1Params:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or np.any(~(w > 0)):
            raise ValueError("weights must be a 1-d vector of positive reals")
        object.__setattr__(self, "w", w)

    @property
    def n(self):
        return len(self.w)

    @property
    def s(self):
        return float(self.w.sum())


@dataclass(frozen=True)
class RankCParams:
    """Sociabilities ``w`` (n,), affiliations ``V`` (n, c) with simplex rows, Dirichlet ``gamma`` (c,)."""

    w: np.ndarray
    V: np.ndarray
    gamma: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if w.ndim != 1 or np.any(~(w > 0)):
            raise ValueError("weights must be a 1-d vector of positive reals")
        if V.shape[0] != len(w):
            raise ValueError("V must have one row per node")
        if np.any(V < 0) or np.any(np.abs(V.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("rows of V must lie on the simplex")
        if len(w) and np.any(~(V.sum(axis=0) > 0)):
            raise ValueError("every community needs positive total affiliation")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "V", V)
        if self.gamma is not None:
            object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))

    @property
    def n(self):
        return len(self.w)

    @property
    def c(self):
        return self.V.shape[1]

    @property
    def s(self):
        return float(self.w.sum())

    @property
    def r(self):
        return self.V.sum(axis=0)


@dataclass(frozen=True)
class DegreeLaw:
    pmf: Callable
    asymptotic: AsymptoticForm


def link_probability_rank1(w_i, w_j, s):
    """Edge probability ``1 - exp(-w_i w_j / s)``."""
    return -np.expm1(-np.asarray(w_i) * np.asarray(w_j) / s)


def link_rate_rankc(i, j, params):
    """Poisson rate ``lambda_ij``; the edge probability is ``1 - exp(-lambda_ij)``."""
    w, V = params.w, params.V
    return float(w[i] * w[j] / params.s * np.sum(V[i] * V[j] * params.n / params.r))


def expected_edges_per_node(prior):
    """Limit of ``|E_n| / n``, which is half the prior mean."""
    return 0.5 * prior.mean()


def _log_pmf(prior, k):
    k = np.asarray(k, dtype=float)
    log_kfact = log_gamma(k + 1.0)
    if isinstance(prior, InverseGamma):
        al, be = prior.alpha, prior.beta
        return (math.log(2.0) + 0.5 * (k + al) * math.log(be) - log_kfact - log_gamma(al)
                + log_bessel_k(k - al, 2.0 * math.sqrt(be)))
    if isinstance(prior, GIG):
        nu, a, b = prior.nu, prior.a, prior.b
        return (0.5 * nu * math.log(a / b) - log_kfact - 0.5 * (k + nu) * math.log((a + 2.0) / b)
                + log_bessel_k(k + nu, math.sqrt((a + 2.0) * b))
                - log_bessel_k(nu, math.sqrt(a * b)))
    raise TypeError(f"unsupported prior {prior!r}")


def degree_pmf(prior, k, log=False):
    """Limiting degree pmf, the Poisson mixture over the weight prior.

    Inverse gamma gives a Poisson-inverse-gamma law, GIG gives the Sichel
    law. ``k`` may be an integer or an array; evaluation is in log space.
    """
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise ValueError("k must be non-negative")
    out = _log_pmf(prior, k_arr)
    if not log:
        out = np.exp(out)
    return float(out) if np.ndim(out) == 0 else out


def degree_pmf_asymptotic(prior):
    """Tail form of the degree pmf as ``k -> infinity``."""
    if isinstance(prior, InverseGamma):
        al, be = prior.alpha, prior.beta
        return AsymptoticForm(al * math.log(be) - log_gamma(al), -al - 1.0, 0.0)
    if isinstance(prior, GIG):
        nu, a, b = prior.nu, prior.a, prior.b
        log_coef = (0.5 * nu * math.log(a / b) - math.log(2.0) - nu * math.log1p(a / 2.0)
                    - log_bessel_k(nu, math.sqrt(a * b)))
        return AsymptoticForm(log_coef, nu - 1.0, math.log1p(a / 2.0))
    raise TypeError(f"unsupported prior {prior!r}")


def degree_law(prior):
    return DegreeLaw(pmf=lambda k: degree_pmf(prior, k), asymptotic=degree_pmf_asymptotic(prior))


def degree_pmf_rankc(prior, affiliation_sum_dist=None, k=0):
    """Limiting degree pmf of the rank-c model.

    The degree is Poisson with rate ``U * w`` where ``U`` is the row sum of
    a node's affiliations. ``affiliation_sum_dist`` describes the law of
    ``U``: ``None`` for simplex rows (``U = 1``, e.g. Dirichlet), a number
    for a point mass, or a ``(values, probabilities)`` pair for a discrete
    law. ``E(U^(eta - 1 + eps)) < inf`` is assumed, not checked.
    """
    if affiliation_sum_dist is None:
        return degree_pmf(prior, k)
    if np.isscalar(affiliation_sum_dist):
        values, probs = np.array([affiliation_sum_dist], dtype=float), np.array([1.0])
    else:
        values, probs = (np.asarray(x, dtype=float) for x in affiliation_sum_dist)
    if np.any(values <= 0) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("affiliation_sum_dist must be a probability law on (0, inf)")
    total = sum(p * np.asarray(degree_pmf(prior.scaled(u), k)) for u, p in zip(values, probs) if p > 0)
    return float(total) if np.ndim(total) == 0 else total


def sample_affiliations(gamma, n, rng):
    """``n`` i.i.d. Dirichlet(gamma) rows."""
    return sample_dirichlet(gamma, rng, size=n).reshape(n, len(np.atleast_1d(gamma)))
