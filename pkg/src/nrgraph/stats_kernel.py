"""Special functions and random variate generators.

Everything here works on numpy arrays where it makes sense and takes an
explicit ``numpy.random.Generator`` for randomness; nothing reads global
random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

__all__ = [
    "AsymptoticForm",
    "log_gamma",
    "log_bessel_k",
    "sample_inverse_gamma",
    "sample_gig",
    "sample_dirichlet",
    "sample_truncated_poisson",
    "sample_multivariate_truncated_poisson",
]

# below this rate P(m >= 2 | m >= 1) <= lam / 2 is negligible
_TINY_RATE = 1e-8
# orders at or above this use the uniform asymptotic expansion
_DEBYE_ORDER = 50.0


@dataclass(frozen=True)
class AsymptoticForm:
    """Tail form ``exp(log_coefficient) * k**power_index * exp(-exp_rate * k)``."""

    log_coefficient: float
    power_index: float
    exp_rate: float = 0.0

    def __post_init__(self):
        if not self.exp_rate >= 0:
            raise ValueError(f"exp_rate must be >= 0, got {self.exp_rate}")

    def log_evaluate(self, k):
        k = np.asarray(k, dtype=float)
        return self.log_coefficient + self.power_index * np.log(k) - self.exp_rate * k

    def evaluate(self, k):
        return np.exp(self.log_evaluate(k))


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("log_gamma is only defined here for x > 0")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind, in log space
# ---------------------------------------------------------------------------

def _debye_log_k(nu, x):
    # K_nu(nu z) ~ sqrt(pi / (2 nu)) exp(-nu eta) (1 + z^2)^(-1/4) sum (-1)^k u_k(p) / nu^k
    z = x / nu
    root = np.sqrt(1.0 + z * z)
    p = 1.0 / root
    eta = root + np.log(z) - np.log1p(root)
    p2 = p * p
    u1 = p * (3.0 - 5.0 * p2) / 24.0
    u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0
    u3 = p * p2 * (30375.0 + p2 * (-369603.0 + p2 * (765765.0 - 425425.0 * p2))) / 414720.0
    u4 = p2 * p2 * (
        4465125.0 + p2 * (-94121676.0 + p2 * (349922430.0 + p2 * (-446185740.0 + 185910725.0 * p2)))
    ) / 39813120.0
    inv = 1.0 / nu
    series = 1.0 - inv * (u1 - inv * (u2 - inv * (u3 - inv * u4)))
    return (0.5 * np.log(np.pi / (2.0 * nu)) - nu * eta - 0.5 * np.log(root)
            + np.log(series))


def _quad_log_k(nu, x):
    # log of int_0^inf exp(-x cosh t) cosh(nu t) dt, shifted by its peak value
    nu = abs(float(nu))
    x = float(x)

    def log_integrand(t):
        return -x * math.cosh(t) + nu * t + math.log1p(math.exp(-2.0 * nu * t)) - math.log(2.0)

    t_peak = math.asinh(nu / x)
    peak = log_integrand(t_peak)
    width = 1.0 / math.sqrt(math.sqrt(x * x + nu * nu))
    upper = t_peak + 60.0 * width + 5.0
    val, _ = integrate.quad(lambda t: math.exp(log_integrand(t) - peak), 0.0, upper,
                            points=[t_peak] if 0.0 < t_peak < upper else None,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return peak + math.log(val)


def log_bessel_k(nu, x):
    """``log K_nu(x)`` for ``x > 0``, robust to orders where ``K`` overflows.

    Broadcasts over array arguments. Uses the exponentially scaled
    scipy routine for moderate orders, the uniform asymptotic expansion for
    ``|nu| >= 50`` and log-space quadrature of the integral representation
    when neither applies.
    """
    scalar = np.ndim(nu) == 0 and np.ndim(x) == 0
    nu_arr, x_arr = np.broadcast_arrays(np.atleast_1d(np.asarray(nu, dtype=float)),
                                        np.atleast_1d(np.asarray(x, dtype=float)))
    if np.any(~(x_arr > 0)):
        raise ValueError("log_bessel_k requires x > 0")
    nu_abs = np.abs(nu_arr)
    out = np.empty(nu_arr.shape, dtype=float)

    big = nu_abs >= _DEBYE_ORDER
    if np.any(big):
        out[big] = _debye_log_k(nu_abs[big], x_arr[big])
    small = ~big
    if np.any(small):
        with np.errstate(over="ignore", under="ignore"):
            scaled = special.kve(nu_abs[small], x_arr[small])
        with np.errstate(divide="ignore"):
            out[small] = np.log(scaled) - x_arr[small]
        bad = np.zeros_like(big)
        bad[small] = ~np.isfinite(scaled) | (scaled < 1e-300)
        for idx in zip(*np.nonzero(bad)):
            out[idx] = _quad_log_k(nu_abs[idx], x_arr[idx])
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_inverse_gamma(alpha, beta, rng, size=None):
    """Draw from invgamma(alpha, beta), i.e. ``1 / Gamma(alpha, rate=beta)``."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("inverse gamma needs alpha > 0 and beta > 0")
    return beta / rng.gamma(alpha, 1.0, size=size)


def sample_gig(nu, a, b, rng, size=None):
    """Draw from GIG(nu, a, b) with density ``w^(nu-1) exp(-(a w + b / w) / 2)``.

    The inverse gamma limit ``a -> 0`` is not accepted here; use
    :func:`sample_inverse_gamma` for it.
    """
    if not (a > 0 and b > 0):
        raise ValueError("GIG needs a > 0 and b > 0")
    omega = math.sqrt(a * b)
    draws = stats.geninvgauss.rvs(nu, omega, size=size, random_state=rng)
    return math.sqrt(b / a) * draws


def sample_dirichlet(gamma, rng, size=None):
    """Dirichlet draw(s); rows are renormalized so they sum to one in float64."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ValueError("gamma must be a non-empty 1-d vector")
    if np.any(~(gamma > 0)):
        raise ValueError("Dirichlet concentrations must be positive")
    if gamma.size == 1:
        shape = (1,) if size is None else (*np.atleast_1d(size), 1)
        return np.ones(shape)
    v = rng.dirichlet(gamma, size=size)
    return v / v.sum(axis=-1, keepdims=True)


def sample_truncated_poisson(lam, rng, size=None):
    """Draw from Poisson(lam) conditioned on being at least one.

    Exact for every ``lam > 0``: the first arrival of a rate-``lam`` Poisson
    process on [0, 1] is drawn conditionally on landing in the interval,
    and the remaining arrivals are an ordinary Poisson count.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("truncated Poisson rate must be positive")
    shape = lam.shape if size is None else size
    lam = np.broadcast_to(lam, shape)
    u = rng.random(shape)
    # T in [0, 1] with density lam exp(-lam t) / (1 - exp(-lam))
    first = -np.log1p(u * np.expm1(-lam)) / lam
    rest = rng.poisson(np.clip(lam * (1.0 - first), 0.0, None))
    out = 1 + rest
    out = np.where(lam < _TINY_RATE, 1, out).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def sample_multivariate_truncated_poisson(lambdas, rng):
    """Independent Poisson counts per column, conditioned on a positive row sum.

    ``lambdas`` is a vector of length c, or an (m, c) array giving one
    draw per row. The total is truncated-Poisson and is split
    multinomially, which is exact by Poisson superposition.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    single = lambdas.ndim == 1
    lam2 = np.atleast_2d(lambdas)
    if np.any(lam2 < 0):
        raise ValueError("rates must be non-negative")
    total = lam2.sum(axis=1)
    if np.any(~(total > 0)):
        raise ValueError("at least one rate per row must be positive")
    counts = sample_truncated_poisson(total, rng)
    probs = lam2 / total[:, None]
    if lam2.shape[1] == 1:
        out = np.asarray(counts, dtype=np.int64).reshape(-1, 1)
    else:
        out = rng.multinomial(np.atleast_1d(counts), probs)
    return out[0] if single else out
