"""Posterior inference for the rank-1 Norros-Reittu model.

Each iteration updates the log-weights by HMC, redraws the truncated
Poisson edge counts and moves the prior hyperparameters with a random-walk
Metropolis-Hastings step. Non-edges are handled in closed form so a sweep
costs O(n + |E|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special, stats

from .hmc import HmcConfig, hmc_transition
from .models import GIG, PRIORS, InverseGamma
from .stats_kernel import sample_truncated_poisson

__all__ = [
    "Rank1ChainState",
    "Schedule",
    "ChainResult",
    "ChainError",
    "HYPER_PROPOSAL_SCALES",
    "log_joint_rank1",
    "grad_log_joint_rank1",
    "hmc_step",
    "resample_aux",
    "mh_hyper_step",
    "init_rank1",
    "init_hyper",
    "solve_gig_b",
    "run_chain_rank1",
]

# random-walk std devs in unconstrained coordinates
HYPER_PROPOSAL_SCALES = {"ig": np.array([0.05, 0.05]), "gig": np.array([0.05, 0.1, 0.05])}


class ChainError(RuntimeError):
    def __init__(self, message, iteration, phase="main"):
        self.iteration = iteration
        self.phase = phase
        super().__init__(f"{phase} iteration {iteration}: {message}")


@dataclass(frozen=True)
class Schedule:
    iters: int = 10_000
    burn_in: int = 5_000
    thin: int = 10

    def __post_init__(self):
        if self.iters < 0 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("need iters >= 0, burn_in >= 0 and thin >= 1")

    def keep(self, it):
        """Whether 1-based iteration ``it`` is retained."""
        return it > self.burn_in and (it - self.burn_in) % self.thin == 0

    @property
    def n_retained(self):
        return max(0, self.iters - self.burn_in) // self.thin


@dataclass(frozen=True)
class Rank1ChainState:
    log_w: np.ndarray
    m: np.ndarray
    prior_kind: str
    theta: np.ndarray
    iteration: int = 0

    @property
    def w(self):
        return np.exp(self.log_w)

    @property
    def prior(self):
        return PRIORS[self.prior_kind].from_unconstrained(self.theta)


@dataclass
class ChainResult:
    """Retained draws of one chain."""

    prior_kind: str
    iterations: list = field(default_factory=list)
    hyper: list = field(default_factory=list)
    log_joint: list = field(default_factory=list)
    w: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    accept_rates: dict = field(default_factory=dict)
    final_state: object = None
    V: list = field(default_factory=list)
    map_V: object = None
    map_w: object = None

    def hyper_array(self, name):
        return np.array([h[name] for h in self.hyper])

    def records(self, include_w=False):
        """Line-delimited JSON records, one per retained draw."""
        out = []
        for idx, it in enumerate(self.iterations):
            rec = {"iteration": it, **self.hyper[idx], "log_joint": self.log_joint[idx]}
            for key, values in self.extra.items():
                rec[key] = values[idx]
            if include_w and self.w:
                rec["w"] = self.w[idx].tolist()
            out.append(rec)
        return out


def _edge_stats(g, m):
    """Count-weighted node degrees, total count and sum of log m!."""
    m = np.asarray(m, dtype=float)
    d = np.bincount(g.edges[:, 0], weights=m, minlength=g.n) + np.bincount(
        g.edges[:, 1], weights=m, minlength=g.n)
    return d, float(m.sum()), float(special.gammaln(m + 1.0).sum())


class _WeightTarget:
    """Log density of the log-weights with the counts held fixed."""

    def __init__(self, g, m, prior):
        self.d, self.m_total, self.log_mfact = _edge_stats(g, m)
        self.prior = prior

    def log_prob(self, x):
        w = np.exp(x)
        s = w.sum()
        return float(self.d @ x - self.m_total * math.log(s) - self.log_mfact
                     + 0.5 * (w @ w / s - s) + np.sum(self.prior.logpdf(w)) + x.sum())

    def grad(self, x):
        w = np.exp(x)
        s = w.sum()
        q = w @ w
        return (self.d - self.m_total * w / s + w * w / s - 0.5 * q * w / (s * s) - 0.5 * w
                + w * self.prior.dlogpdf(w) + 1.0)


def log_joint_rank1(g, state):
    """Collapsed log joint of graph, counts and log-weights (incl. the log-weight Jacobian)."""
    return _WeightTarget(g, state.m, state.prior).log_prob(np.asarray(state.log_w, dtype=float))


def grad_log_joint_rank1(g, state):
    """Gradient of :func:`log_joint_rank1` with respect to the log-weights."""
    return _WeightTarget(g, state.m, state.prior).grad(np.asarray(state.log_w, dtype=float))


def hmc_step(g, state, cfg, rng, stats_out=None):
    target = _WeightTarget(g, state.m, state.prior)
    x, accepted, _ = hmc_transition(state.log_w, target.log_prob, target.grad,
                                    cfg.step_size, cfg.leapfrog_steps, rng)
    if stats_out is not None:
        stats_out.append(accepted)
    return replace(state, log_w=x)


def resample_aux(g, state, rng):
    """Redraw every edge count from its zero-truncated Poisson conditional."""
    if g.n_edges == 0:
        return state
    w = state.w
    rate = w[g.edges[:, 0]] * w[g.edges[:, 1]] / w.sum()
    rate = np.maximum(rate, np.finfo(float).tiny)
    return replace(state, m=sample_truncated_poisson(rate, rng))


def _hyper_log_target(kind, theta, log_w):
    try:
        prior = PRIORS[kind].from_unconstrained(theta)
    except (ValueError, OverflowError):
        return -np.inf
    with np.errstate(all="ignore"):
        val = float(np.sum(prior.logpdf(np.exp(log_w)))) + float(np.sum(stats.norm.logpdf(theta)))
    return val if np.isfinite(val) else -np.inf


def mh_hyper_step(g, state, rng, proposal_scale=None, stats_out=None):
    """Random-walk MH on the unconstrained hyperparameters given the weights."""
    scale = HYPER_PROPOSAL_SCALES[state.prior_kind] if proposal_scale is None else np.broadcast_to(
        np.asarray(proposal_scale, dtype=float), state.theta.shape)
    proposal = state.theta + scale * rng.standard_normal(state.theta.shape)
    cur = _hyper_log_target(state.prior_kind, state.theta, state.log_w)
    new = _hyper_log_target(state.prior_kind, proposal, state.log_w)
    accepted = bool(np.log(rng.random()) < new - cur) if np.isfinite(new) else False
    if stats_out is not None:
        stats_out.append(accepted)
    return replace(state, theta=proposal) if accepted else state


def solve_gig_b(nu, a, target_mean):
    """Find ``b`` with GIG(nu, a, b) mean equal to ``target_mean``."""
    def gap(log_b):
        return math.log(GIG(nu, a, math.exp(log_b)).mean()) - math.log(target_mean)

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if gap(lo) < 0:
            break
        lo -= 2.0
    for _ in range(200):
        if gap(hi) > 0:
            break
        hi += 2.0
    if not (gap(lo) < 0 < gap(hi)):
        raise ValueError("could not bracket the GIG mean equation")
    log_b = optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(log_b)


def init_hyper(g, prior_kind, rng):
    """Moment-matched starting hyperparameters (natural-space prior object)."""
    if g.n == 0 or g.n_edges == 0:
        raise ValueError("initialization needs at least one edge")
    edges_per_node = g.n_edges / g.n
    if prior_kind == "ig":
        alpha = 1.0 + math.exp(rng.normal(0.0, 0.1))
        return InverseGamma(alpha, 2.0 * (alpha - 1.0) * edges_per_node)
    if prior_kind == "gig":
        nu = -rng.uniform(0.0, 1.0)
        a = rng.uniform(0.0, 1e-3)
        while a <= 0.0 or nu >= 0.0:
            nu = -rng.uniform(0.0, 1.0)
            a = rng.uniform(0.0, 1e-3)
        return GIG(nu, a, solve_gig_b(nu, a, 2.0 * edges_per_node))
    raise ValueError(f"unknown prior kind {prior_kind!r}")


def init_rank1(g, prior_kind, rng):
    prior = init_hyper(g, prior_kind, rng)
    return Rank1ChainState(
        log_w=np.zeros(g.n),
        m=np.ones(g.n_edges, dtype=np.int64),
        prior_kind=prior_kind,
        theta=prior.to_unconstrained(),
    )


def run_chain_rank1(g, prior_kind, schedule, cfg=None, rng=None, store_w=False, state=None):
    """Run one chain; returns a :class:`ChainResult` of thinned post-burn-in draws."""
    cfg = cfg or HmcConfig()
    rng = rng if rng is not None else np.random.default_rng()
    if state is None:
        state = init_rank1(g, prior_kind, rng)
    result = ChainResult(prior_kind)
    hmc_acc, hyper_acc = [], []
    for it in range(1, schedule.iters + 1):
        try:
            state = hmc_step(g, state, cfg, rng, hmc_acc)
            state = resample_aux(g, state, rng)
            state = mh_hyper_step(g, state, rng, stats_out=hyper_acc)
        except (FloatingPointError, ValueError, OverflowError) as exc:
            raise ChainError(str(exc), it) from exc
        state = replace(state, iteration=it)
        if schedule.keep(it):
            lj = log_joint_rank1(g, state)
            if not np.isfinite(lj):
                raise ChainError("non-finite log joint", it)
            result.iterations.append(it)
            result.hyper.append(state.prior.as_dict())
            result.log_joint.append(lj)
            if store_w:
                result.w.append(state.w.copy())
    result.accept_rates = {
        "hmc_w": float(np.mean(hmc_acc)) if hmc_acc else float("nan"),
        "hyper": float(np.mean(hyper_acc)) if hyper_acc else float("nan"),
    }
    result.final_state = state
    return result
