"""Posterior inference for the rank-c model with overlapping communities.

Affiliation rows are moved by HMC in unconstrained stick-breaking
coordinates ``z_hat`` (logistic of the stick fractions). The sampler first
runs an affiliation-only phase with unit weights, then cycles

    HMC(log w) -> HMC(z_hat) -> edge counts -> weight hyperparameters -> gamma

Everything is evaluated in log space; the non-edge sum collapses per
community so a sweep costs O(c (n + |E|)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .hmc import HmcConfig, hmc_transition
from .mcmc_rank1 import (
    ChainError,
    ChainResult,
    init_hyper,
    mh_hyper_step,
)
from .models import PRIORS
from .stats_kernel import sample_multivariate_truncated_poisson

__all__ = [
    "RankCChainState",
    "RankCConfig",
    "stick_breaking_forward",
    "stick_breaking_log_forward",
    "stick_breaking_inverse",
    "stick_breaking_pullback_grad",
    "log_joint_rankc",
    "grad_log_joint_rankc",
    "hmc_w_step",
    "hmc_v_step",
    "resample_aux_rankc",
    "mh_gamma_step",
    "init_rankc",
    "run_chain_rankc",
    "assign_communities",
]

GAMMA_PROPOSAL_SCALE = 0.01
GAMMA_INIT = 0.1


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def stick_breaking_log_forward(z_hat):
    """Log of :func:`stick_breaking_forward`, accurate for extreme inputs."""
    z_hat = np.asarray(z_hat, dtype=float)
    log_z = _log_sigmoid(z_hat)
    log_1mz = _log_sigmoid(-z_hat)
    # log of the remaining stick before each break
    prefix = np.concatenate([np.zeros(z_hat.shape[:-1] + (1,)), np.cumsum(log_z, axis=-1)], axis=-1)
    head = log_1mz + prefix[..., :-1]
    return np.concatenate([head, prefix[..., -1:]], axis=-1)


def stick_breaking_forward(z_hat):
    """Map unconstrained ``(..., c-1)`` coordinates onto the ``c``-simplex.

    ``z = sigmoid(z_hat)``; ``v_q = (1 - z_q) prod_{t<q} z_t`` and the last
    coordinate takes the whole remaining stick.
    """
    return np.exp(stick_breaking_log_forward(z_hat))


def stick_breaking_inverse(v):
    """Inverse of :func:`stick_breaking_forward` for strictly positive simplex rows."""
    v = np.asarray(v, dtype=float)
    # z_q = 1 - v_q / remaining_q, so logit(z_q) = log(remaining_q - v_q) - log(v_q);
    # the tail sum is more accurate than 1 - cumsum for the leftover stick
    tail = np.cumsum(v[..., ::-1], axis=-1)[..., ::-1]
    rest = tail[..., 1:]
    return np.log(rest) - np.log(v[..., :-1])


def stick_breaking_pullback_grad(df_dv, v, z):
    """Gradient with respect to ``z_hat`` given the gradient with respect to ``v``.

    O(c) per row using suffix sums of ``v * df_dv``.
    """
    vg = np.asarray(v, dtype=float) * np.asarray(df_dv, dtype=float)
    return _pullback_from_vg(vg, np.asarray(z, dtype=float))


def _pullback_from_vg(vg, z):
    suffix = np.cumsum(vg[..., ::-1], axis=-1)[..., ::-1]
    return -z * vg[..., :-1] + (1.0 - z) * suffix[..., 1:]


@dataclass(frozen=True)
class RankCConfig:
    init_iters: int = 1000
    init_v: HmcConfig = HmcConfig(1e-1, 20)
    w: HmcConfig = HmcConfig(5e-3, 20)
    v: HmcConfig = HmcConfig(2.5e-2, 20)
    v_after_burn_in: HmcConfig = HmcConfig(5e-3, 20)
    z_init_scale: float = 1.0


@dataclass(frozen=True)
class RankCChainState:
    log_w: np.ndarray
    z_hat: np.ndarray
    M: np.ndarray
    prior_kind: str
    theta: np.ndarray
    gamma_hat: np.ndarray
    iteration: int = 0
    phase: str = "main"

    @property
    def c(self):
        return len(self.gamma_hat)

    @property
    def w(self):
        return np.exp(self.log_w)

    @property
    def V(self):
        return stick_breaking_forward(self.z_hat)

    @property
    def gamma(self):
        return np.exp(self.gamma_hat)

    @property
    def prior(self):
        return PRIORS[self.prior_kind].from_unconstrained(self.theta)


class _RankCTarget:
    """Joint log density pieces with the edge counts held fixed."""

    def __init__(self, g, state):
        self.n = g.n
        self.c = state.c
        M = np.asarray(state.M, dtype=float).reshape(-1, self.c)
        D = np.zeros((g.n, self.c))
        np.add.at(D, g.edges[:, 0], M)
        np.add.at(D, g.edges[:, 1], M)
        self.D = D
        self.d = D.sum(axis=1)
        self.Mq = M.sum(axis=0)
        self.m_total = float(M.sum())
        self.log_mfact = float(special.gammaln(M + 1.0).sum())
        self.prior = state.prior
        self.gamma = state.gamma
        gamma_tail = np.cumsum(self.gamma[::-1])[::-1]
        self.gamma_tilde = gamma_tail[1:]
        self.dir_const = g.n * (special.gammaln(self.gamma.sum()) - special.gammaln(self.gamma).sum())

    def _pieces(self, log_w, z_hat):
        w = np.exp(log_w)
        log_v = stick_breaking_log_forward(z_hat)
        v = np.exp(log_v)
        s = w.sum()
        r = v.sum(axis=0)
        u = w[:, None] * v
        T = u.sum(axis=0)
        S2 = (u * u).sum(axis=0)
        return w, log_v, v, s, r, u, T, S2

    def log_prob(self, log_w, z_hat):
        w, log_v, v, s, r, u, T, S2 = self._pieces(log_w, z_hat)
        n = self.n
        edge = (self.d @ log_w - self.m_total * math.log(s) + np.sum(self.D * log_v)
                + self.Mq @ (math.log(n) - np.log(r)) - self.log_mfact)
        non_edge = -np.sum(n / (2.0 * s * r) * (T * T - S2))
        prior_w = np.sum(self.prior.logpdf(w)) + log_w.sum()
        log_z = _log_sigmoid(z_hat)
        log_1mz = _log_sigmoid(-z_hat)
        prior_v = self.dir_const + np.sum(log_1mz @ self.gamma[:-1] + log_z @ self.gamma_tilde) \
            if self.c > 1 else 0.0
        return float(edge + non_edge + prior_w + prior_v)

    def grad_log_w(self, log_w, z_hat):
        w, log_v, v, s, r, u, T, S2 = self._pieces(log_w, z_hat)
        C = self.n / (2.0 * r)
        B = np.sum(C * (T * T - S2)) / s
        cross = (2.0 * v * T - 2.0 * w[:, None] * v * v) @ C
        return (self.d - self.m_total * w / s - w * cross / s + w * B / s
                + w * self.prior.dlogpdf(w) + 1.0)

    def grad_z_hat(self, log_w, z_hat):
        if self.c == 1:
            return np.zeros_like(z_hat)
        w, log_v, v, s, r, u, T, S2 = self._pieces(log_w, z_hat)
        n = self.n
        C = n / (2.0 * r)
        # v * d(log joint)/dv, likelihood part
        vg = (self.D - v * (self.Mq / r)
              - v * (C * (2.0 * T * w[:, None] - 2.0 * (w * w)[:, None] * v)) / s
              + v * (n / (2.0 * r * r)) * (T * T - S2) / s)
        z = np.exp(_log_sigmoid(z_hat))
        return _pullback_from_vg(vg, z) - self.gamma[:-1] * z + self.gamma_tilde * (1.0 - z)


def log_joint_rankc(g, state):
    """Collapsed log joint including the Dirichlet prior and both transform Jacobians."""
    return _RankCTarget(g, state).log_prob(np.asarray(state.log_w, float), np.asarray(state.z_hat, float))


def grad_log_joint_rankc(g, state):
    """Returns ``(d/d log_w, d/d z_hat)`` of :func:`log_joint_rankc`."""
    t = _RankCTarget(g, state)
    lw, zh = np.asarray(state.log_w, float), np.asarray(state.z_hat, float)
    return t.grad_log_w(lw, zh), t.grad_z_hat(lw, zh)


def hmc_w_step(g, state, cfg, rng, stats_out=None):
    t = _RankCTarget(g, state)
    zh = state.z_hat
    x, acc, _ = hmc_transition(state.log_w, lambda x: t.log_prob(x, zh), lambda x: t.grad_log_w(x, zh),
                               cfg.step_size, cfg.leapfrog_steps, rng)
    if stats_out is not None:
        stats_out.append(acc)
    return replace(state, log_w=x)


def hmc_v_step(g, state, cfg, rng, stats_out=None):
    if state.c == 1:
        return state
    t = _RankCTarget(g, state)
    lw = state.log_w
    x, acc, _ = hmc_transition(state.z_hat, lambda z: t.log_prob(lw, z), lambda z: t.grad_z_hat(lw, z),
                               cfg.step_size, cfg.leapfrog_steps, rng)
    if stats_out is not None:
        stats_out.append(acc)
    return replace(state, z_hat=x)


def edge_rates(g, state):
    """Per-edge, per-community Poisson rates ``lambda_ijq``, shape (|E|, c)."""
    log_w = np.asarray(state.log_w, float)
    log_v = stick_breaking_log_forward(state.z_hat)
    s = np.exp(log_w).sum()
    r = np.exp(log_v).sum(axis=0)
    i, j = g.edges[:, 0], g.edges[:, 1]
    log_rate = (log_w[i] + log_w[j] - math.log(s))[:, None] + log_v[i] + log_v[j] + math.log(g.n) - np.log(r)
    return np.exp(log_rate)


def resample_aux_rankc(g, state, rng):
    if g.n_edges == 0:
        return state
    rates = np.maximum(edge_rates(g, state), 0.0)
    totals = rates.sum(axis=1)
    # rows that underflow entirely get an even split
    rates[totals <= 0] = 1.0
    return replace(state, M=sample_multivariate_truncated_poisson(rates, rng))


def _gamma_log_target(gamma_hat, sum_log_v, n):
    gamma = np.exp(gamma_hat)
    return float(n * (special.gammaln(gamma.sum()) - special.gammaln(gamma).sum())
                 + (gamma - 1.0) @ sum_log_v - 0.5 * gamma_hat @ gamma_hat)


def mh_gamma_step(state, rng, proposal_scale=GAMMA_PROPOSAL_SCALE, stats_out=None):
    """Coordinate-wise random-walk MH on ``log gamma`` given the affiliations."""
    if state.c == 1:
        return state
    sum_log_v = stick_breaking_log_forward(state.z_hat).sum(axis=0)
    n = state.z_hat.shape[0]
    gh = np.array(state.gamma_hat, dtype=float)
    cur = _gamma_log_target(gh, sum_log_v, n)
    for q in range(len(gh)):
        prop = gh.copy()
        prop[q] += proposal_scale * rng.standard_normal()
        new = _gamma_log_target(prop, sum_log_v, n)
        ok = np.isfinite(new) and np.log(rng.random()) < new - cur
        if ok:
            gh, cur = prop, new
        if stats_out is not None:
            stats_out.append(bool(ok))
    return replace(state, gamma_hat=gh)


def init_rankc(g, prior_kind, c, rng, z_init_scale=1.0):
    """Unit weights, random affiliations, moment-matched hyperparameters, gamma = 0.1."""
    prior = init_hyper(g, prior_kind, rng)
    z_hat = z_init_scale * rng.standard_normal((g.n, c - 1))
    state = RankCChainState(
        log_w=np.zeros(g.n),
        z_hat=z_hat,
        M=np.zeros((g.n_edges, c), dtype=np.int64),
        prior_kind=prior_kind,
        theta=prior.to_unconstrained(),
        gamma_hat=np.full(c, math.log(GAMMA_INIT)),
        phase="init",
    )
    return resample_aux_rankc(g, state, rng)


def assign_communities(V):
    """Hard labels: strongest affiliation per node (lowest index on ties)."""
    return np.argmax(np.asarray(V), axis=1)


def run_chain_rankc(g, prior_kind, c, schedule, rng=None, config=None, store_w=False, store_v=False):
    """Two-phase chain; the result carries the MAP affiliation matrix in ``map_V``."""
    config = config or RankCConfig()
    rng = rng if rng is not None else np.random.default_rng()
    if c < 1:
        raise ValueError("c must be at least 1")
    state = init_rankc(g, prior_kind, c, rng, config.z_init_scale)
    acc = {"hmc_v_init": [], "hmc_w": [], "hmc_v": [], "hyper": [], "gamma": []}

    for it in range(1, config.init_iters + 1):
        try:
            state = hmc_v_step(g, state, config.init_v, rng, acc["hmc_v_init"])
            state = resample_aux_rankc(g, state, rng)
        except (FloatingPointError, ValueError, OverflowError) as exc:
            raise ChainError(str(exc), it, phase="init") from exc
    state = replace(state, phase="main")

    result = ChainResult(prior_kind)
    result.extra["gamma"] = []
    best = (-np.inf, None, None)
    for it in range(1, schedule.iters + 1):
        v_cfg = config.v if it <= schedule.burn_in else config.v_after_burn_in
        try:
            state = hmc_w_step(g, state, config.w, rng, acc["hmc_w"])
            state = hmc_v_step(g, state, v_cfg, rng, acc["hmc_v"])
            state = resample_aux_rankc(g, state, rng)
            state = mh_hyper_step(g, state, rng, stats_out=acc["hyper"])
            state = mh_gamma_step(state, rng, stats_out=acc["gamma"])
        except (FloatingPointError, ValueError, OverflowError) as exc:
            raise ChainError(str(exc), it) from exc
        state = replace(state, iteration=it)
        if schedule.keep(it):
            lj = log_joint_rankc(g, state)
            if not np.isfinite(lj):
                raise ChainError("non-finite log joint", it)
            result.iterations.append(it)
            result.hyper.append(state.prior.as_dict())
            result.log_joint.append(lj)
            result.extra["gamma"].append(state.gamma.tolist())
            if store_w:
                result.w.append(state.w.copy())
            if store_v:
                result.V.append(state.V)
            if lj > best[0]:
                best = (lj, state.V, state.w.copy())
    result.accept_rates = {k: float(np.mean(v)) if v else float("nan") for k, v in acc.items()}
    result.final_state = state
    result.map_V = best[1]
    result.map_w = best[2]
    return result
