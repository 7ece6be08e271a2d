"""Estimator wrappers with the scikit-learn fit/predict/transform shape.

The graph is the whole dataset: ``fit`` takes one graph (Graph, edge array
or sparse adjacency) and the fitted attributes describe that graph.
``predict`` and ``transform`` are transductive and only accept the fitted
graph again (or nothing).
"""

from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import chain_seeds, check_graph, check_positive_int, check_prior_kind
from .diagnostics import credible_interval, goodness_of_fit, posterior_predictive_degrees
from .hmc import HmcConfig
from .mcmc_rank1 import Schedule, run_chain_rank1
from .mcmc_rankc import RankCConfig, assign_communities, run_chain_rankc

__all__ = ["Rank1NR", "RankCNR", "summarize_chains"]


def summarize_chains(chains, level=0.95):
    """Credible intervals, means, acceptance rates and log-joint stats over all chains."""
    names = list(chains[0].hyper[0])
    out = {"n_chains": len(chains), "n_samples": int(sum(len(c.iterations) for c in chains)),
           "hyperparameters": {}, "accept_rates": [c.accept_rates for c in chains]}
    for name in names:
        values = np.concatenate([c.hyper_array(name) for c in chains])
        lo, hi = credible_interval(values, level)
        out["hyperparameters"][name] = {"mean": float(values.mean()), "lo": lo, "hi": hi, "level": level}
    if "gamma" in chains[0].extra:
        gam = np.concatenate([np.asarray(c.extra["gamma"]) for c in chains])
        out["gamma"] = {"mean": gam.mean(axis=0).tolist(),
                        "lo": np.quantile(gam, 0.5 * (1 - level), axis=0).tolist(),
                        "hi": np.quantile(gam, 0.5 * (1 + level), axis=0).tolist(), "level": level}
    lj = np.concatenate([np.asarray(c.log_joint) for c in chains])
    out["log_joint"] = {"mean": float(lj.mean()), "std": float(lj.std()), "min": float(lj.min()),
                        "max": float(lj.max()),
                        "per_chain_mean": [float(np.mean(c.log_joint)) for c in chains]}
    return out


class _NRBase(BaseEstimator):
    def _check_params(self):
        check_prior_kind(self.prior)
        check_positive_int(self.n_chains, "n_chains")
        check_positive_int(self.n_leapfrog, "n_leapfrog")
        schedule = Schedule(self.n_iter, self.burn_in, self.thin)
        if schedule.n_retained == 0:
            raise ValueError("the schedule retains no samples; raise n_iter or lower burn_in/thin")
        return schedule

    def _run(self, fn, seeds):
        if self.n_jobs in (None, 1) or len(seeds) == 1:
            return [fn(s) for s in seeds]
        return Parallel(n_jobs=self.n_jobs)(delayed(fn)(s) for s in seeds)

    def _finish(self):
        self.summary_ = summarize_chains(self.chains_)
        self.credible_intervals_ = {k: (v["lo"], v["hi"]) for k, v in self.summary_["hyperparameters"].items()}
        self.hyper_samples_ = {k: np.concatenate([c.hyper_array(k) for c in self.chains_])
                               for k in self.summary_["hyperparameters"]}

    def _check_same_graph(self, X):
        check_is_fitted(self, "chains_")
        if X is not None and check_graph(X, self.graph_.n) != self.graph_:
            raise ValueError("this estimator is transductive; pass the fitted graph or nothing")

    def posterior_records(self):
        """Hyperparameter records of every retained draw, chains concatenated."""
        check_is_fitted(self, "chains_")
        out = []
        for chain in self.chains_:
            for idx in range(len(chain.iterations)):
                rec = dict(chain.hyper[idx])
                if "gamma" in chain.extra:
                    rec["gamma"] = chain.extra["gamma"][idx]
                out.append(rec)
        return out

    def predictive_degrees(self, n=None, random_state=None):
        """Degree histograms of one predictive graph per retained draw."""
        rng = np.random.default_rng(random_state)
        return posterior_predictive_degrees(self.posterior_records(), n or self.graph_.n, rng)

    def goodness_of_fit(self, n=None, random_state=None):
        """Reweighted KS report of the fitted graph against its predictive graphs."""
        return goodness_of_fit(self.graph_, self.predictive_degrees(n, random_state))


class Rank1NR(_NRBase):
    """Rank-1 Norros-Reittu model with an inverse-gamma or GIG weight prior.

    Parameters
    ----------
    prior : {"ig", "gig"}
    n_iter, burn_in, thin : int
        MCMC schedule applied to every chain.
    n_chains : int
        Independent chains; seeds are spawned from ``random_state``.
    step_size, n_leapfrog : HMC settings for the log-weights.
    n_jobs : int or None
        Chains run in parallel workers when > 1; results do not depend on it.
    store_w : bool
        Keep the weight vector of every retained draw.
    """

    def __init__(self, prior="ig", n_iter=10_000, burn_in=5_000, thin=10, n_chains=3,
                 step_size=1e-2, n_leapfrog=20, n_jobs=None, store_w=False, random_state=None):
        self.prior = prior
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.thin = thin
        self.n_chains = n_chains
        self.step_size = step_size
        self.n_leapfrog = n_leapfrog
        self.n_jobs = n_jobs
        self.store_w = store_w
        self.random_state = random_state

    def fit(self, X, y=None, n_nodes=None):
        schedule = self._check_params()
        g = check_graph(X, n_nodes)
        cfg = HmcConfig(self.step_size, self.n_leapfrog)
        prior, store_w = self.prior, self.store_w

        def one(seed):
            return run_chain_rank1(g, prior, schedule, cfg, np.random.default_rng(seed), store_w=store_w)

        self.graph_ = g
        self.chains_ = self._run(one, chain_seeds(self.random_state, self.n_chains))
        self._finish()
        return self

    def transform(self, X=None):
        """Posterior-mean weights; requires ``store_w=True``."""
        self._check_same_graph(X)
        if not self.chains_[0].w:
            raise ValueError("weights were not stored; refit with store_w=True")
        return np.mean([w for c in self.chains_ for w in c.w], axis=0)


class RankCNR(_NRBase):
    """Rank-c Norros-Reittu model with Dirichlet community affiliations.

    ``predict`` returns hard community labels (strongest affiliation of the
    maximum-log-joint draw across chains) and ``transform`` its affiliation
    matrix.
    """

    def __init__(self, n_communities=2, prior="ig", n_iter=10_000, burn_in=5_000, thin=10,
                 n_chains=3, init_iters=1000, init_step_size=1e-1, w_step_size=5e-3,
                 v_step_size=2.5e-2, v_step_size_after_burn_in=5e-3, n_leapfrog=20,
                 n_jobs=None, store_w=False, store_v=False, random_state=None):
        self.n_communities = n_communities
        self.prior = prior
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.thin = thin
        self.n_chains = n_chains
        self.init_iters = init_iters
        self.init_step_size = init_step_size
        self.w_step_size = w_step_size
        self.v_step_size = v_step_size
        self.v_step_size_after_burn_in = v_step_size_after_burn_in
        self.n_leapfrog = n_leapfrog
        self.n_jobs = n_jobs
        self.store_w = store_w
        self.store_v = store_v
        self.random_state = random_state

    def _config(self):
        L = self.n_leapfrog
        return RankCConfig(
            init_iters=check_positive_int(self.init_iters, "init_iters", minimum=0),
            init_v=HmcConfig(self.init_step_size, L),
            w=HmcConfig(self.w_step_size, L),
            v=HmcConfig(self.v_step_size, L),
            v_after_burn_in=HmcConfig(self.v_step_size_after_burn_in, L),
        )

    def fit(self, X, y=None, n_nodes=None):
        schedule = self._check_params()
        c = check_positive_int(self.n_communities, "n_communities")
        config = self._config()
        g = check_graph(X, n_nodes)
        prior, store_w, store_v = self.prior, self.store_w, self.store_v

        def one(seed):
            return run_chain_rankc(g, prior, c, schedule, np.random.default_rng(seed), config,
                                   store_w=store_w, store_v=store_v)

        self.graph_ = g
        self.chains_ = self._run(one, chain_seeds(self.random_state, self.n_chains))
        best = max(self.chains_, key=lambda ch: max(ch.log_joint))
        self.map_V_ = best.map_V
        self.map_w_ = best.map_w
        self.labels_ = assign_communities(self.map_V_)
        self._finish()
        return self

    def predict(self, X=None):
        self._check_same_graph(X)
        return self.labels_

    def fit_predict(self, X, y=None, n_nodes=None):
        return self.fit(X, n_nodes=n_nodes).labels_

    def transform(self, X=None):
        self._check_same_graph(X)
        return self.map_V_

    def fit_transform(self, X, y=None, n_nodes=None):
        return self.fit(X, n_nodes=n_nodes).map_V_
