import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nrgraph.graph import Graph
from nrgraph.mcmc_rank1 import Rank1ChainState, Schedule, log_joint_rank1
from nrgraph.mcmc_rankc import (
    RankCChainState,
    RankCConfig,
    assign_communities,
    edge_rates,
    grad_log_joint_rankc,
    log_joint_rankc,
    mh_gamma_step,
    resample_aux_rankc,
    run_chain_rankc,
    stick_breaking_forward,
    stick_breaking_inverse,
    stick_breaking_pullback_grad,
)
from nrgraph.models import GIG, InverseGamma
from nrgraph.sampler import sample_prior_graph
from nrgraph.stats_kernel import sample_dirichlet
from oracles import (
    central_difference,
    gig_log_density,
    ig_log_density,
    naive_log_joint_rankc,
    stick_breaking_log_jacobian,
    stick_breaking_naive,
)


def random_instance(rng, n, c, kind):
    iu = np.array(np.triu_indices(n, k=1)).T
    g = Graph(n, iu[rng.random(len(iu)) < 0.5])
    if kind == "ig":
        prior = InverseGamma(rng.uniform(1.2, 3.0), rng.uniform(0.5, 5.0))
        oracle = ig_log_density(prior.alpha, prior.beta)
    else:
        prior = GIG(-rng.uniform(0.01, 2.0), rng.uniform(0.05, 2.0), rng.uniform(0.5, 5.0))
        oracle = gig_log_density(prior.nu, prior.a, prior.b)
    M = rng.integers(0, 3, (g.n_edges, c))
    M[M.sum(axis=1) == 0, 0] = 1
    state = RankCChainState(rng.normal(0, 1, n), rng.normal(0, 1, (n, c - 1)), M, kind,
                            prior.to_unconstrained(), np.log(rng.uniform(0.2, 2.0, c)))
    return g, state, oracle


def test_stick_breaking_examples():
    assert np.allclose(stick_breaking_forward(np.zeros(1)), [0.5, 0.5], rtol=0, atol=1e-16)
    assert np.allclose(stick_breaking_forward(np.zeros(2)), [0.5, 0.25, 0.25], rtol=0, atol=1e-16)
    rng = np.random.default_rng(0)
    z = rng.normal(0, 3, (50, 4))
    assert np.allclose(stick_breaking_forward(z), [stick_breaking_naive(r) for r in z], rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_stick_breaking_round_trip(c, seed):
    v = sample_dirichlet(np.full(c, 1.0), np.random.default_rng(seed), size=20)
    v = np.clip(v, 1e-12, None)
    v /= v.sum(axis=1, keepdims=True)
    back = stick_breaking_forward(stick_breaking_inverse(v))
    assert np.max(np.abs(back - v)) < 1e-10
    assert np.allclose(back.sum(axis=1), 1.0, atol=1e-10)


def test_pullback_matches_finite_differences():
    rng = np.random.default_rng(1)
    for c in (2, 3, 5):
        a = rng.normal(size=c)
        B = rng.normal(size=(c, c))

        def f(zh):
            v = stick_breaking_forward(zh)
            return a @ v + v @ B @ v

        zh = rng.normal(size=c - 1)
        v = stick_breaking_forward(zh)
        df_dv = a + (B + B.T) @ v
        z = 1 / (1 + np.exp(-zh))
        an = stick_breaking_pullback_grad(df_dv, v, z)
        assert np.allclose(an, central_difference(f, zh), rtol=1e-6, atol=1e-9)


def test_pullback_constant_and_two_community_case():
    zh = np.array([0.7])
    v = stick_breaking_forward(zh)
    z = 1 / (1 + np.exp(-zh))
    # a function of sum(v) only is constant on the simplex
    assert np.allclose(stick_breaking_pullback_grad(np.ones(2), v, z), 0.0, atol=1e-15)
    # c = 2: v = (1 - z, z), dv/dzh = z(1 - z) (-1, 1)
    g = np.array([2.0, -1.0])
    expected = z * (1 - z) * (g[1] - g[0])
    assert stick_breaking_pullback_grad(g, v, z) == pytest.approx(expected, rel=1e-14)


def test_jacobian_oracle_matches_numeric_determinant():
    rng = np.random.default_rng(2)
    for c in (2, 3, 4):
        zh = rng.normal(size=c - 1)
        J = central_difference(lambda x: stick_breaking_forward(x)[0], zh) if c == 2 else None
        jac = np.zeros((c - 1, c - 1))
        for t in range(c - 1):
            h = 1e-6
            e = np.zeros(c - 1)
            e[t] = h
            jac[:, t] = (stick_breaking_forward(zh + e)[:-1] - stick_breaking_forward(zh - e)[:-1]) / (2 * h)
        assert math.log(abs(np.linalg.det(jac))) == pytest.approx(stick_breaking_log_jacobian(zh), abs=1e-7)
        if J is not None:
            assert J[0] == pytest.approx(jac[0, 0])


@pytest.mark.parametrize("kind", ["ig", "gig"])
def test_log_joint_matches_naive(kind):
    rng = np.random.default_rng(3)
    for _ in range(8):
        g, state, oracle = random_instance(rng, 4, 2, kind)
        ref = naive_log_joint_rankc(g.edges, state.M, state.log_w, state.z_hat, state.gamma, oracle)
        assert log_joint_rankc(g, state) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_one_community_reduces_to_rank1():
    rng = np.random.default_rng(4)
    g, state, _ = random_instance(rng, 7, 1, "ig")
    r1 = Rank1ChainState(state.log_w, state.M[:, 0], "ig", state.theta)
    # with c = 1: r = n so n / r = 1, no Dirichlet term and no stick-breaking Jacobian
    assert log_joint_rankc(g, state) == pytest.approx(log_joint_rank1(g, r1), rel=1e-13)


def test_community_permutation_symmetry():
    rng = np.random.default_rng(5)
    g, state, _ = random_instance(rng, 6, 3, "gig")
    perm = np.array([2, 0, 1])
    V = state.V[:, perm]
    s2 = replace(state, z_hat=stick_breaking_inverse(V), M=state.M[:, perm], gamma_hat=state.gamma_hat[perm])
    # the stick-breaking Jacobian is not label-symmetric, so compare on the simplex
    # by removing it from both sides
    jac1 = sum(stick_breaking_log_jacobian(r) for r in state.z_hat)
    jac2 = sum(stick_breaking_log_jacobian(r) for r in s2.z_hat)
    assert log_joint_rankc(g, state) - jac1 == pytest.approx(log_joint_rankc(g, s2) - jac2, rel=1e-10)


@pytest.mark.parametrize("kind", ["ig", "gig"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(6)
    for _ in range(4):
        g, state, _ = random_instance(rng, 8, 3, kind)
        gw, gz = grad_log_joint_rankc(g, state)
        fw = central_difference(lambda x: log_joint_rankc(g, replace(state, log_w=x)), state.log_w)
        fz = central_difference(lambda x: log_joint_rankc(g, replace(state, z_hat=x)), state.z_hat)
        for an, fd in ((gw, fw), (gz, fz)):
            assert np.max(np.abs(an - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


def test_gradient_symmetric_instance():
    n = 6
    g = Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    state = RankCChainState(np.zeros(n), np.zeros((n, 1)), np.ones((n, 2), dtype=np.int64), "ig",
                            InverseGamma(2.0, 1.0).to_unconstrained(), np.zeros(2))
    gw, gz = grad_log_joint_rankc(g, state)
    assert np.allclose(gw, gw[0], atol=1e-14) and np.allclose(gz, gz[0], atol=1e-14)


def test_resample_aux_rankc_sum_and_single_edge_marginals():
    g = Graph(3, [(0, 1)])
    rng = np.random.default_rng(7)
    state = RankCChainState(np.log([2.0, 1.5, 1.0]), np.array([[0.4], [-0.3], [1.0]]),
                            np.ones((1, 2), dtype=np.int64), "ig", InverseGamma(2, 1).to_unconstrained(),
                            np.zeros(2))
    lam = edge_rates(g, state)[0]
    draws = np.array([resample_aux_rankc(g, state, rng).M[0] for _ in range(40_000)])
    assert np.all(draws.sum(axis=1) >= 1)
    m = np.arange(31)
    joint = np.outer(stats.poisson.pmf(m, lam[0]), stats.poisson.pmf(m, lam[1]))
    joint[0, 0] = 0
    joint /= joint.sum()
    for q, marginal in enumerate((joint.sum(axis=1), joint.sum(axis=0))):
        mean = marginal @ m
        sd = math.sqrt(marginal @ m**2 - mean**2)
        assert abs(draws[:, q].mean() - mean) < 5 * sd / math.sqrt(len(draws))


def test_mh_gamma_zero_step_and_positivity():
    rng = np.random.default_rng(8)
    g, state, _ = random_instance(rng, 6, 3, "ig")
    acc = []
    s0 = mh_gamma_step(state, rng, proposal_scale=0.0, stats_out=acc)
    assert all(acc) and np.array_equal(s0.gamma_hat, state.gamma_hat)
    for _ in range(100):
        state = mh_gamma_step(state, rng, proposal_scale=1.0)
        assert np.all(state.gamma > 0)


def test_mh_gamma_concentrates_near_truth():
    rng = np.random.default_rng(9)
    true = np.array([0.5, 2.0])
    V = sample_dirichlet(true, rng, size=2000)
    V = np.clip(V, 1e-300, None)
    state = RankCChainState(np.zeros(2000), stick_breaking_inverse(V), np.zeros((0, 2), dtype=np.int64), "ig",
                            InverseGamma(2, 1).to_unconstrained(), np.log([0.1, 0.1]))
    draws = []
    for it in range(4000):
        state = mh_gamma_step(state, rng, proposal_scale=0.05)
        if it >= 1000:
            draws.append(state.gamma)
    est = np.mean(draws, axis=0)
    assert np.all(np.abs(est / true - 1) < 0.15)


def test_density_of_transformed_draws_matches_dirichlet():
    # sampling the z_hat coordinates from (Dirichlet density + Jacobian) and
    # mapping forward must reproduce direct Dirichlet draws; a random-walk
    # MH on a single row gives the first, numpy the second
    gamma = np.array([0.7, 1.5, 2.5])
    g = Graph(1, np.empty((0, 2)))
    rng = np.random.default_rng(10)
    theta = InverseGamma(2, 1).to_unconstrained()

    def logp(zh):
        st_ = RankCChainState(np.zeros(1), zh[None, :], np.zeros((0, 3), dtype=np.int64), "ig", theta,
                              np.log(gamma))
        # weight and likelihood terms do not depend on z_hat for one isolated node
        return log_joint_rankc(g, st_)

    zh = np.zeros(2)
    cur = logp(zh)
    rows = []
    for it in range(60_000):
        prop = zh + 0.9 * rng.standard_normal(2)
        new = logp(prop)
        if math.log(rng.random()) < new - cur:
            zh, cur = prop, new
        if it >= 2000 and it % 5 == 0:
            rows.append(stick_breaking_forward(zh))
    rows = np.array(rows)
    direct = rng.dirichlet(gamma, size=len(rows))
    for q in range(3):
        assert stats.ks_2samp(rows[:, q], direct[:, q]).pvalue > 0.001


def test_assign_communities_ties_lowest_index():
    V = np.array([[0.5, 0.5], [0.2, 0.8], [0.9, 0.1]])
    assert assign_communities(V).tolist() == [0, 1, 0]


def test_chain_deterministic_and_retains():
    g, _ = sample_prior_graph(120, InverseGamma(1.5, 3.0), np.random.default_rng(11), gamma=[0.5, 0.5])
    sched = Schedule(20, 10, 5)
    cfg = RankCConfig(init_iters=5)
    a = run_chain_rankc(g, "ig", 2, sched, np.random.default_rng(3), cfg, store_v=True)
    b = run_chain_rankc(g, "ig", 2, sched, np.random.default_rng(3), cfg, store_v=True)
    assert a.records() == b.records()
    assert a.iterations == [15, 20]
    assert np.array_equal(a.map_V, b.map_V)
    assert a.map_V.shape == (120, 2)
    assert len(a.V) == 2 and "gamma" in a.records()[0]


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3), st.sampled_from(["ig", "gig"]), st.integers(0, 10_000))
def test_property_collapsed_equals_naive(n, c, kind, seed):
    g, state, oracle = random_instance(np.random.default_rng(seed), n, c, kind)
    ref = naive_log_joint_rankc(g.edges, state.M, state.log_w, state.z_hat, state.gamma, oracle)
    assert abs(log_joint_rankc(g, state) - ref) <= 1e-10 * max(1.0, abs(ref))
