import numpy as np
import pytest

import occlab as ol
from occlab.errors import NotConvergedError, SingularMatrixError
from occlab.deterministic import det_trajectory
from occlab.gaussian import (GaussianApprox, lyapunov_solve, sigma_form,
                             simulate_gaussian)
from occlab.models import mean_field, spreading_rule
from occlab.rules import injected_variance


def make_approx(n=10, T=4, rbar=0.6, mu=0.4, seed=0):
    rule = spreading_rule(mean_field(n, rbar=rbar, mu=mu, reinfection=True))
    g = np.random.default_rng(seed)
    return rule, GaussianApprox.from_rule(rule, g.random(n) * 0.8 + 0.1, T)


def test_sigma_form_degenerate_and_half():
    assert sigma_form(np.array([0.0, 1.0, 1.0]), np.array([3.0, -1.0, 2.0])) == 0.0
    n = 8
    assert sigma_form(np.full(n, 0.5), np.ones(n)) == pytest.approx(0.25)


def test_sigma_form_polarization():
    g = np.random.default_rng(1)
    p, h, h2 = g.random(12), g.standard_normal(12), g.standard_normal(12)
    lhs = sigma_form(p, h, h2)
    rhs = (sigma_form(p, h + h2) - sigma_form(p, h - h2)) / 4
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_projected_variance_time_zero():
    _, ga = make_approx()
    assert ga.projected_variance(np.ones(10), 0) == 0.0


def test_projected_variance_memoryless_rule():
    # a state-independent rule has zero Jacobian: only the last step counts
    rule = ol.constant_rule(6, 0.3)
    ga = GaussianApprox.from_rule(rule, np.full(6, 0.9), 3)
    h = np.linspace(1, 2, 6)
    expect = ga.noise_form(3, h)
    assert ga.projected_variance(h, 3) == pytest.approx(expect)
    # and the injected noise equals the marginal variance for independent nodes
    assert np.allclose(ga.V[3], 0.3 * 0.7)


def test_projected_variance_agrees_with_covariance_matrix():
    _, ga = make_approx(T=5)
    h = np.linspace(-2, 1, 10)
    for t in range(6):
        quad = h @ ga.covariance(t) @ h / 10
        assert ga.projected_variance(h, t) == pytest.approx(quad, abs=1e-10)


def test_covariance_recursion_properties():
    rule, ga = make_approx(T=5)
    sig = ga.covariances()
    assert np.abs(sig[0]).max() == 0.0
    for t in range(5):
        J = ga.jac(t)
        expect = J @ sig[t] @ J.T + np.diag(injected_variance(rule, ga.base.p[t], t))
        assert np.allclose(sig[t + 1], expect, atol=1e-12)
        eig = np.linalg.eigvalsh(sig[t + 1])
        assert eig.min() >= -1e-10


def test_propagator_cache_consistency():
    _, ga = make_approx(T=6)
    D = ga.propagator
    for (s, t, u) in [(0, 2, 5), (1, 3, 6), (2, 2, 4), (0, 6, 6)]:
        assert np.abs(D(s, t) @ D(t, u) - D(s, u)).max() <= 1e-12
    h = np.linspace(0, 1, 10)
    assert np.allclose(ga.propagate(h, 1, 5), D(1, 5) @ h)


def test_transposed_jacobian_column_budget():
    # max column sum of the Jacobian is at most 1 + alpha
    rule, ga = make_approx(T=4)
    alpha = rule.coeff_oracle(0).alpha
    for t in range(4):
        colsum = np.abs(ga.jac(t)).sum(axis=0).max()
        assert colsum <= 1 + alpha + 1e-12


def test_cross_covariance_edges():
    _, ga = make_approx(T=4)
    h = np.linspace(1, 2, 10)
    h2 = np.linspace(-1, 1, 10)
    assert ga.cross_covariance(0, 3, h, h2) == 0.0
    assert ga.cross_covariance(2, 2, h, h) == pytest.approx(
        ga.projected_variance(h, 2))
    assert ga.cross_covariance(1, 3, h, h2) == pytest.approx(
        ga.cross_covariance(3, 1, h2, h))


def test_simulate_gaussian_degenerate_noise_is_deterministic():
    # at an absorbing corner the injected noise vanishes and Z tracks p exactly
    rule = ol.linear_rule(0.5 * np.eye(4))
    ga = GaussianApprox.from_rule(rule, np.zeros(4), 3)
    assert np.abs(ga.V).max() == 0.0
    Z = simulate_gaussian(ga, 8, seed=0)
    assert np.abs(Z - ga.base.p[None, :, :]).max() == 0.0


def test_simulate_gaussian_matches_covariances():
    _, ga = make_approx(n=8, T=3)
    Z = simulate_gaussian(ga, 200000, seed=4)
    for t in (1, 3):
        emp = np.cov(Z[:, t, :].T)
        sig = ga.covariance(t)
        scale = np.sqrt(np.outer(np.diag(sig), np.diag(sig))) + 1e-12
        # entrywise within 4 rough standard errors of a covariance estimate
        bar = 4 * (scale + np.abs(sig)) / np.sqrt(200000)
        assert (np.abs(emp - sig) <= bar).all()


def test_lyapunov_zero_jacobian():
    V = np.diag([0.1, 0.2, 0.3])
    res = lyapunov_solve(np.zeros((3, 3)), V)
    assert np.allclose(res.Q, V)


def test_lyapunov_scalar_geometric_series():
    res = lyapunov_solve(0.5 * np.eye(4), np.eye(4))
    assert np.allclose(res.Q, (4.0 / 3.0) * np.eye(4))
    assert res.residual <= 1e-10


def test_lyapunov_binary_equilibrium_gives_zero():
    J = np.random.default_rng(0).random((5, 5)) * 0.15
    p_inf = np.array([0.0, 1.0, 0.0, 1.0, 1.0])
    res = lyapunov_solve(J, np.diag(p_inf * (1 - p_inf)))
    assert np.abs(res.Q).max() <= 1e-14


def test_lyapunov_direct_vs_iterative():
    g = np.random.default_rng(5)
    for _ in range(5):
        n = int(g.integers(2, 12))
        G = g.standard_normal((n, n))
        J = 0.85 * G / np.abs(np.linalg.eigvals(G)).max()
        V = np.diag(g.random(n))
        direct = lyapunov_solve(J, V, method="direct")
        iterative = lyapunov_solve(J, V, method="iterative")
        assert np.abs(direct.Q - iterative.Q).max() <= 1e-8
        assert direct.residual <= 1e-10


def test_lyapunov_singular_pair_detected():
    J = np.diag([2.0, 0.5])  # eigenvalue product exactly one
    with pytest.raises(SingularMatrixError):
        lyapunov_solve(J, np.eye(2), method="direct")
    with pytest.raises(NotConvergedError):
        lyapunov_solve(J, np.eye(2), method="iterative")


def test_covariance_converges_to_lyapunov_solution():
    rule = spreading_rule(mean_field(8, rbar=0.9, mu=0.3, reinfection=True))
    from occlab.deterministic import find_equilibrium
    eq = find_equilibrium(rule, np.full(8, 0.5))
    assert eq.converged
    J = ol.rule_jacobian(rule, eq.p_inf)
    V = np.diag(injected_variance(rule, eq.p_inf))
    Q = lyapunov_solve(J, V).Q
    traj = det_trajectory(rule, eq.p_inf, 200, want_jacobians=True)
    ga = GaussianApprox(rule, traj)
    assert np.abs(ga.covariance(200) - Q).max() <= 1e-6


def test_covariance_diverges_for_unstable_jacobian():
    J = 1.05 * np.eye(3)
    V = np.eye(3)
    sig = np.zeros((3, 3))
    norms = []
    for _ in range(60):
        sig = J @ sig @ J.T + V
        norms.append(np.abs(sig).max())
    assert norms[-1] > norms[30] > norms[10]
    assert norms[-1] > 100
