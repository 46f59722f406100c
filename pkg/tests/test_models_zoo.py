import numpy as np
import pytest

import occlab as ol
from occlab.deterministic import det_trajectory
from occlab.models import (DomanyKinzel, dk_device_time, dk_exact_mean_zeta2,
                           dk_rule, from_weighted_graph, mean_field,
                           spreading_rule, SpreadingModel)
from occlab.simulate import exact_law, law_mean, simulate_projections, state_table


# ---------------------------------------------------------------------------
# spreading
# ---------------------------------------------------------------------------

def test_spreading_zero_reactions_pure_death():
    model = SpreadingModel(R_matrix=np.zeros((4, 4)), mu=0.3)
    rule = spreading_rule(model)
    x = np.array([1.0, 1.0, 0.0, 1.0])
    p = ol.evaluate_rule(rule, x)
    assert np.allclose(p, x * 0.7)


def test_spreading_single_factor_example():
    model = SpreadingModel(R_matrix=np.array([[0.0, 0.2], [0.2, 0.0]]), mu=0.5)
    rule = spreading_rule(model)
    surv, col = rule.split
    x = np.array([1.0, 1.0])
    assert col(x, 0)[0] == pytest.approx(0.2)
    assert surv(x, 0)[0] == pytest.approx(0.5)


def test_spreading_alpha_is_max_column_sum():
    g = np.random.default_rng(0)
    R = g.random((7, 7)) * 0.3
    np.fill_diagonal(R, 0.0)
    model = SpreadingModel(R_matrix=R, mu=0.4)
    cs = spreading_rule(model).coeff_oracle(0)
    assert cs.alpha == pytest.approx(R.sum(axis=0).max())
    assert cs.beta == pytest.approx(np.sqrt((R ** 2).sum() / 7))
    G = (R + np.eye(7)).T @ (R + np.eye(7)) - np.eye(7)
    assert cs.big_gamma == pytest.approx(G.max())
    assert cs.delta == 0.0 and cs.gamma == 0.0


def test_weighted_graph_reactions():
    g = np.random.default_rng(1)
    W = g.random((6, 6)); np.fill_diagonal(W, 0.0)
    model = from_weighted_graph(W, contacts=3.0, mu=0.5)
    assert model.R_matrix.max() == pytest.approx(0.9)
    assert np.diag(model.R_matrix).max() == 0.0


def test_exponential_and_product_forms_agree_on_binary():
    R = mean_field(6, rbar=0.8, mu=0.4).R_matrix
    prod = spreading_rule(SpreadingModel(R_matrix=R, mu=0.4, reinfection=True))
    expf = spreading_rule(SpreadingModel(R_matrix=R, mu=0.4, reinfection=True,
                                         domain_form="exponential"))
    corners = state_table(6)
    assert np.abs(prod.evaluate(corners, 0) - expf.evaluate(corners, 0)).max() <= 1e-12


def test_mean_field_fast_path_matches_dense_path():
    n = 30
    model = mean_field(n, rbar=0.7, mu=0.5, reinfection=True)
    dense = SpreadingModel(R_matrix=model.R_matrix.copy() +
                           np.diag(np.zeros(n)), mu=0.5, reinfection=True)
    object.__setattr__(dense, "_uniform_r", None)  # force the generic path
    ra, rb = spreading_rule(model), spreading_rule(dense)
    g = np.random.default_rng(2)
    xs = g.random((40, n))
    assert np.abs(ra.evaluate(xs, 0) - rb.evaluate(xs, 0)).max() <= 1e-12
    bits = (xs > 0.5).astype(float)
    assert np.abs(ra.evaluate(bits, 0) - rb.evaluate(bits, 0)).max() <= 1e-12


# ---------------------------------------------------------------------------
# torus automaton
# ---------------------------------------------------------------------------

def test_dk_all_ones_value():
    rule = dk_rule(DomanyKinzel(n=8, q1=0.4, q2=0.7), iid_start=False)
    assert np.allclose(ol.evaluate_rule(rule, np.ones(8)), 0.3)


def test_dk_closed_form_degenerate_cases():
    assert dk_exact_mean_zeta2(DomanyKinzel(n=50, q1=0.3, q2=0.6)) == 0.0
    assert dk_exact_mean_zeta2(DomanyKinzel(n=50, q1=0.3, q2=0.8, p0=0.0)) == 0.0
    assert dk_exact_mean_zeta2(DomanyKinzel(n=50, q1=0.3, q2=0.8, p0=1.0)) == 0.0


def dk_exact_law_mean(model):
    rule = dk_rule(model, iid_start=True)
    X0 = np.zeros(model.n, dtype=np.uint8)
    t = dk_device_time(2)
    laws = exact_law(rule, X0, t)
    traj = det_trajectory(rule, X0.astype(float), t)
    return float((law_mean(laws[t], model.n) - traj.p[t]).sum() / np.sqrt(model.n))


def test_dk_closed_form_matches_exact_law():
    g = np.random.default_rng(3)
    for _ in range(6):
        n = int(g.integers(4, 7))
        q2, p0, frac = g.random(3)
        model = DomanyKinzel(n=n, q1=frac * q2, q2=q2, p0=p0)
        assert dk_exact_law_mean(model) == pytest.approx(
            dk_exact_mean_zeta2(model), abs=1e-12)


def test_dk_closed_form_matches_monte_carlo_n100():
    model = DomanyKinzel(n=100, q1=0.4, q2=0.7, p0=0.5)
    rule = dk_rule(model, iid_start=True)
    X0 = np.zeros(100, dtype=np.uint8)
    t = dk_device_time(2)
    traj = det_trajectory(rule, X0.astype(float), t)
    R = 10 ** 5
    res = simulate_projections(rule, X0, t, R, seed=13, h=np.ones(100),
                               p_traj=traj.p)
    sample = res["proj"][:, t]
    se = sample.std(ddof=1) / np.sqrt(R)
    assert abs(sample.mean() - dk_exact_mean_zeta2(model)) <= 4 * se


def test_dk_mean_grows_like_sqrt_n():
    base = DomanyKinzel(n=25, q1=0.4, q2=0.7, p0=0.5)
    big = DomanyKinzel(n=100, q1=0.4, q2=0.7, p0=0.5)
    assert dk_exact_mean_zeta2(big) == pytest.approx(
        2 * dk_exact_mean_zeta2(base))
