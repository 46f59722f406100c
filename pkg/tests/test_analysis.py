import numpy as np
import pytest
from scipy import stats

import occlab as ol
from occlab.analysis import (NormalTarget, clt_sweep, ks_distance,
                             ks_null_quantiles, lln_sweep, project,
                             rows_to_csv, wasserstein1)
from occlab.deterministic import det_trajectory
from occlab.models import mean_field, spreading_rule
from occlab.simulate import simulate_ensemble


def test_project_trivia():
    rule = ol.constant_rule(5, 0.4)
    ens = simulate_ensemble(rule, np.zeros(5, dtype=np.uint8), 2, 100, seed=0)
    traj = det_trajectory(rule, np.zeros(5), 2)
    assert np.allclose(project(ens, traj.p, np.zeros(5), 2), 0.0)
    vals = project(ens, traj.p, np.ones(5), 1)
    assert abs(vals.mean()) <= 4 * vals.std(ddof=1) / 10 + 1e-12


def test_ks_against_scipy():
    g = np.random.default_rng(1)
    s = g.standard_normal(4000) * 1.2 + 0.1
    target = NormalTarget(0.0, 1.0)
    mine = ks_distance(s, target)
    ref = stats.kstest(s, "norm").statistic
    assert mine.value == pytest.approx(ref, abs=1e-12)
    assert mine.stderr > 0


def test_ks_two_sample_and_identical():
    g = np.random.default_rng(2)
    a, b = g.standard_normal(1500), g.standard_normal(1300) + 0.4
    assert ks_distance(a, b).value == pytest.approx(
        stats.ks_2samp(a, b).statistic, abs=1e-12)
    assert ks_distance(a, a).value == 0.0


def test_ks_degenerate_sample_atom():
    rep = ks_distance(np.zeros(10), NormalTarget(0.0, 1.0))
    assert rep.value == pytest.approx(0.5)


def test_ks_affine_invariance():
    g = np.random.default_rng(3)
    s = g.standard_normal(2000)
    base = ks_distance(s, NormalTarget(0.2, 2.0)).value
    for a, b in [(3.0, -1.0), (0.25, 5.0)]:
        moved = ks_distance(a * s + b, NormalTarget(a * 0.2 + b, a * a * 2.0)).value
        assert moved == pytest.approx(base, abs=1e-12)


def test_w1_translation_properties():
    g = np.random.default_rng(4)
    s = g.standard_normal(50000)
    shifted = wasserstein1(s, NormalTarget(0.1, 1.0)).value
    assert shifted == pytest.approx(0.1, abs=0.01)
    # shifting the sample moves the distance to a fixed target by at most |c|
    base = wasserstein1(s, NormalTarget(0.0, 1.0)).value
    moved = wasserstein1(s + 0.05, NormalTarget(0.0, 1.0)).value
    assert abs(moved - base) <= 0.05 + 1e-9
    # against the equally shifted target the distance is unchanged
    same = wasserstein1(s + 0.05, NormalTarget(0.05, 1.0)).value
    assert same == pytest.approx(base, abs=1e-12)


def test_w1_point_mass_translation_cost():
    rep = wasserstein1(np.full(16, 0.7), NormalTarget(0.0, 0.0))
    assert rep.value == pytest.approx(0.7)


def test_w1_two_sample_against_scipy():
    g = np.random.default_rng(5)
    a, b = g.standard_normal(2000), 0.7 * g.standard_normal(1800) + 0.2
    assert wasserstein1(a, b).value == pytest.approx(
        stats.wasserstein_distance(a, b), abs=1e-12)


def test_w1_one_sample_against_quadrature():
    g = np.random.default_rng(6)
    s = 1.4 * g.standard_normal(800) - 0.3
    target = NormalTarget(0.2, 0.8)
    xs = np.linspace(-15, 15, 300001)
    femp = np.searchsorted(np.sort(s), xs, side="right") / len(s)
    quad = np.trapezoid(np.abs(femp - target.cdf(xs)), xs)
    # the quadrature oracle itself carries O(grid^2) error at the CDF kinks
    assert wasserstein1(s, target).value == pytest.approx(quad, abs=1e-5)


def test_ks_null_calibration(tmp_path, monkeypatch):
    monkeypatch.setenv("OCCLAB_CACHE", str(tmp_path))
    qs = ks_null_quantiles(10 ** 4, n_sims=120, seed=7)
    # distribution-free null: statistic concentrates near 0.43 / sqrt(m)
    assert 0.002 <= qs[0.5] <= 0.02
    g = np.random.default_rng(8)
    observed = ks_distance(g.standard_normal(10 ** 4), NormalTarget(0, 1)).value
    assert qs[0.01] * 0.2 <= observed <= qs[0.99] * 2.0
    # second call hits the cache
    assert ks_null_quantiles(10 ** 4, n_sims=120, seed=7) == qs


def family(n):
    rule = spreading_rule(mean_field(n, rbar=0.5, mu=0.5))
    X0 = np.zeros(n, dtype=np.uint8)
    X0[: n // 2] = 1
    return rule, X0


def test_clt_sweep_distances_shrink():
    rows, summary = clt_sweep(family, lambda n: np.ones(n), t=2, q=float("inf"),
                              n_list=[50, 800], R=20000, seed=9)
    assert [r["n"] for r in rows] == [50, 800]
    assert rows[0]["value"] > rows[1]["value"]
    assert summary["strictly_decreasing"]
    assert summary["slope"] < -0.2
    for r in rows:
        assert np.isfinite(r["bound_c1"])


def test_clt_sweep_bootstrap_scaling():
    rows1, _ = clt_sweep(family, lambda n: np.ones(n), t=1, q=float("inf"),
                         n_list=[100], R=5000, seed=10)
    rows4, _ = clt_sweep(family, lambda n: np.ones(n), t=1, q=float("inf"),
                         n_list=[100], R=20000, seed=10)
    ratio = rows1[0]["stderr"] / rows4[0]["stderr"]
    assert ratio == pytest.approx(2.0, abs=0.6)


def test_lln_sweep_sign_class():
    def classes(n):
        k = 6
        signs = 1.0 - 2.0 * (((np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]) & 1))
        H = np.zeros((2 ** k, n))
        H[:, :k] = signs
        return H

    rows = lln_sweep(family, classes, t=2, n_list=[64, 256], R=3000, seed=11)
    assert rows[0]["q99"] >= rows[0]["q50"] >= 0
    # deviations of averages shrink with n
    assert rows[1]["q99"] < rows[0]["q99"]
    for r in rows:
        assert 0 <= r["exceedance"] <= 1
        assert r["bound_c1"] <= 1.0


def test_singleton_class_reduces_to_mean_deviation():
    def classes(n):
        return np.ones((1, n))

    rows = lln_sweep(family, classes, t=1, n_list=[128], R=2000, seed=12)
    # the sup over a singleton is |mean occupancy deviation|: order n^{-1/2}
    assert 0 < rows[0]["q50"] <= 5 / np.sqrt(128)
    assert rows[0]["class_size"] == 1


def test_rows_to_csv_roundtrip(tmp_path):
    rows = [{"a": 1, "b": 0.5, "c": "x"}, {"a": 2, "b": 1.0 / 3.0, "c": "y"}]
    path = tmp_path / "t.csv"
    rows_to_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "a,b,c"
    assert lines[2].startswith("2,0.33333333333333331,")
