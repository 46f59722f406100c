"""Distributional diagnostics against the Gaussian companion.

Projections of simulated ensembles, exact empirical Kolmogorov and
1-Wasserstein distances to a normal target (or a second sample) with
bootstrap standard errors, and the convergence sweeps that tabulate
distance versus system size against the closed-form bounds.
"""

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from . import rng
from .errors import TooLargeError
from .bounds import (clt_rate_bound, concentration_bound,
                     concentration_threshold, rademacher_mc)
from .deterministic import det_trajectory
from .gaussian import GaussianApprox
from .rules import coefficient_schedule
from .simulate import simulate_projections

BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class NormalTarget:
    mean: float
    variance: float

    @property
    def sd(self):
        return math.sqrt(self.variance)

    def cdf(self, x):
        if self.variance == 0:
            return (np.asarray(x) >= self.mean).astype(np.float64)
        return ndtr((np.asarray(x) - self.mean) / self.sd)


@dataclass
class DistanceReport:
    metric: str                   # 'kolmogorov' or 'wasserstein1'
    sample_size: int
    target: str
    value: float
    stderr: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("distances are nonnegative")
        if self.metric == "kolmogorov" and self.value > 1 + 1e-12:
            raise ValueError("a Kolmogorov distance cannot exceed 1")


def project(states, det_p, h, t):
    """Per-replicate projections n^{-1/2} sum_i h_i (X_{i,t} - p_{i,t}).

    ``states`` is an ensemble bit tensor (R, T+1, n) or an object exposing
    one as ``.states``.
    """
    arr = getattr(states, "states", states)
    h = np.asarray(h, dtype=np.float64)
    n = arr.shape[-1]
    dev = arr[:, t, :].astype(np.float64) - np.asarray(det_p)[t][None, :]
    return dev @ h / math.sqrt(n)


def _ks_one_sample(sorted_x, target):
    m = len(sorted_x)
    F = target.cdf(sorted_x)
    grid = np.arange(1, m + 1) / m
    return float(max((grid - F).max(), (F - (grid - 1 / m)).max(), 0.0))


def _ks_two_sample(x, y):
    x = np.sort(x)
    y = np.sort(y)
    pooled = np.concatenate([x, y])
    f1 = np.searchsorted(x, pooled, side="right") / len(x)
    f2 = np.searchsorted(y, pooled, side="right") / len(y)
    return float(np.abs(f1 - f2).max())


def _w1_one_sample(sorted_x, target):
    """Exact integral of |F_emp - F_target| for a normal target."""
    m = len(sorted_x)
    if target.variance == 0:
        return float(np.abs(sorted_x - target.mean).mean())
    sd = target.sd

    def big_i(z):
        # antiderivative of the standard normal CDF
        return z * ndtr(z) + np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    z = (sorted_x - target.mean) / sd
    total = sd * big_i(z[0])                                   # lower tail
    zm = z[-1]
    phi_zm = math.exp(-0.5 * zm * zm) / math.sqrt(2 * math.pi)
    total += sd * (phi_zm - zm * (1.0 - ndtr(zm)))             # upper tail
    levels = np.arange(1, m) / m
    zq = ndtri(levels)                                          # crossing points
    za, zb = z[:-1], z[1:]
    zc = np.clip(zq, za, zb)
    ia, ib, ic = big_i(za), big_i(zb), big_i(zc)
    # int_a^b |c - Phi| = c(zc - za) - (Ic - Ia) + (Ib - Ic) - c(zb - zc), x = mu + sd z
    total += sd * float(np.sum(levels * (zc - za) - (ic - ia)
                               + (ib - ic) - levels * (zb - zc)))
    return float(total)


def _w1_two_sample(x, y):
    x = np.sort(x)
    y = np.sort(y)
    pooled = np.sort(np.concatenate([x, y]))
    gaps = np.diff(pooled)
    f1 = np.searchsorted(x, pooled[:-1], side="right") / len(x)
    f2 = np.searchsorted(y, pooled[:-1], side="right") / len(y)
    return float((np.abs(f1 - f2) * gaps).sum())


def _bootstrap(sample, stat, seed):
    m = len(sample)
    vals = np.empty(BOOTSTRAP_RESAMPLES)
    g = np.random.Generator(np.random.Philox(key=rng.derive_seed(seed, "bootstrap")))
    for b in range(BOOTSTRAP_RESAMPLES):
        vals[b] = stat(np.sort(sample[g.integers(0, m, size=m)]))
    return float(vals.std(ddof=1))


def ks_distance(sample, target, seed=0):
    """Exact sup gap between the empirical CDF and the target CDF."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size < 2:
        raise ValueError("need at least two sample points")
    if isinstance(target, NormalTarget):
        val = _ks_one_sample(np.sort(sample), target)
        se = _bootstrap(sample, lambda s: _ks_one_sample(s, target), seed)
        label = f"normal(mean={target.mean:.6g}, var={target.variance:.6g})"
    else:
        other = np.asarray(target, dtype=np.float64)
        val = _ks_two_sample(sample, other)
        se = _bootstrap(sample, lambda s: _ks_two_sample(s, other), seed)
        label = f"sample(size={len(other)})"
    return DistanceReport(metric="kolmogorov", sample_size=len(sample),
                          target=label, value=val, stderr=se)


def wasserstein1(sample, target, seed=0):
    """Exact integral of |F_emp - F_target| (area between the CDFs)."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size < 2:
        raise ValueError("need at least two sample points")
    if isinstance(target, NormalTarget):
        val = _w1_one_sample(np.sort(sample), target)
        se = _bootstrap(sample, lambda s: _w1_one_sample(s, target), seed)
        label = f"normal(mean={target.mean:.6g}, var={target.variance:.6g})"
    else:
        other = np.asarray(target, dtype=np.float64)
        val = _w1_two_sample(sample, other)
        se = _bootstrap(sample, lambda s: _w1_two_sample(s, other), seed)
        label = f"sample(size={len(other)})"
    return DistanceReport(metric="wasserstein1", sample_size=len(sample),
                          target=label, value=val, stderr=se)


# ---------------------------------------------------------------------------
# null calibration cache for the Kolmogorov statistic
# ---------------------------------------------------------------------------

def _cache_dir():
    base = os.environ.get("OCCLAB_CACHE")
    path = Path(base) if base else Path.home() / ".cache" / "occlab"
    path.mkdir(parents=True, exist_ok=True)
    return path


def ks_null_quantiles(sample_size, n_sims=400, seed=2024):
    """Null quantiles of the one-sample Kolmogorov statistic, cached on disk."""
    cache = _cache_dir() / f"ks_null_m{sample_size}_s{n_sims}_{seed}.npy"
    if cache.exists():
        vals = np.load(cache)
    else:
        g = np.random.Generator(np.random.Philox(key=rng.derive_seed(seed, "ks-null")))
        target = NormalTarget(0.0, 1.0)
        vals = np.empty(n_sims)
        for i in range(n_sims):
            vals[i] = _ks_one_sample(np.sort(g.standard_normal(sample_size)), target)
        np.save(cache, vals)
    return {q: float(np.quantile(vals, q)) for q in (0.01, 0.5, 0.95, 0.99)}


# ---------------------------------------------------------------------------
# convergence sweeps
# ---------------------------------------------------------------------------

SWEEP_HEADER = ["model_id", "n", "t", "q", "metric", "value", "stderr", "bound_c1"]


def _loglog_slope(ns, values):
    if len(ns) < 2:
        return float("nan")
    lx = np.log(np.asarray(ns, dtype=np.float64))
    ly = np.log(np.asarray(values, dtype=np.float64))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def clt_sweep(family, h_family, t, q, n_list, R, seed, model_id="model"):
    """Distance of projected fluctuations to their Gaussian limit across n.

    ``family(n)`` returns (rule, X0); ``h_family(n)`` the projection vector.
    ``q`` selects the metric: 1 for Wasserstein, inf for Kolmogorov.  Rows
    follow SWEEP_HEADER; the summary carries the log-log slope and a
    monotonicity flag.
    """
    rows = []
    for n in n_list:
        rule, X0 = family(n)
        h = np.asarray(h_family(n), dtype=np.float64)
        traj = det_trajectory(rule, X0.astype(np.float64), t, want_jacobians=True)
        approx = GaussianApprox(rule, traj)
        res = simulate_projections(rule, X0, t, R, rng.derive_seed(seed, f"clt{n}"),
                                   h=h, p_traj=traj.p)
        sample = res["proj"][:, t]
        target = NormalTarget(0.0, approx.projected_variance(h, t))
        rep = (ks_distance if math.isinf(q) else wasserstein1)(sample, target, seed=seed)
        coeffs = coefficient_schedule(rule, t)
        try:
            bound = clt_rate_bound(coeffs, h, q, approx, t).value
        except Exception:
            bound = float("nan")
        rows.append({"model_id": model_id, "n": n, "t": t, "q": q,
                     "metric": rep.metric, "value": rep.value,
                     "stderr": rep.stderr, "bound_c1": bound})
    values = [r["value"] for r in rows]
    summary = {
        "slope": _loglog_slope(n_list, values),
        "strictly_decreasing": all(a > b for a, b in zip(values, values[1:])),
    }
    return rows, summary


def _class_support(H):
    cols = np.nonzero(np.abs(H).sum(axis=0))[0]
    return cols


def lln_sweep(family, class_family, t, n_list, R, seed, x=math.e ** 2,
              quantiles=(0.5, 0.9, 0.99), model_id="model"):
    """Class-uniform deviation sweep against the concentration bound.

    ``class_family(n)`` returns the projection class as an (m, n) array
    (at most 1e6 vectors).  Per replicate the exact supremum of
    |<Xbar_t - pbar_t, h>| over the class is found by enumeration; the
    table reports deviation quantiles, the guarded threshold and the
    bound value at the chosen x.
    """
    rows = []
    for n in n_list:
        rule, X0 = family(n)
        H = np.atleast_2d(np.asarray(class_family(n), dtype=np.float64))
        if H.shape[0] > 10 ** 6:
            raise TooLargeError("projection class exceeds 1e6 vectors")
        support = _class_support(H)
        traj = det_trajectory(rule, X0.astype(np.float64), t)
        sub_seed = rng.derive_seed(seed, f"lln{n}")
        if len(support) <= 64:
            res = simulate_projections(rule, X0, t, R, sub_seed,
                                       h=np.ones(n), p_traj=traj.p,
                                       keep_nodes=support)
            dev = (res["nodes"][:, t, :].astype(np.float64)
                   - traj.p[t][support][None, :]) / n
            sups = np.abs(dev @ H[:, support].T).max(axis=1)
        else:
            from .simulate import simulate_ensemble
            if n > 4096:
                raise TooLargeError(
                    "dense projection classes are limited to n <= 4096")
            ens = simulate_ensemble(rule, X0, t, R, sub_seed)
            dev = (ens.states[:, t, :].astype(np.float64) - traj.p[t][None, :]) / n
            sups = np.abs(dev @ H.T).max(axis=1)

        coeffs = coefficient_schedule(rule, t)
        H_sup = float(np.abs(H).max())
        rad, rad_se = rademacher_mc(H, 20000, rng.derive_seed(seed, f"rad{n}"))
        rep = concentration_bound(coeffs, H_sup, rad, t, n, x)
        thresh = concentration_threshold(coeffs, H_sup, rad, t, n, x)
        exceed = float((sups > thresh).mean())
        row = {"model_id": model_id, "n": n, "t": t, "x": x,
               "class_size": H.shape[0], "rademacher": rad,
               "rademacher_se": rad_se, "threshold": thresh,
               "bound_c1": rep.value, "exceedance": exceed}
        for qq in quantiles:
            row[f"q{int(qq * 100)}"] = float(np.quantile(sups, qq))
        rows.append(row)
    return rows


def rows_to_csv(rows, path, header=None):
    """Write a list of dicts as CSV with 17-significant-digit floats."""
    if not rows:
        raise ValueError("no rows to write")
    header = header or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            out = []
            for key in header:
                v = row.get(key, "")
                out.append(f"{v:.17g}" if isinstance(v, float) else v)
            wr.writerow(out)
