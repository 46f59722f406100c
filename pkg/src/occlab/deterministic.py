"""Deterministic approximation and its long-run diagnostics.

Iterating the rule on a probability vector, p_{t+1} = P_t(p_t), gives the
mean-path companion of the chain.  This module also locates fixed points,
screens the monotonicity conditions under which the fixed point is unique
and globally attracting, and computes spectral radii of linearizations.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import NotConvergedError
from .rules import _check_domain, evaluate_rule, rule_jacobian


@dataclass
class EquilibriumResult:
    p_inf: np.ndarray
    converged: bool
    iterations: int
    residual: float


@dataclass
class DeterministicTrajectory:
    p: np.ndarray                       # (T+1, n)
    jacobians: Optional[np.ndarray] = None  # (T, n, n), step t maps p_t -> p_{t+1}
    equilibrium: Optional[EquilibriumResult] = None

    @property
    def T(self):
        return self.p.shape[0] - 1

    @property
    def n(self):
        return self.p.shape[1]


def det_trajectory(rule, p0, T, want_jacobians=False):
    """Iterate p_{t+1} = P_t(p_t) for T steps from p0 in [0,1]^n."""
    p = np.empty((T + 1, rule.n))
    p[0] = _check_domain(np.asarray(p0, dtype=np.float64), rule.n)
    jac = np.empty((T, rule.n, rule.n)) if want_jacobians else None
    for t in range(T):
        if want_jacobians:
            jac[t] = rule_jacobian(rule, p[t], t)
        p[t + 1] = evaluate_rule(rule, p[t], t)
    return DeterministicTrajectory(p=p, jacobians=jac)


def find_equilibrium(rule, p0, tol=1e-12, max_iter=10 ** 6):
    """Fixed-point iteration for homogeneous rules.

    Returns the iterate once the sup-norm step falls to ``tol``; if the
    budget runs out the best iterate comes back flagged, not raised.
    """
    if not rule.homogeneous:
        raise ValueError("equilibrium search needs a time-homogeneous rule")
    p = np.asarray(p0, dtype=np.float64).copy()
    for it in range(1, max_iter + 1):
        q = evaluate_rule(rule, p, 0)
        stepsize = float(np.abs(q - p).max())
        p = q
        if stepsize <= tol:
            res = float(np.abs(evaluate_rule(rule, p, 0) - p).max())
            return EquilibriumResult(p_inf=p, converged=True, iterations=it,
                                     residual=res)
    res = float(np.abs(evaluate_rule(rule, p, 0) - p).max())
    return EquilibriumResult(p_inf=p, converged=False, iterations=max_iter,
                             residual=res)


@dataclass
class SmithReport:
    """Sampled evidence for the monotone-stability conditions.

    positivity             every sampled first partial is strictly positive
    jacobian_monotonicity  DP(x) >= DP(y) entrywise (with strict somewhere)
                           on every sampled ordered pair x < y
    not_all_absorbing      P_i(1) != 1 for at least one node
    spectral_radius_origin r(J0) with J0 the Jacobian at the origin limit
    pairs_checked          number of ordered pairs sampled

    Sampling cannot certify the conditions on a continuum; a passing report
    is evidence, not proof.
    """

    positivity: bool
    jacobian_monotonicity: bool
    not_all_absorbing: bool
    spectral_radius_origin: float
    pairs_checked: int

    @property
    def all_passed(self):
        return self.positivity and self.jacobian_monotonicity and self.not_all_absorbing


def smith_check(rule, sample_budget=64, seed=0, eps_origin=1e-8):
    """Screen the uniqueness/attraction conditions on sampled ordered pairs."""
    if not rule.homogeneous:
        raise ValueError("the stability screen applies to homogeneous rules")
    n = rule.n
    u = rng.uniforms(rng.derive_seed(seed, "smith-lo"), 0, n,
                     rows=sample_budget, tag=rng.TAG_SAMPLER)
    v = rng.uniforms(rng.derive_seed(seed, "smith-hi"), 1, n,
                     rows=sample_budget, tag=rng.TAG_SAMPLER)
    lo = np.minimum(u, v) * 0.98 + 0.01
    hi = np.maximum(u, v) * 0.98 + 0.01 + 1e-6
    hi = np.minimum(hi, 1.0)

    positivity = True
    monotone = True
    for x, y in zip(lo, hi):
        jx = rule_jacobian(rule, x, 0)
        jy = rule_jacobian(rule, y, 0)
        if jx.min() <= 0:
            positivity = False
        diff = jx - jy
        if diff.min() < -1e-10 or diff.max() <= 1e-14:
            monotone = False

    p_at_one = evaluate_rule(rule, np.ones(n), 0)
    not_absorbing = bool((p_at_one < 1 - 1e-12).any())
    j0 = rule_jacobian(rule, np.full(n, eps_origin), 0)
    return SmithReport(positivity=positivity, jacobian_monotonicity=monotone,
                       not_all_absorbing=not_absorbing,
                       spectral_radius_origin=spectral_radius(j0),
                       pairs_checked=sample_budget)


_EIG_CAP = 2048


def spectral_radius(A, tol=1e-10, max_iter=10 ** 5, seed=0):
    """Largest eigenvalue modulus of a square matrix.

    Dense eigenvalue computation up to n = 2048 (exact to machine
    precision, robust for non-normal matrices); beyond that a normalized
    power iteration on |A| is used, which equals the spectral radius for
    nonnegative matrices and upper-bounds it otherwise.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    if not np.isfinite(A).all():
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    if n <= _EIG_CAP:
        return float(np.abs(np.linalg.eigvals(A)).max())

    B = np.abs(A)
    g = np.random.Generator(np.random.Philox(key=rng.derive_seed(seed, "power")))
    x = g.random(n) + 0.5
    x /= np.linalg.norm(x)
    est = 0.0
    for it in range(max_iter):
        y = B @ x
        norm = np.linalg.norm(y)
        if norm <= tol:
            return 0.0
        x = y / norm
        if abs(norm - est) <= tol * max(1.0, norm):
            return float(norm)
        est = norm
        if it > 0 and it % 5000 == 0:   # stagnation: restart from fresh vector
            x = g.random(n) + 0.5
            x /= np.linalg.norm(x)
    raise NotConvergedError("power iteration did not stabilize")


def trajectory_to_csv(traj, path):
    """CSV export (t, node, p) with full precision."""
    import csv
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "node", "p"])
        for t in range(traj.p.shape[0]):
            for i in range(traj.p.shape[1]):
                wr.writerow([t, i, f"{traj.p[t, i]:.17g}"])
