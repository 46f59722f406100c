"""Contact-based epidemic spreading on a network.

Node i is infected in one step by infected node j with probability r_ij
(the reaction matrix, zero diagonal), contacts independent, so

    C_i(x) = 1 - prod_{j != i} (1 - r_ij x_j).

Recovery happens with probability mu; with reinfection allowed before the
next census the survival function is S_i(x) = 1 - mu [1 - C_i(x)],
otherwise simply S_i = 1 - mu.

An alternative extension of the same binary chain to the solid cube writes
both functions through exponentials of weighted sums; it agrees with the
product form on binary states and exposes rank-one second derivatives.

Analytic coefficient summaries: alpha is the max column sum of R, the
mean-square coefficient is ||R||_F / sqrt(n), the mixed-second budget is
the largest element of (R+I)^T (R+I) - I, the pure-second and third
budgets vanish (each local rule is multilinear).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..rules import CoefficientSet, OccupancyRule
from ..deterministic import (det_trajectory, find_equilibrium, spectral_radius)


@dataclass(frozen=True)
class SpreadingModel:
    R_matrix: np.ndarray          # (n, n) in [0, 1), zero diagonal
    mu: float                     # recovery probability
    reinfection: bool = False
    domain_form: str = "product"  # 'product' or 'exponential'

    def __post_init__(self):
        R = np.asarray(self.R_matrix, dtype=np.float64)
        object.__setattr__(self, "R_matrix", R)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("reaction matrix must be square")
        if np.abs(np.diag(R)).max(initial=0.0) != 0.0:
            raise ValueError("reaction matrix must have zero diagonal")
        if R.min() < 0 or R.max() >= 1:
            raise ValueError("reaction probabilities must lie in [0, 1)")
        if not 0 <= self.mu <= 1:
            raise ValueError("recovery probability must lie in [0, 1]")
        if self.domain_form not in ("product", "exponential"):
            raise ValueError("domain_form must be 'product' or 'exponential'")
        # uniform all-to-all reactions admit an O(n) update; detect once
        off = R[~np.eye(R.shape[0], dtype=bool)]
        uniform = float(off[0]) if off.size and (off == off[0]).all() else None
        object.__setattr__(self, "_uniform_r", uniform)

    @property
    def n(self):
        return self.R_matrix.shape[0]


def mean_field(n, rbar, mu, reinfection=False):
    """Uniform all-to-all reactions r_ij = rbar/n off the diagonal."""
    R = np.full((n, n), rbar / n)
    np.fill_diagonal(R, 0.0)
    return SpreadingModel(R_matrix=R, mu=mu, reinfection=reinfection)


def from_weighted_graph(W, contacts, mu, reinfection=False, prop_const=None):
    """Reaction matrix from a weighted adjacency matrix and contact rates.

    r_ij is proportional to 1 - (1 - w_ij / sum_k w_ik)^{lambda_i}; the
    proportionality constant defaults to the value making max r_ij = 0.9.
    """
    W = np.asarray(W, dtype=np.float64)
    lam = np.broadcast_to(np.asarray(contacts, dtype=np.float64), (W.shape[0],))
    row = W.sum(axis=1, keepdims=True)
    frac = np.divide(W, row, out=np.zeros_like(W), where=row > 0)
    base = 1.0 - (1.0 - frac) ** lam[:, None]
    np.fill_diagonal(base, 0.0)
    if prop_const is None:
        top = base.max()
        prop_const = 0.9 / top if top > 0 else 1.0
    R = prop_const * base
    if R.max() >= 1:
        raise ValueError("proportionality constant pushes reactions to 1 or above")
    return SpreadingModel(R_matrix=R, mu=mu, reinfection=reinfection)


def _is_binary(x):
    return bool(((x == 0.0) | (x == 1.0)).all())


def _survive_product(model, x):
    """prod_{j != i} (1 - r_ij x_j) for each i, batched over leading axes."""
    R = model.R_matrix
    n = model.n
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    flat = x.reshape(-1, n)
    if model._uniform_r is not None:
        lg = np.log1p(-model._uniform_r * flat)
        out = np.exp(lg.sum(axis=1, keepdims=True) - lg)
    elif _is_binary(flat):
        # on binary states log(1 - r_ij x_j) = x_j log(1 - r_ij): one matmul
        out = np.exp(flat @ np.log1p(-R).T)
    else:
        out = np.empty_like(flat)
        for lo in range(0, flat.shape[0], 64):   # keep the n^2 broadcast small
            xb = flat[lo:lo + 64]
            out[lo:lo + 64] = np.exp(
                np.log1p(-R[None, :, :] * xb[:, None, :]).sum(axis=2))
    return out.reshape(shape)


def spreading_rule(model):
    """Occupancy rule with analytic split, Jacobian and coefficients."""
    R = model.R_matrix
    n = model.n
    mu = model.mu

    if model.domain_form == "exponential":
        S_mat = n * np.abs(np.log1p(-R))

        def prod_factor(x, t=0):
            x = np.asarray(x, dtype=np.float64)
            return np.exp(-(x @ S_mat.T) / n)
    else:
        def prod_factor(x, t=0):
            return _survive_product(model, x)

    def colonize(x, t=0):
        return 1.0 - prod_factor(x)

    if model.reinfection:
        def survive(x, t=0):
            return 1.0 - mu * prod_factor(x)
    else:
        def survive(x, t=0):
            x = np.asarray(x, dtype=np.float64)
            return np.broadcast_to(1.0 - mu, x.shape).copy()

    def evaluate(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return x * survive(x) + (1.0 - x) * colonize(x)

    def jacobian(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        if model.domain_form == "exponential":
            pf = prod_factor(x)
            inner = S_mat / n * pf[:, None]          # -d_j prod_factor
            if model.reinfection:
                jac = (mu * x[:, None] + (1.0 - x)[:, None]) * inner
                diag = (1.0 - mu * pf) - (1.0 - pf)
            else:
                jac = (1.0 - x)[:, None] * inner
                diag = (1.0 - mu) - (1.0 - pf)
            jac[np.arange(n), np.arange(n)] = diag
            return jac
        # product form: d_j prod_{k != i}(1 - r_ik x_k) = -r_ij * deleted product
        # (1 - r_ij x_j >= 1 - r_ij > 0, so dividing the factor out is safe)
        pf = _survive_product(model, x)
        partial = pf[:, None] / (1.0 - R * x[None, :])
        inner = R * partial                           # -d_j prod_factor, (i, j)
        if model.reinfection:
            jac = (mu * x[:, None] + (1.0 - x)[:, None]) * inner
            diag = (1.0 - mu * pf) - (1.0 - pf)
        else:
            jac = (1.0 - x)[:, None] * inner
            diag = (1.0 - mu) - (1.0 - pf)
        jac[np.arange(n), np.arange(n)] = diag
        return jac

    def coeff_oracle(t):
        off = ~np.eye(n, dtype=bool)
        G = (R + np.eye(n)).T @ (R + np.eye(n)) - np.eye(n)
        return CoefficientSet(
            alpha=float(np.abs(R).sum(axis=0).max()),
            beta=float(math.sqrt((R[off] ** 2).sum() / n)),
            big_gamma=float(G.max()),
            gamma=0.0,
            delta=0.0)

    return OccupancyRule(
        n=n, evaluate=evaluate, split=(survive, colonize), jacobian=jacobian,
        coeff_oracle=coeff_oracle, homogeneous=True,
        name=f"spreading(n={n},mu={mu},reinf={model.reinfection},{model.domain_form})")


@dataclass
class ThresholdReport:
    reaction_radius: float
    mu: float
    verdict: str                     # 'extinction' | 'endemic-possible' | 'no-recovery'
    p_inf: Optional[np.ndarray] = None
    residual: float = float("nan")
    equilibrium_radius: float = float("nan")


def epidemic_threshold(model, horizon=500, tol=1e-10):
    """Classify the long-run phase by the reaction spectral radius versus mu.

    Extinction (reaction radius <= mu) is verified by iterating the
    deterministic recursion from full occupancy; otherwise a positive
    equilibrium is located by fixed-point iteration.
    """
    rule = spreading_rule(model)
    r_R = spectral_radius(model.R_matrix)
    if model.mu == 0 and model.R_matrix.max() > 0:
        return ThresholdReport(reaction_radius=r_R, mu=0.0, verdict="no-recovery")
    if r_R <= model.mu:
        traj = det_trajectory(rule, np.ones(model.n), horizon)
        tail = float(np.abs(traj.p[-1]).max())
        return ThresholdReport(reaction_radius=r_R, mu=model.mu,
                               verdict="extinction", residual=tail)
    eq = find_equilibrium(rule, np.full(model.n, 0.5), tol=tol)
    from ..rules import rule_jacobian
    j_inf = rule_jacobian(rule, eq.p_inf, 0)
    return ThresholdReport(reaction_radius=r_R, mu=model.mu,
                           verdict="endemic-possible", p_inf=eq.p_inf,
                           residual=eq.residual,
                           equilibrium_radius=spectral_radius(j_inf))
