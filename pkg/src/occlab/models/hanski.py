"""Patch-occupancy metapopulation with distance-weighted colonization.

Patch i sits at z_i in a compact habitat (the unit interval by default).
It survives one step with probability s(z_i), and an empty patch is
colonized with probability c(conn_i), where the connectivity

    conn_i = sum_{j != i} (a(z_j) / n) D(z_i, z_j) x_j

weighs occupied patches by size density a and dispersal kernel D.

As n grows with equidistributed locations, the empirical occupancy measure
has a deterministic limit whose density rho_t (with respect to the habitat
measure) obeys

    rho_{t+1}(z) = s(z) rho_t(z) + c[C_t(z)] (1 - rho_t(z)),
    C_t(z) = integral a(w) D(z, w) rho_t(w) dw,

with a companion variance density v_t and a linear transfer operator J_t
acting on test functions; all three are advanced here on a quadrature grid
(left-endpoint rectangles on [0, 1]).

Defaults (our choice, not canonical): habitat [0, 1] with uniform measure,
c(y) = y / (1 + y), D(z, w) = exp(-|z - w| / ell).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError
from ..rules import CoefficientSet, OccupancyRule


def default_colonization(y):
    return y / (1.0 + y)


def default_colonization_prime(y):
    return 1.0 / (1.0 + y) ** 2


@dataclass(frozen=True)
class HanskiModel:
    z: np.ndarray                                   # (n,) patch locations in [0, 1]
    a: Callable = field(default=lambda z: np.ones_like(z))   # weight density
    s: Callable = field(default=lambda z: np.full_like(z, 0.8))  # survival prob
    c: Callable = staticmethod(default_colonization)
    c_prime: Optional[Callable] = staticmethod(default_colonization_prime)
    kernel_scale: float = 0.25                      # ell in exp(-|z - w| / ell)
    kernel: Optional[Callable] = None               # overrides the default D
    # sup bounds for |c'|, |c''|, |c'''| on the reachable connectivity range
    c_derivative_sups: tuple = (1.0, 2.0, 6.0)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        object.__setattr__(self, "z", z)
        if z.min() < 0 or z.max() > 1:
            raise ValueError("patch locations must lie in [0, 1]")

    @property
    def n(self):
        return len(self.z)

    def dispersal(self, z1, z2):
        if self.kernel is not None:
            return self.kernel(z1, z2)
        return np.exp(-np.abs(z1 - z2) / self.kernel_scale)


def equidistributed(n, **kw):
    """Model with n midpoint-equidistributed patches on [0, 1]."""
    return HanskiModel(z=(np.arange(n) + 0.5) / n, **kw)


def _connectivity_matrix(model):
    """M[i, j] = a(z_j) D(z_i, z_j) / n with zero diagonal."""
    z = model.z
    M = model.dispersal(z[:, None], z[None, :]) * model.a(z)[None, :] / model.n
    np.fill_diagonal(M, 0.0)
    return M


def hanski_rule(model):
    """Occupancy rule with analytic split, Jacobian and coefficient budget."""
    n = model.n
    M = _connectivity_matrix(model)
    s_vec = np.asarray(model.s(model.z), dtype=np.float64)
    if s_vec.min() < 0 or s_vec.max() > 1:
        raise ValueError("survival probabilities must lie in [0, 1]")

    def survive(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(s_vec, x.shape).copy()

    def colonize(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return model.c(x @ M.T)

    def evaluate(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return x * s_vec + (1.0 - x) * colonize(x)

    def jacobian(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        conn = x @ M.T
        if model.c_prime is None:
            raise ValueError("model lacks c_prime; use the finite-difference path")
        J = (1.0 - x)[:, None] * model.c_prime(conn)[:, None] * M
        J[np.arange(n), np.arange(n)] = s_vec - model.c(conn)
        return J

    c1, c2, c3 = model.c_derivative_sups

    def coeff_oracle(t):
        # sup-norm budgets: |d_j P_i| <= c1 M_ij, |d_j d_k P_i| <= c2 M_ij M_ik
        # (plus c1 M_jk when i is j or k), |d_j d_k^2 P_i| <= c3 M_ij M_ik^2
        # with the matching one- and two-index boundary terms
        alpha = float(c1 * M.sum(axis=0).max())
        off = ~np.eye(n, dtype=bool)
        beta = float(c1 * math.sqrt((M[off] ** 2).sum() / n))
        big_gamma = float((c2 * (M.T @ M) + c1 * (M + M.T)).max())
        gamma = float(c2 * (M ** 2).sum() / n)
        m2 = M ** 2
        delta = float((c3 * M.T @ m2.sum(axis=1) + c2 * m2.sum(axis=1)).max())
        return CoefficientSet(alpha=alpha, beta=beta, big_gamma=big_gamma,
                              gamma=gamma, delta=delta)

    return OccupancyRule(
        n=n, evaluate=evaluate, split=(survive, colonize), jacobian=jacobian,
        coeff_oracle=coeff_oracle, homogeneous=True,
        name=f"hanski(n={n})")


# ---------------------------------------------------------------------------
# limiting measure recursions on a quadrature grid
# ---------------------------------------------------------------------------

@dataclass
class HanskiLimit:
    grid: np.ndarray          # (G,) quadrature nodes
    weights: np.ndarray       # (G,) quadrature weights summing to 1
    rho: np.ndarray           # (T+1, G) occupancy density
    variance: np.ndarray      # (T+1, G) variance density
    connectivity: np.ndarray  # (T+1, G) limiting connectivity C_t(z)

    def integrate(self, values_on_grid):
        return float((self.weights * values_on_grid).sum())

    def measure_integral(self, h, t):
        """integral of h against the occupancy measure at time t."""
        return self.integrate(h(self.grid) * self.rho[t])


def _grid(G):
    # left-endpoint rectangles: first-order quadrature, refinement halves error
    nodes = np.arange(G) / G
    weights = np.full(G, 1.0 / G)
    return nodes, weights


def hanski_limit(model, rho0, T, G=512):
    """Advance the limiting density, variance density and connectivity.

    ``rho0`` is the initial density: a callable on [0,1] or a (G,) array.
    """
    nodes, weights = _grid(G)
    rho = np.empty((T + 1, G))
    rho[0] = rho0(nodes) if callable(rho0) else np.asarray(rho0, dtype=np.float64)
    if rho[0].min() < -1e-12 or rho[0].max() > 1 + 1e-12:
        raise DomainError("initial density must take values in [0, 1]")
    rho[0] = np.clip(rho[0], 0.0, 1.0)

    a_g = model.a(nodes)
    s_g = model.s(nodes)
    D = model.dispersal(nodes[:, None], nodes[None, :])
    var = np.zeros((T + 1, G))
    conn = np.empty((T + 1, G))
    for t in range(T):
        conn[t] = D @ (weights * a_g * rho[t])
        cg = model.c(conn[t])
        rho[t + 1] = s_g * rho[t] + cg * (1.0 - rho[t])
        if rho[t + 1].min() < -1e-12 or rho[t + 1].max() > 1 + 1e-12:
            raise DomainError("density left [0, 1]; malformed model inputs")
        rho[t + 1] = np.clip(rho[t + 1], 0.0, 1.0)
        var[t + 1] = (s_g * (1.0 - s_g) * rho[t] + cg * (1.0 - cg) * (1.0 - rho[t])
                      + (s_g - cg) ** 2 * var[t])
    conn[T] = D @ (weights * a_g * rho[T])
    return HanskiLimit(grid=nodes, weights=weights, rho=rho, variance=var,
                       connectivity=conn)


def injected_noise_density(model, limit, t):
    """Conditional-variance density of the step rho_{t-1} -> rho_t.

    s(1-s) rho + c(1-c)(1-rho) at time t-1.  The recursive density stored in
    ``limit.variance`` adds the (s-c)^2-propagated past and therefore equals
    the marginal rho_t (1 - rho_t); projections of the chain inject only the
    conditional part per step, the transfer operator carries the rest.
    """
    if t < 1:
        return np.zeros_like(limit.grid)
    nodes = limit.grid
    s_g = model.s(nodes)
    cg = model.c(limit.connectivity[t - 1])
    rho = limit.rho[t - 1]
    return s_g * (1.0 - s_g) * rho + cg * (1.0 - cg) * (1.0 - rho)


def grid_projected_variance(model, limit, h, t):
    """Limit variance of sqrt(n) <empirical measure - rho_t, h>.

    Accumulates the injected-noise quadratic forms of h propagated backwards
    through the transfer operator, mirroring the finite-n recursion.
    """
    hg = h(limit.grid) if callable(h) else np.asarray(h, dtype=np.float64)
    g = hg.copy()
    total = 0.0
    for r in range(t, 0, -1):
        dens = injected_noise_density(model, limit, r)
        total += limit.integrate(g * g * dens)
        if r > 1:
            g = transfer_apply(model, limit, g, r - 1)
    return total


def transfer_apply(model, limit, h, t):
    """Apply the limiting transfer operator at time t to a test function.

    (J_t h)(z) = (s(z) - c[C_t(z)]) h(z)
                 + a(z) * integral D(z, w) h(w) c'[C_t(w)] (1 - rho_t(w)) dw
    evaluated on the grid; ``h`` is a callable or a grid array.
    """
    nodes, weights = limit.grid, limit.weights
    hg = h(nodes) if callable(h) else np.asarray(h, dtype=np.float64)
    cg = model.c(limit.connectivity[t])
    cpg = model.c_prime(limit.connectivity[t])
    s_g = model.s(nodes)
    a_g = model.a(nodes)
    D = model.dispersal(nodes[:, None], nodes[None, :])
    integral = D @ (weights * hg * cpg * (1.0 - limit.rho[t]))
    return (s_g - cg) * hg + a_g * integral
