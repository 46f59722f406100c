"""Dynamic random subgraphs of a host graph, and their graphon limits.

The chain lives on the edges of a fixed host graph (v vertices, n edges):
a present edge is retained with probability q; an absent host edge (a, b)
appears with probability f(deg a / (2v) + deg b / (2v)), degrees taken in
the current graph.  To keep each edge's colonization independent of its
own state, degrees exclude the edge itself (on binary states this changes
nothing, since the edge is absent whenever colonization is consulted).

Dense host sequences have graphon limits; the edge-density kernel then
follows

    W_{t+1}(x,y) = q W_t(x,y) + W(x,y) [1 - W_t(x,y)] f((d_t(x)+d_t(y))/2)

with d_t the degree function of W_t.  The same recursion on the host's own
step partition reproduces the finite deterministic trajectory exactly.

Graph functionals: cut norms (exact by enumeration up to 16 vertices,
random-restart heuristic beyond), homomorphism densities for small simple
graphs, and the variance functionals that govern the normal limit of the
triangle density along the chain.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import TooLargeError
from ..rules import CoefficientSet, OccupancyRule


@dataclass(frozen=True)
class GraphDynModel:
    host_edges: np.ndarray        # (n, 2) vertex pairs, canonical a < b
    v: int                        # vertex count
    q: float                      # per-step edge retention probability
    f: Callable                   # attachment curve C^2 [0,1] -> [0,1]
    f_prime: Optional[Callable] = None
    # sups of |f'|, |f''|, |f'''| on [0,1], used by the coefficient budget
    f_derivative_sups: tuple = (1.0, 1.0, 0.0)

    def __post_init__(self):
        e = np.asarray(self.host_edges, dtype=np.int64)
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        object.__setattr__(self, "host_edges", e)
        if e.size and (e[:, 0] == e[:, 1]).any():
            raise ValueError("host graph must be simple (no loops)")
        if not 0 <= self.q <= 1:
            raise ValueError("retention probability must lie in [0, 1]")

    @property
    def n_edges(self):
        return self.host_edges.shape[0]

    def host_adjacency(self):
        A = np.zeros((self.v, self.v))
        a, b = self.host_edges[:, 0], self.host_edges[:, 1]
        A[a, b] = 1.0
        A[b, a] = 1.0
        return A


def complete_host(v, q, f, **kw):
    a, b = np.triu_indices(v, k=1)
    return GraphDynModel(host_edges=np.column_stack([a, b]), v=v, q=q, f=f, **kw)


def edge_state_to_adjacency(model, x):
    """Scatter edge states (..., n_edges) into adjacency matrices (..., v, v)."""
    x = np.asarray(x, dtype=np.float64)
    A = np.zeros(x.shape[:-1] + (model.v, model.v))
    a, b = model.host_edges[:, 0], model.host_edges[:, 1]
    A[..., a, b] = x
    A[..., b, a] = x
    return A


def graph_rule(model):
    """Occupancy rule on host edges with analytic split and Jacobian."""
    n = model.n_edges
    v = model.v
    q = model.q
    ea, eb = model.host_edges[:, 0], model.host_edges[:, 1]
    incidence = np.zeros((n, v))
    incidence[np.arange(n), ea] = 1.0
    incidence[np.arange(n), eb] = 1.0

    def args_of(x):
        deg = x @ incidence                     # (..., v) degrees incl. the edge
        return (deg[..., ea] + deg[..., eb] - 2.0 * x) / (2.0 * v)

    def survive(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(q, x.shape).copy()

    def colonize(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return model.f(args_of(x))

    def evaluate(x, t=0):
        x = np.asarray(x, dtype=np.float64)
        return x * q + (1.0 - x) * colonize(x)

    def jacobian(x, t=0):
        if model.f_prime is None:
            raise ValueError("model lacks f_prime; use the finite-difference path")
        x = np.asarray(x, dtype=np.float64)
        arg = args_of(x)
        fa = model.f(arg)
        fp = model.f_prime(arg) * (1.0 - x) / (2.0 * v)
        # edges e' sharing a vertex with e move e's degree argument by 1/(2v)
        shared = ((incidence @ incidence.T) > 0).astype(np.float64)
        np.fill_diagonal(shared, 0.0)
        J = fp[:, None] * shared
        J[np.arange(n), np.arange(n)] = q - fa
        return J

    def coeff_oracle(t):
        # conservative budget: an edge has at most 2(v-2) incident neighbours,
        # each moving its degree argument by 1/(2v)
        fp, fpp, fppp = model.f_derivative_sups
        inc = 2.0 * max(v - 2.0, 0.0)
        alpha = inc * fp / (2.0 * v)
        beta = math.sqrt(inc) * fp / (2.0 * v)
        big_gamma = inc * fpp / (4.0 * v * v) + 2.0 * fp / (2.0 * v)
        gamma = inc * fpp / (4.0 * v * v)
        delta = inc ** 2 * fppp / (8.0 * v ** 3) + 3.0 * inc * fpp / (4.0 * v * v)
        return CoefficientSet(alpha=alpha, beta=beta, big_gamma=big_gamma,
                              gamma=gamma, delta=delta)

    return OccupancyRule(
        n=n, evaluate=evaluate, split=(survive, colonize), jacobian=jacobian,
        coeff_oracle=coeff_oracle, homogeneous=True,
        name=f"graphdyn(v={v},edges={n},q={q})")


# ---------------------------------------------------------------------------
# graphon recursion and kernel functionals
# ---------------------------------------------------------------------------

def graphon_step(W_t, W_host, q, f):
    """One step of the limiting kernel recursion on a common grid."""
    W_t = np.asarray(W_t, dtype=np.float64)
    d = W_t.mean(axis=1)
    attach = f(0.5 * (d[:, None] + d[None, :]))
    out = q * W_t + np.asarray(W_host, dtype=np.float64) * (1.0 - W_t) * attach
    return out


def graphon_trajectory(W0, W_host, q, f, T):
    out = [np.asarray(W0, dtype=np.float64)]
    for _ in range(T):
        out.append(graphon_step(out[-1], W_host, q, f))
    return np.stack(out)


CUT_NORM_EXACT_CAP = 16


def cut_norm_exact(M):
    """Exact cut norm of a step kernel on equal cells, by enumerating one
    side and optimizing the other by sign (feasible up to 16 cells)."""
    M = np.asarray(M, dtype=np.float64)
    m = M.shape[0]
    if m > CUT_NORM_EXACT_CAP:
        raise TooLargeError(f"exact cut norm is capped at {CUT_NORM_EXACT_CAP} cells")
    codes = np.arange(1, 2 ** m, dtype=np.int64)   # skip the empty set
    U = ((codes[:, None] >> np.arange(m)[None, :]) & 1).astype(np.float64)
    S = U @ M                                       # column sums per subset
    pos = np.clip(S, 0.0, None).sum(axis=1)
    neg = np.clip(-S, 0.0, None).sum(axis=1)
    return float(max(pos.max(), neg.max()) / m ** 2)


def cut_norm_heuristic(M, restarts=200, seed=0):
    """Alternating-ascent lower bound on the cut norm (random restarts)."""
    M = np.asarray(M, dtype=np.float64)
    m = M.shape[0]
    g = np.random.Generator(np.random.Philox(key=seed))
    best = 0.0
    for sign in (1.0, -1.0):
        A = sign * M
        for _ in range(restarts // 2):
            vset = (g.random(m) < 0.5).astype(np.float64)
            for _ in range(64):
                uset = (A @ vset > 0).astype(np.float64)
                vnew = (uset @ A > 0).astype(np.float64)
                if (vnew == vset).all():
                    break
                vset = vnew
            best = max(best, float(uset @ A @ vset))
    return best / m ** 2


def cut_norm(M, exact_cap=CUT_NORM_EXACT_CAP, restarts=200, seed=0):
    """Cut norm: exact when the grid is small, else a labeled lower bound."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape[0] <= exact_cap:
        return cut_norm_exact(M), "exact"
    return cut_norm_heuristic(M, restarts=restarts, seed=seed), "lower-bound"


def triangle_density(W):
    """Ordered-triple triangle density of a step kernel: mean of W W W."""
    W = np.asarray(W, dtype=np.float64)
    m = W.shape[0]
    return float(((W @ W) * W).sum() / m ** 3)


def homomorphism_density(edges, num_vertices, W):
    """Homomorphism density of a simple graph F (at most 5 vertices) in W."""
    if num_vertices > 5:
        raise TooLargeError("homomorphism densities are capped at 5 vertices")
    W = np.asarray(W, dtype=np.float64)
    m = W.shape[0]
    letters = "abcde"[:num_vertices]
    terms = [f"{letters[i]}{letters[j]}" for i, j in edges]
    if not terms:
        return 1.0
    out = np.einsum(",".join(terms) + "->", *([W] * len(terms)), optimize=True)
    return float(out / m ** num_vertices)


# ---------------------------------------------------------------------------
# variance functionals for the triangle-density normal limit
# ---------------------------------------------------------------------------

def lambda_kernel(W_t):
    """Two-step connection kernel 3 * integral W_t(x,z) W_t(z,y) dz."""
    W_t = np.asarray(W_t, dtype=np.float64)
    return 3.0 * (W_t @ W_t) / W_t.shape[0]


def _edge_stats(model, P):
    d = P.sum(axis=1)
    ea, eb = model.host_edges[:, 0], model.host_edges[:, 1]
    arg = np.zeros((model.v, model.v))
    arg_e = (d[ea] - P[ea, eb] + d[eb] - P[ea, eb]) / (2.0 * model.v)
    arg[ea, eb] = arg_e
    arg[eb, ea] = arg_e
    return arg


def transfer_apply(model, U, P):
    """Adjoint propagation of an edge kernel one step back along the chain.

    Matrix form of (J h)_j = sum_i h_i dP_i/dx_j at the deterministic edge
    state P (a symmetric v x v matrix supported on host cells).
    """
    host = model.host_adjacency()
    arg = _edge_stats(model, P)
    w = model.f(arg)
    K = host * (1.0 - P) * model.f_prime(arg) / (2.0 * model.v)
    KU = K * U
    row = KU.sum(axis=1)
    out = U * (model.q - w) + (row[:, None] + row[None, :] - 2.0 * KU)
    return host * out


def injected_noise_matrix(model, P_prev):
    """Conditional-variance diagonal of one edge step, as a v x v matrix.

    q(1-q) P + host (1-P) w(1-w) at the previous deterministic state; the
    marginal form P'(1-P') exceeds it by (q - w)^2 P(1-P).
    """
    host = model.host_adjacency()
    arg = _edge_stats(model, P_prev)
    w = model.f(arg)
    q = model.q
    return q * (1.0 - q) * P_prev + host * w * (1.0 - w) * (1.0 - P_prev)


def sigma2_step(model, U, P_prev):
    """Injected variance of the edge projection <xi, U> for one step from P_prev."""
    var = injected_noise_matrix(model, P_prev) * model.host_adjacency()
    return float((U * U * var).sum() / (2.0 * model.n_edges))


def variance_density(model, P_prev, var_prev):
    """Displayed variance-density recursion; equals P(1-P) from a
    deterministic start (kept as a cross-check of the decomposition)."""
    host = model.host_adjacency()
    arg = _edge_stats(model, P_prev)
    w = model.f(arg)
    q = model.q
    return (q * (1.0 - q) * P_prev
            + host * w * (1.0 - w) * (1.0 - P_prev)
            + (q - w) ** 2 * var_prev)


def clt_functionals(model, P_seq, U, t):
    """Variance functionals of the chain's kernel projections at time t.

    Given the deterministic edge-state matrices P_0..P_t and a symmetric
    test kernel U, returns the two-step connection kernel at time t, the
    one-step variance of <xi_t, U>, the adjoint-propagated kernel, and the
    accumulated variance
        V_t[U] = sum_{r=1..t} sigma_r^2[ J_r ... J_{t-1} U ].
    """
    U_r = np.asarray(U, dtype=np.float64) * model.host_adjacency()
    total = 0.0
    for r in range(t, 0, -1):
        total += sigma2_step(model, U_r, P_seq[r - 1])
        if r > 1:
            U_r = transfer_apply(model, U_r, P_seq[r - 1])
    return {
        "lambda": lambda_kernel(P_seq[t]),
        "sigma2_t": sigma2_step(model, np.asarray(U, dtype=np.float64),
                                P_seq[t - 1] if t >= 1 else P_seq[0]),
        "transfer": transfer_apply(model, np.asarray(U, dtype=np.float64),
                                   P_seq[t - 1] if t >= 1 else P_seq[0]),
        "variance": total,
    }


def deterministic_edge_matrices(model, A0, T):
    """Finite deterministic recursion as symmetric v x v matrices."""
    from ..deterministic import det_trajectory
    rule = graph_rule(model)
    ea, eb = model.host_edges[:, 0], model.host_edges[:, 1]
    x0 = np.asarray(A0, dtype=np.float64)[ea, eb]
    traj = det_trajectory(rule, x0, T)
    return np.stack([edge_state_to_adjacency(model, traj.p[s]) for s in range(T + 1)])


def triangle_clt_variance(model, A0, t):
    """Predicted variance of v n^{-1/2} (triangle density - deterministic value).

    Linearizing the triangle density at the deterministic state gives the
    edge projection with kernel (2/v) Lambda_t, whose accumulated variance
    is returned.
    """
    P_seq = deterministic_edge_matrices(model, A0, t)
    U = (2.0 / model.v) * lambda_kernel(P_seq[t])
    return clt_functionals(model, P_seq, U, t)["variance"]
