"""Exact simulation of occupancy chains and their independent-node coupling.

The chain X and its coupled companion W consume the *same* uniform table:
node i of replicate r at step t reads one keyed Philox draw, so the
coupling is well defined, replicates are independent, and every run is
bit-for-bit reproducible from (rule, X0, seed, R, T) at any worker count.

The companion W updates its thresholds at the deterministic trajectory
p_t instead of the current random state, which makes its nodes mutually
independent with mean exactly p_t.  The discrepancy bit J_{i,t} records
whether node i has ever disagreed between the two chains up to time t.
"""

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import SplitRequiredError, TooLargeError
from .rules import evaluate_rule

EXACT_LAW_CAP = 12
EXACT_LAW_HARD_CAP = 16

#: replicate rows processed per work unit; fixed so results never depend on
#: the worker count (matches the RNG block size).
_CHUNK = rng.BLOCK


@dataclass
class BinaryEnsemble:
    """R replicate trajectories of an n-node chain over steps 0..T."""

    n: int
    T: int
    R: int
    seed: int
    states: np.ndarray                      # (R, T+1, n) uint8
    coupled: Optional[np.ndarray] = None    # (R, T+1, n) uint8
    discrepancy: Optional[np.ndarray] = None  # (R, T+1, n) uint8

    def occupancy_mean(self):
        """Mean occupancy per time step, averaged over replicates and nodes."""
        return self.states.mean(axis=(0, 2))

    def jbar(self):
        """Mean discrepancy fraction per replicate and step, shape (R, T+1)."""
        if self.discrepancy is None:
            raise SplitRequiredError("ensemble was simulated without coupling")
        return self.discrepancy.mean(axis=2)


def _draw_bits(rule, x, t, u):
    """One transition for a (rows, n) batch of binary states given uniforms u."""
    xf = x.astype(np.float64)
    if rule.split is not None:
        surv, col = rule.split
        s = np.asarray(surv(xf, t), dtype=np.float64)
        c = np.asarray(col(xf, t), dtype=np.float64)
        thresh = np.where(x == 1, s, c)
    else:
        thresh = np.asarray(rule.evaluate(xf, t), dtype=np.float64)
    return (u <= thresh).astype(np.uint8)


def step(rule, x, t, seed, replicate=0):
    """Advance one replicate's binary state one step using its keyed stream."""
    x = np.asarray(x, dtype=np.uint8)
    u = rng.uniforms(seed, t, rule.n, r0=replicate, rows=1)[0]
    return _draw_bits(rule, x[None, :], t, u[None, :])[0]


def coupled_step(rule, x, w, j, p_det, t, seed, replicate=0):
    """Advance (X, W, J) one step; both chains consume the same uniforms."""
    if rule.split is None:
        raise SplitRequiredError(
            "coupling is defined through the survival/colonization split")
    x = np.asarray(x, dtype=np.uint8)[None, :]
    w = np.asarray(w, dtype=np.uint8)[None, :]
    j = np.asarray(j, dtype=np.uint8)[None, :]
    u = rng.uniforms(seed, t, rule.n, r0=replicate, rows=1)
    x2, w2, j2 = _coupled_update(rule, x, w, j, p_det, t, u)
    return x2[0], w2[0], j2[0]


def _coupled_update(rule, x, w, j, p_det, t, u):
    surv, col = rule.split
    xf = x.astype(np.float64)
    sx = np.asarray(surv(xf, t), dtype=np.float64)
    cx = np.asarray(col(xf, t), dtype=np.float64)
    tx = np.where(x == 1, sx, cx)
    sp = np.asarray(surv(p_det, t), dtype=np.float64)
    cp = np.asarray(col(p_det, t), dtype=np.float64)
    tw = np.where(w == 1, sp, cp)
    x2 = (u <= tx).astype(np.uint8)
    w2 = (u <= tw).astype(np.uint8)
    j2 = np.maximum(j, (x2 != w2).astype(np.uint8))
    return x2, w2, j2


def simulate_ensemble(rule, X0, T, R, seed, couple=False, p_traj=None, workers=1):
    """Simulate R independent replicates for T steps from the fixed state X0.

    With ``couple=True`` the independent-node companion W (thresholds taken
    at the supplied deterministic trajectory ``p_traj``) and the discrepancy
    indicators J are tracked alongside X.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    X0 = np.asarray(X0, dtype=np.uint8)
    if X0.shape != (rule.n,):
        raise ValueError(f"X0 must have shape ({rule.n},)")
    if couple:
        if rule.split is None:
            raise SplitRequiredError(
                "coupling is defined through the survival/colonization split")
        if p_traj is None:
            raise ValueError("coupled simulation needs the deterministic trajectory")
        p_traj = np.asarray(p_traj, dtype=np.float64)
        if p_traj.shape[0] < T + 1:
            raise ValueError("p_traj must cover steps 0..T")

    states = np.empty((R, T + 1, rule.n), dtype=np.uint8)
    coupled = np.empty_like(states) if couple else None
    disc = np.empty_like(states) if couple else None

    def run_chunk(r0):
        rows = min(_CHUNK, R - r0)
        x = np.repeat(X0[None, :], rows, axis=0)
        states[r0:r0 + rows, 0] = x
        if couple:
            w = x.copy()
            j = np.zeros_like(x)
            coupled[r0:r0 + rows, 0] = w
            disc[r0:r0 + rows, 0] = j
        for t in range(T):
            u = rng.uniforms(seed, t, rule.n, r0=r0, rows=rows)
            if couple:
                x, w, j = _coupled_update(rule, x, w, j, p_traj[t], t, u)
                coupled[r0:r0 + rows, t + 1] = w
                disc[r0:r0 + rows, t + 1] = j
            else:
                x = _draw_bits(rule, x, t, u)
            states[r0:r0 + rows, t + 1] = x

    starts = range(0, R, _CHUNK)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for r0 in starts:
            run_chunk(r0)

    return BinaryEnsemble(n=rule.n, T=T, R=R, seed=seed, states=states,
                          coupled=coupled, discrepancy=disc)


def simulate_projections(rule, X0, T, R, seed, h, p_traj, keep_nodes=None,
                         workers=1, couple=False):
    """Streaming simulation keeping only scaled projections of X_t - p_t.

    Returns a dict with ``proj`` of shape (R, T+1) holding
    n^{-1/2} * sum_i h_i (X_{i,t} - p_{i,t}) per replicate, and optionally
    ``nodes`` of shape (R, T+1, len(keep_nodes)) with raw bits for a column
    subset, plus ``jbar`` (R, T+1) when ``couple=True``.  Bit stream and
    update path match :func:`simulate_ensemble` exactly.
    """
    X0 = np.asarray(X0, dtype=np.uint8)
    p_traj = np.asarray(p_traj, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    scale = 1.0 / np.sqrt(rule.n)
    proj = np.empty((R, T + 1), dtype=np.float64)
    kept = (np.empty((R, T + 1, len(keep_nodes)), dtype=np.uint8)
            if keep_nodes is not None else None)
    jbar = np.empty((R, T + 1), dtype=np.float64) if couple else None
    if couple and rule.split is None:
        raise SplitRequiredError(
            "coupling is defined through the survival/colonization split")

    def record(x, t, r0, rows, j=None):
        proj[r0:r0 + rows, t] = scale * ((x - p_traj[t][None, :]) @ h)
        if kept is not None:
            kept[r0:r0 + rows, t] = x[:, keep_nodes]
        if jbar is not None:
            jbar[r0:r0 + rows, t] = j.mean(axis=1)

    def run_chunk(r0):
        rows = min(_CHUNK, R - r0)
        x = np.repeat(X0[None, :], rows, axis=0)
        w = x.copy() if couple else None
        j = np.zeros_like(x) if couple else None
        record(x, 0, r0, rows, j)
        for t in range(T):
            u = rng.uniforms(seed, t, rule.n, r0=r0, rows=rows)
            if couple:
                x, w, j = _coupled_update(rule, x, w, j, p_traj[t], t, u)
            else:
                x = _draw_bits(rule, x, t, u)
            record(x, t + 1, r0, rows, j)

    starts = range(0, R, _CHUNK)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for r0 in starts:
            run_chunk(r0)

    out = {"proj": proj}
    if kept is not None:
        out["nodes"] = kept
    if jbar is not None:
        out["jbar"] = jbar
    return out


# ---------------------------------------------------------------------------
# exact small-n law
# ---------------------------------------------------------------------------

def state_table(n):
    """All 2^n binary states as a (2^n, n) float array; row index is the
    little-endian integer encoding (bit i of the index is node i)."""
    codes = np.arange(2 ** n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)


def state_index(x):
    x = np.asarray(x)
    return int((x.astype(np.int64) << np.arange(x.shape[-1])).sum())


def _kernel(rule, states, t):
    """Dense transition matrix K[x, y] for all 2^n state pairs."""
    p = evaluate_rule(rule, states, t)
    m = states.shape[0]
    K = np.ones((m, m))
    for i in range(rule.n):
        K *= np.where(states[None, :, i] == 1.0, p[:, None, i], 1.0 - p[:, None, i])
    return K


def exact_law(rule, X0, T, n_cap=EXACT_LAW_CAP):
    """Exact distribution over {0,1}^n at steps 0..T from the fixed state X0.

    Returns an array of shape (T+1, 2^n); row t sums to 1 within 1e-12.
    Feasible only for small n (the kernel is 4^n); n_cap may be raised to
    16 at the cost of a warning and ~17 GB of transient arithmetic.
    """
    n = rule.n
    if n > min(n_cap, EXACT_LAW_HARD_CAP):
        raise TooLargeError(f"exact_law supports n <= {min(n_cap, EXACT_LAW_HARD_CAP)}, got {n}")
    if n > EXACT_LAW_CAP:
        warnings.warn(f"exact_law at n={n} is expensive (O(4^n) per step)")
    states = state_table(n)
    laws = np.zeros((T + 1, 2 ** n))
    laws[0, state_index(X0)] = 1.0
    K = None
    for t in range(T):
        if K is None or not rule.homogeneous:
            K = _kernel(rule, states, t)
        laws[t + 1] = laws[t] @ K
        s = laws[t + 1].sum()
        if abs(s - 1.0) > 1e-12:
            raise RuntimeError(f"law mass drifted to {s!r} at step {t + 1}")
        laws[t + 1] /= s
    return laws


def law_mean(law, n):
    """Per-node occupancy probabilities E X_i under a distribution row."""
    return law @ state_table(n)


def empirical_law(states_at_t, n):
    """Empirical distribution over 2^n states from (R, n) sampled bits."""
    codes = (states_at_t.astype(np.int64) << np.arange(n)).sum(axis=1)
    return np.bincount(codes, minlength=2 ** n) / states_at_t.shape[0]


def total_variation(law_a, law_b):
    return 0.5 * float(np.abs(np.asarray(law_a) - np.asarray(law_b)).sum())


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def ensemble_to_csv(ensemble, path):
    """Columnar bit dump (replicate, t, node, bit); large for big ensembles."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["replicate", "t", "node", "bit"])
        for r in range(ensemble.R):
            for t in range(ensemble.T + 1):
                row = ensemble.states[r, t]
                for i in range(ensemble.n):
                    wr.writerow([r, t, i, int(row[i])])


def summary_to_csv(ensemble, path):
    """Per-step summary: mean occupancy and, when coupled, mean discrepancy."""
    occ = ensemble.occupancy_mean()
    jb = ensemble.jbar().mean(axis=0) if ensemble.discrepancy is not None else None
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "mean_occupancy", "jbar_mean"])
        for t in range(ensemble.T + 1):
            wr.writerow([t, f"{occ[t]:.17g}", "" if jb is None else f"{jb[t]:.17g}"])
