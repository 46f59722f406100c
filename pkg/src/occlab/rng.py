"""Counter-based random streams.

All randomness in occlab flows through keyed Philox streams.  A draw is a
pure function of (master seed, stream tag, time step, replicate, node), so
simulations are bit-for-bit reproducible at any worker count, and the
coupled chains can consume the *same* uniforms by construction.

Replicates are grouped into fixed blocks of ``BLOCK`` rows; each
(seed, tag, t, block) quadruple keys an independent Philox generator and
yields a (rows, n) array whose entry (r, i) belongs to replicate
``block * BLOCK + r`` and node ``i``.  The block size is a constant of the
library, never a function of the worker count.
"""

import numpy as np

# Replicate rows generated per generator key.  Fixed: changing it changes
# every stream, so it is part of the reproducibility contract.
BLOCK = 4096

# Stream tags keep distinct uses of the same (seed, t) from colliding.
TAG_CHAIN = 0       # U_{i,t} shared by the chain and its coupling
TAG_GAUSS = 1       # standard normals for the autoregressive approximation
TAG_RADEMACHER = 2  # sign draws for complexity estimates
TAG_SAMPLER = 3     # Latin-hypercube / corner sampling in coefficient estimation
TAG_USER = 8        # first tag free for ad-hoc use

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF


def _mix64(x):
    """SplitMix64 finalizer; decorrelates adjacent keys."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def _generator(seed, tag, t, block):
    seed = int(seed) & _MASK
    k0 = _mix64(seed ^ ((_GOLDEN * (int(tag) + 1)) & _MASK))
    k1 = _mix64(((int(t) << 20) ^ int(block) ^ (k0 >> 1)) & _MASK)
    bg = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))
    return np.random.Generator(bg)


def _block_draw(draw, seed, tag, t, n, r0, rows):
    """Assemble rows [r0, r0+rows) of the (replicate, node) table at step t."""
    out = np.empty((rows, n), dtype=np.float64)
    filled = 0
    while filled < rows:
        r = r0 + filled
        block, offset = divmod(r, BLOCK)
        take = min(BLOCK - offset, rows - filled)
        g = _generator(seed, tag, t, block)
        full = draw(g, (BLOCK, n))
        out[filled:filled + take] = full[offset:offset + take]
        filled += take
    return out


def uniforms(seed, t, n, r0=0, rows=1, tag=TAG_CHAIN):
    """Uniform(0,1) table of shape (rows, n) for replicates r0..r0+rows-1 at step t."""
    return _block_draw(lambda g, s: g.random(s), seed, tag, t, n, r0, rows)


def normals(seed, t, n, r0=0, rows=1, tag=TAG_GAUSS):
    """Standard-normal table of shape (rows, n), keyed like :func:`uniforms`."""
    return _block_draw(lambda g, s: g.standard_normal(s), seed, tag, t, n, r0, rows)


def signs(seed, t, n, r0=0, rows=1, tag=TAG_RADEMACHER):
    """Rademacher (+/-1) table of shape (rows, n)."""
    u = _block_draw(lambda g, s: g.random(s), seed, tag, t, n, r0, rows)
    return np.where(u < 0.5, -1.0, 1.0)


def derive_seed(seed, label):
    """Stable 64-bit sub-seed for an independent purpose named by ``label``."""
    h = int(seed) & _MASK
    for ch in str(label).encode():
        h = _mix64(h ^ ch)
    return h
