"""Per-sample random streams.

Every sample gets its own Philox generator keyed by ``(seed, index)``, so a
sample's draws never depend on how samples are grouped or scheduled.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed, index):
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def streams(seed, start, count):
    return [stream(seed, start + k) for k in range(count)]


def stacked_uniform(gens, low, high, size):
    """One row of ``size`` uniforms per generator."""
    return np.stack([g.uniform(low, high, size) for g in gens])


def stacked_normal(gens, shape):
    """Array of shape ``(shape[0], len(gens), *shape[1:])`` of standard normals.

    Each generator fills its own column block, so column ``k`` depends only on
    ``gens[k]``.
    """
    draws = [g.standard_normal(shape) for g in gens]
    return np.stack(draws, axis=1)


def stacked_block(gens, shape):
    """Uniforms on [0, 1) of shape ``(shape[0], len(gens), *shape[1:])``."""
    return np.stack([g.random(shape) for g in gens], axis=1)
