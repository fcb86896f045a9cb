"""Deterministic seed tree: one master seed, disjoint child generators.

Every stochastic routine in this package derives its randomness from a
single integer master seed through :func:`child_rng`.  Children are
addressed by a fixed stream tag plus an index, so the draw sequence seen
by any consumer depends only on (master_seed, tag, index) and never on
scheduling, worker count, or call order.
"""

from __future__ import annotations

import numpy as np

# Stream tags.  Fixed numbers, never reused for a different purpose:
# changing one silently changes every published result.
STREAM_TRAJECTORY = 0   # factor draws of one product trajectory
STREAM_PROBE = 1        # alignment probe directions, one stream per trajectory
STREAM_MEASURE = 2      # empirical invariant-measure chains
STREAM_PILOT = 3        # pilot batches (exponent centering)
STREAM_WITNESS = 4      # condition-checker witness draws
STREAM_CONTRACTION = 5  # projective contraction-ratio sampling
STREAM_INTEGRAL = 6     # invariant-measure integral sampling


def child_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Generator owned by the (master_seed, *path) node of the seed tree.

    Parameters
    ----------
    master_seed : int
        Root entropy, a non-negative integer.
    *path : int
        Stream tag followed by optional indices (trajectory number,
        chain number, ...).

    Returns
    -------
    numpy.random.Generator
        Independent PCG64 stream; identical for identical arguments.
    """
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.PCG64(seq))
