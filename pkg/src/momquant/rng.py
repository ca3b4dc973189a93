"""Deterministic random streams.

All randomness goes through numpy's Philox counter-based bit generator and
:meth:`numpy.random.Generator.random`, whose output is a fixed function of the
64-bit stream. Non-uniform variates are produced from those uniforms by the
transforms in :mod:`momquant.distributions`, never by numpy's distribution
methods, so datasets do not depend on the numpy version.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(base: int, *counters: int) -> int:
    """Mix a base seed with a tuple of counters into an independent 63-bit seed."""
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=tuple(int(c) for c in counters))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Doubles in ``[0, 1)`` with 53 random bits each."""
    return gen.random(size)
