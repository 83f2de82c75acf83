"""Counter-based random streams keyed by (seed, purpose, index).

Every channel realization and every transport-block draw owns an independent
Philox stream, so trials can be evaluated in any order or on any worker and
still produce the same numbers.
"""
import numpy as np

CHANNEL = 0
TB_DRAW = 1


def stream(seed, purpose, index):
    """Return a Generator for the ``(seed, purpose, index)`` stream."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(purpose), int(index)))
    return np.random.Generator(np.random.Philox(ss))
