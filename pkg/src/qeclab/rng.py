"""Random streams.

Every random draw in the package comes from numpy's PCG64 bit generator
seeded through a ``SeedSequence``. PCG64 is platform independent, and the
``(seed, path)`` derivation gives independent child streams:

* ``stream(seed, k)`` for trial ``k`` of a run,
* ``stream(seed, k, role)`` for a role inside trial ``k``.
"""

import numpy as np

#: Sub-stream indices used inside one closed-loop trial.
SENSOR = 0
CONTROLLER = 1
CHANNEL = 2


def stream(seed, *path):
    """Return a ``numpy.random.Generator`` for ``seed`` and child ``path``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng):
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else rng)
