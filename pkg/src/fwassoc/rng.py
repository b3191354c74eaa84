"""Named, counter-based random substreams.

Every random quantity in a simulation is drawn from a stream identified by
``(seed, name, *keys)``. Streams never share state, so policies evaluated on
the same run see identical mobility, channel and handover draws.
"""
import zlib

import numpy as np

STREAMS = ("drop", "mobility", "shadowing", "hit", "solver-init", "forecaster")


def _name_key(name):
    return zlib.crc32(name.encode("utf-8"))


def substream(seed, name, *keys):
    """Return an independent Philox generator for ``(seed, name, *keys)``."""
    if seed is None:
        raise ValueError("a seed is mandatory for reproducible substreams")
    spawn_key = (_name_key(name),) + tuple(int(k) for k in keys)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def as_generator(random_state):
    """Coerce ``None``/int/Generator into a ``numpy.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)
