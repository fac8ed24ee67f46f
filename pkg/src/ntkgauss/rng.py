"""Counter-based random streams.

Each stream is a Philox generator whose key is derived from a master seed
plus an arbitrary tuple of integer/string labels, e.g.
``stream(seed, width_index, replica_index, "theta0")``. Streams for distinct
label tuples never overlap, so replicas can be generated in any order (or
concurrently) and still reproduce bit-for-bit.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _word(label):
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    raise TypeError(f"stream labels must be int or str, got {type(label).__name__}")


def stream(seed, *labels):
    """Return an independent ``np.random.Generator`` for ``(seed, *labels)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(_word(l) for l in labels))
    return np.random.Generator(np.random.Philox(ss))
