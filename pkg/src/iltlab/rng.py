"""Counter-based, splittable random streams.

Every stream is a Philox4x64 generator whose 128-bit key is derived from
``(seed, *path)`` through numpy's ``SeedSequence`` hash:

    key = SeedSequence(entropy=seed, spawn_key=path).generate_state(2, uint64)

so a stream depends only on its coordinates in the (seed, replicate,
process, coordinate) tree and never on the order in which streams are
created.  Gaussian variates come from ``Generator.standard_normal``
(numpy's 256-layer ziggurat), fixed for all samplers.
"""

from __future__ import annotations

import numpy as np

# process labels used in the stream path
PROCESS_FIRST = 1
PROCESS_SECOND = 2


def substream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def coordinate_streams(seed: int, replicate: int, process: int, d: int) -> list[np.random.Generator]:
    """One independent stream per coordinate of one process in one replicate."""
    return [substream(seed, replicate, process, c) for c in range(d)]
