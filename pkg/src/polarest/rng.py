"""Random-stream derivation.

Every stream is a Philox4x32 counter-based generator seeded from a
``numpy.random.SeedSequence`` whose spawn key is the path from the root
seed, e.g. ``(spec_index, point_index, chunk_index)``. A chunk therefore
draws the same samples whichever worker runs it.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.Philox4x32 via SeedSequence(root, spawn_key=path)"


def stream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
