"""Small fixtures shared by several test modules."""

import numpy as np

from polarest.channels import sample_llrs
from polarest.core import CodeSpec, message_to_uvector, polar_encode
from polarest.rng import stream


def random_spec(N, K_total, rng, crc=None):
    info = rng.choice(np.arange(1, N + 1), size=K_total, replace=False)
    return CodeSpec.from_info_set(N, info, crc)


def frames(spec, channel, count, seed, random_payload=True):
    rng = stream(seed)
    if random_payload:
        msg = rng.integers(0, 2, (count, spec.K), dtype=np.uint8)
        u = message_to_uvector(msg, spec)
    else:
        u = np.zeros((count, spec.N), dtype=np.uint8)
    return u, sample_llrs(polar_encode(u, spec), channel, rng)
