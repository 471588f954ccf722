"""Per-run random source split into independent named streams.

One 64-bit seed fully determines every draw of a run.  Each stochastic
feature (demand noise, renewable generation, annealing moves, appliance
scheduling) pulls from its own stream, keyed by name and day, so enabling
one feature never perturbs the draws of another.
"""

import zlib

import numpy as np


class RunRandom:
    """Factory of deterministic, mutually independent numpy generators."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, name: str, day: int = 0) -> np.random.Generator:
        # crc32 keeps the key independent of PYTHONHASHSEED.
        key = zlib.crc32(name.encode("utf-8"))
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(key, int(day)))
        return np.random.default_rng(seq)
