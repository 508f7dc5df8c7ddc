"""Named random-number streams derived from one master seed.

Every source of randomness in a run (splitting, parameter init, EM noise,
synthetic generation) pulls its own generator by name, so perturbing one
component never shifts the draws of another.
"""

import zlib

import numpy as np


class RngHub:
    """Splits a master seed into independent, reproducible named streams."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, name: str) -> np.random.Generator:
        tag = zlib.crc32(name.encode("utf-8"))
        return np.random.default_rng(np.random.SeedSequence([self.seed, tag]))
