"""Seeds and counter-based key derivation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

U64_MAX = 2**64 - 1


@dataclass(frozen=True, order=True)
class RngSeed:
    """A (seed, stream) pair; it fixes a sampled trajectory bit for bit.

    Replicates of one experiment share ``seed`` and use ``stream`` = replicate
    index. Independent roles inside a replicate (the trajectory, each target
    sequence) are separated by ``substream`` when deriving keys.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) <= U64_MAX):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream) < 0:
            raise ValidationError(f"stream id must be nonnegative, got {self.stream}")

    def key(self, substream: int = 0) -> np.uint64:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), int(substream)))
        return ss.generate_state(1, dtype=np.uint64)[0]

    def as_dict(self):
        return {"seed": int(self.seed), "stream": int(self.stream)}
