"""
Reproducible random streams.

Replicate seeds are a 64-bit SplitMix-style hash of the replicate key, so a
replicate draws the same numbers no matter which worker runs it. Inside a
replicate every consumer asks for a stream keyed by (purpose, cluster,
participant) instead of sharing one generator.
"""
import struct
from enum import IntEnum
from typing import Union

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class StreamPurpose(IntEnum):
    ALLOCATION = 1
    ENTRY_AGE = 2
    WIDOWHOOD = 3
    ATTRITION = 4
    CLUSTER_INTERCEPT = 5
    PARTICIPANT_INTERCEPT = 6
    RESIDUAL = 7


def splitmix64(state: int) -> int:
    z = (state + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _key_word(part: Union[int, float, str]) -> int:
    if isinstance(part, bool):
        return int(part)
    if isinstance(part, int):
        return part & MASK64
    if isinstance(part, float):
        # -0.0 and 0.0 must map to the same replicate
        return struct.unpack("<Q", struct.pack("<d", part + 0.0))[0]
    word = 0
    for byte in str(part).encode("utf-8"):
        word = splitmix64(word ^ byte)
    return word


def derive_seed(master_seed: int, *key: Union[int, float, str]) -> int:
    """Fold the key into the master seed, one SplitMix64 round per component."""
    state = splitmix64(master_seed & MASK64)
    for part in key:
        state = splitmix64(state ^ _key_word(part))
    return state


class KeyedStreams:
    """Factory of independent numpy generators keyed by purpose and indices."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64

    def stream(self, purpose: StreamPurpose, cluster: int = 0, participant: int = 0) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(int(purpose), int(cluster), int(participant)),
        )
        return np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"KeyedStreams(seed={self.seed})"
