"""Seeded random streams.

All randomness derives from one root seed. Each consumer asks for a stream by
purpose name, so adding a new consumer never shifts the draws of an existing
one. Streams are PCG64 generators keyed by ``SeedSequence(seed, spawn_key)``
where the spawn key is the CRC32 of the purpose name followed by any extra
integer indices (iteration number, replicate, ...).
"""
import zlib

import numpy as np

ASSIGNMENT = "assignment"
NOISE = "noise"
COVARIATES = "covariates"
BOOTSTRAP = "bootstrap"
SHUFFLE = "shuffle"
KMEANS_INIT = "kmeans-init"
INITIAL_SEGMENTS = "initial-segments"
PERMUTATION = "permutation"
SAMPLE = "sample"


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Return the generator for ``purpose`` under root ``seed``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (purpose_key(purpose),) + tuple(int(i) for i in indices)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def child_seed(seed: int, purpose: str, *indices: int) -> int:
    """Derive a plain integer seed for APIs that take one."""
    return int(stream(seed, purpose, *indices).integers(0, 2**63 - 1))
