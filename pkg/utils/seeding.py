"""
Deterministic random streams.

Every random sequence gets its own generator derived from
(master seed, protocol tag, sequence index), so adding sequences or running
them in a different order never changes the streams of existing ones.
"""

import zlib

import numpy as np


def tag_key(tag):
    """Stable 32-bit key of a protocol tag."""
    return zlib.crc32(str(tag).encode("utf-8"))


def stream_seed(master_seed, tag, index=0):
    """SeedSequence for one (tag, index) stream."""
    return np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, tag_key(tag), int(index)])


def stream(master_seed, tag, index=0):
    """Generator for one (tag, index) stream."""
    return np.random.default_rng(stream_seed(master_seed, tag, index))


def derive_seed(master_seed, tag, index=0):
    """Integer seed for APIs that take a seed rather than a generator."""
    return int(stream_seed(master_seed, tag, index).generate_state(1, dtype=np.uint64)[0])
