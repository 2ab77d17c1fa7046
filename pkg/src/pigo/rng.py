"""Seed derivation and random streams.

Every trial owns a seed. From it two independent counter-based (Philox)
streams are derived: one for sampling candidate solutions, one for
objective noise. Within a stream, draws are consumed in a fixed order
(samples in index order, bits in index order inside a sample), so a run is
reproducible from its seed alone and does not depend on the order in which
a batch is evaluated.
"""

from __future__ import annotations

import zlib

import numpy as np

SAMPLING = 0
NOISE = 1
TRAINING = 2


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def derive_seed(base_seed: int, *labels) -> int:
    """Deterministic 63-bit seed from a base seed and a tuple of labels.

    Labels may be ints or strings (strings are hashed with CRC32, which is
    stable across processes, unlike ``hash``).
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(_label_key(l) for l in labels))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def stream(seed: int, purpose: int = SAMPLING) -> np.random.Generator:
    """Generator for one purpose of one trial."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(purpose,))))
