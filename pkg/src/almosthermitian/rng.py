"""
Seeded, counter-based random streams.

Every sample draws from its own Philox stream keyed by ``(seed, label,
index)``, so a sample's randomness does not depend on how many samples
came before it or on the order in which they are evaluated.
"""

import zlib

import numpy as np

__all__ = ["stream", "label_key"]


def label_key(label):
    """Stable 32-bit key of a stream label (CRC-32 of its UTF-8 bytes)."""
    return zlib.crc32(str(label).encode("utf-8"))


def stream(seed, label, index=0):
    """Independent generator for sample ``index`` of stream ``label``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, label_key(label), int(index)])
    return np.random.Generator(np.random.Philox(ss))
