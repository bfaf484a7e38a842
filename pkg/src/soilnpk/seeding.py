"""Derive independent sub-seeds from one master seed by labeled hashing."""
import hashlib

import numpy as np


def derive_seed(master, *labels):
    """Stable 63-bit seed for ``(master, *labels)``; same inputs, same seed on any platform."""
    key = "/".join([str(int(master))] + [str(label) for label in labels])
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def rng_for(master, *labels):
    return np.random.default_rng(derive_seed(master, *labels))
