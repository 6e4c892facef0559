"""Deterministic seed derivation for independent RNG streams.

Every stochastic component (synthetic data per node, mini-batch shuffling,
dropout masks, whale-step draws) gets its own stream derived from the master
seed plus a context path, so parallel execution order never changes results.
Python's builtin hash() is salted per process and must not be used here.
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Map a context path like (master, "woa", cluster, t, i) to a 64-bit seed."""
    key = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
