"""Deterministic seed derivation.

Every random draw in the lab flows from a single master seed through
``np.random.SeedSequence`` with a tuple of derivation keys, so independent
sub-streams (repeat r, fold k, check s, ...) never collide and reruns are
byte-identical regardless of execution order or parallelism.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(key: int | str) -> int:
    """Map a derivation key to a stable 64-bit integer."""
    if isinstance(key, (int, np.integer)):
        return int(key)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def child_sequence(master_seed: int, *keys: int | str) -> np.random.SeedSequence:
    """SeedSequence for the sub-stream identified by ``keys`` under ``master_seed``."""
    entropy = [int(master_seed)] + [_key_to_int(k) for k in keys]
    return np.random.SeedSequence(entropy)


def rng_for(master_seed: int, *keys: int | str) -> np.random.Generator:
    """Fresh Generator for the sub-stream identified by ``keys``."""
    return np.random.default_rng(child_sequence(master_seed, *keys))
