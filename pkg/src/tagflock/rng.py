"""Deterministic random streams derived by counter-based keying.

Every random draw in the package comes from a named substream identified by a
(seed, scope...) tuple, e.g. ``substream(seed, "spawn", agent_id)``.  The scope
is hashed into a Philox key, so streams are independent of each other and of
the order in which they are consumed.  This is what makes simulations
bit-reproducible regardless of batch composition or internal parallelism.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["scope_key", "substream"]


def scope_key(seed: int, *scope: int | str) -> np.ndarray:
    """Hash ``(seed, *scope)`` into a 128-bit Philox key.

    Scope parts must be ints or strings; their textual form feeds a BLAKE2b
    digest, so the key is stable across processes and platforms.
    """
    text = "\x1f".join(str(part) for part in (seed, *scope))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


def substream(seed: int, *scope: int | str) -> np.random.Generator:
    """Return an independent generator for the given (seed, scope) key."""
    return np.random.Generator(np.random.Philox(key=scope_key(seed, *scope)))
