"""Deterministic, splittable random streams.

Every random choice in the framework flows through a named stream derived
from a 64-bit root seed plus a tuple of component tags (strings or ints).
Streams are independent PCG64 generators keyed through ``SeedSequence``, so
adding a draw to one component never perturbs another and any stream can be
re-derived from (seed, tags) alone -- which is what makes stored bug reports
reproducible.
"""
from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "stream"]

_MASK64 = (1 << 64) - 1


def _tag_to_int(tag: str | int) -> int:
    if isinstance(tag, int):
        return tag & _MASK64
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *tags: str | int) -> int:
    """Derive a child 64-bit seed from a root seed and component tags."""
    entropy = [seed & _MASK64] + [_tag_to_int(t) for t in tags]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, *tags: str | int) -> np.random.Generator:
    """Return an independent generator for the (seed, tags) component."""
    entropy = [seed & _MASK64] + [_tag_to_int(t) for t in tags]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
