"""Deterministic fan-out of one master seed into per-component seeds.

Every random decision in the pipeline (walk steps, query subsampling,
interleaving coins, baseline sampling) draws from a seed derived here,
so a single integer reproduces a whole experiment run.
"""

from __future__ import annotations

import hashlib

_SEED_BITS = 63


def derive_seed(master: int, *components: str) -> int:
    """Derive a child seed from a master seed and component labels.

    The derivation hashes ``master`` together with each label (e.g.
    ``("walk",)`` or ``("cf-subsample", user.canonical)``) through
    SHA-256, then keeps 63 bits so the result fits any RNG that wants a
    non-negative int64.
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode("utf-8"))
    for part in components:
        h.update(b"\x1f")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big") >> (64 - _SEED_BITS)
