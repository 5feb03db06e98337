"""Deterministic per-job random streams.

Every stochastic routine takes a master seed plus a job key; the stream is
derived by hashing the pair, so ladders and seed lists can be extended
without reshuffling earlier jobs.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_words(key) -> list[int]:
    out = []
    for part in key:
        if isinstance(part, (int, np.integer)):
            out.append(int(part) & 0xFFFFFFFF)
        else:
            digest = hashlib.sha256(str(part).encode()).digest()
            out.extend(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    return out


def derive_rng(master_seed: int, *key) -> np.random.Generator:
    """Generator for job `key` under `master_seed`; stable across runs."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + _key_words(key)
    return np.random.default_rng(np.random.SeedSequence(entropy))
