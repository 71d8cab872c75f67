"""Deterministic derivation of per-task random streams from one master seed.

Python's builtin hash() is salted per process, so stream derivation goes
through sha256 instead.
"""
from __future__ import annotations

import hashlib
import random


def derive_seed(master_seed: int, *labels: object) -> int:
    material = ":".join([str(master_seed), *(str(x) for x in labels)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master_seed: int, *labels: object) -> random.Random:
    """One independent stream per (master seed, label path), e.g. per worker."""
    return random.Random(derive_seed(master_seed, *labels))
