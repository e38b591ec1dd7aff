"""Deterministic seed derivation.

A cell seed is the first 8 bytes (little endian) of the BLAKE2b digest of
the JSON array ``[master_seed, *coords]``. Because a cell's seed depends
only on its own coordinates, adding grid points never changes existing
cells.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def derive_seed(master_seed: int, *coords) -> int:
    payload = json.dumps([int(master_seed), *coords], separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def rng_for(master_seed: int, *coords) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *coords))
