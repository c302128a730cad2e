"""Seeding, hashing, and determinism helpers shared across the package."""

from __future__ import annotations

import hashlib
import json

import numpy as np
import torch

_SEED_SPACE = 2**63 - 1


def derive_seed(root_seed: int, *tags) -> int:
    """Derive an independent child seed from a root seed and a tag path.

    Children for different tag paths are statistically independent, so
    work can be partitioned (e.g. one seed per sample) without the result
    depending on generation order or thread count.
    """
    payload = json.dumps([int(root_seed), *[str(t) for t in tags]]).encode()
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") % _SEED_SPACE


def rng_for(root_seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, *tags))


def seed_torch(seed: int) -> None:
    torch.manual_seed(seed % (2**63))


def enable_determinism(num_threads: int = 1) -> None:
    """Pin torch to a reproducible single-machine configuration.

    Thread count is part of the contract: reductions reorder with the
    thread pool, so byte-identical replays require the same value.
    """
    torch.set_num_threads(num_threads)
    torch.use_deterministic_algorithms(True)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(obj) -> str:
    """JSON with sorted keys and no float mangling; stable across runs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def stable_id(*parts) -> str:
    """Deterministic 16-hex identifier for dataset samples."""
    payload = canonical_json([str(p) for p in parts]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
