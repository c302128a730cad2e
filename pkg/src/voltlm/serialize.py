"""Versioned binary container for tokenizer files and model checkpoints.

Layout: a magic line, one JSON header line (metadata, array directory and a
SHA-256 of the payload), then the raw array bytes. Writing is fully
deterministic for identical content, which is what makes byte-identical
artifact replay testable.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .util import canonical_json, sha256_bytes

MAGIC = b"VLTC1"

_ALLOWED_DTYPES = {"float32", "float64", "int64", "int32"}


class ContainerError(RuntimeError):
    pass


def save_container(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> str:
    """Write a container, returning its content hash."""
    directory = {}
    payload = bytearray()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.name not in _ALLOWED_DTYPES:
            raise ContainerError(f"unsupported dtype {arr.dtype} for array {name!r}")
        raw = arr.tobytes()
        directory[name] = {
            "dtype": arr.dtype.name,
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": len(raw),
        }
        payload.extend(raw)
    content_hash = sha256_bytes(bytes(payload) + canonical_json(meta).encode())
    header = {
        "version": 1,
        "kind": kind,
        "meta": meta,
        "arrays": directory,
        "content_hash": content_hash,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC + b"\n")
        f.write(canonical_json(header).encode() + b"\n")
        f.write(bytes(payload))
    return content_hash


def load_container(path, expect_kind: str | None = None):
    """Read a container back as (meta, arrays); verifies the content hash."""
    with open(path, "rb") as f:
        magic = f.readline().rstrip(b"\n")
        if magic != MAGIC:
            raise ContainerError(f"{path}: not a voltlm container")
        header = json.loads(f.readline())
        payload = f.read()
    if header.get("version") != 1:
        raise ContainerError(f"{path}: unsupported container version")
    if expect_kind is not None and header["kind"] != expect_kind:
        raise ContainerError(
            f"{path}: expected kind {expect_kind!r}, found {header['kind']!r}"
        )
    meta = header["meta"]
    actual = sha256_bytes(payload + canonical_json(meta).encode())
    if actual != header["content_hash"]:
        raise ContainerError(f"{path}: content hash mismatch, file is corrupt")
    arrays = {}
    for name, entry in header["arrays"].items():
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(payload[start : start + nbytes], dtype=entry["dtype"])
        arrays[name] = arr.reshape(entry["shape"]).copy()
    return meta, arrays
