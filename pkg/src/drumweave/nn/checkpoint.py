"""Versioned binary container for named parameter tensors.

Layout: 8-byte magic, u32 version, u32 tensor count, then per tensor a
u16 name length + UTF-8 name, u8 rank, u32 dims, and the float64 buffer.
All integers and floats little-endian. A JSON manifest with architecture
hyperparameters travels alongside the binary file in a checkpoint
directory.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DWTENSRS"
VERSION = 1

WEIGHTS_FILE = "weights.bin"
MANIFEST_FILE = "manifest.json"


class CheckpointError(ValueError):
    """Raised for unreadable or mismatched checkpoint files."""


def write_tensors(path: Path | str, tensors: dict[str, np.ndarray]) -> None:
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", VERSION, len(tensors))
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        array = np.asarray(array, dtype=np.float64)
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", array.ndim)
        for dim in array.shape:
            blob += struct.pack("<I", dim)
        blob += array.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def read_tensors(path: Path | str) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a tensor container")
    version, count = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported container version {version}")
    pos = 16
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos) if ndim else ()
        pos += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        end = pos + 8 * n
        if end > len(data):
            raise CheckpointError(f"{path}: truncated tensor {name!r}")
        array = np.frombuffer(data[pos:end], dtype="<f8").reshape(shape)
        out[name] = array.astype(np.float64)
        pos = end
    return out


def save_checkpoint(directory: Path | str, tensors: dict[str, np.ndarray],
                    manifest: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensors(directory / WEIGHTS_FILE, tensors)
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_checkpoint(directory: Path | str) -> tuple[dict[str, np.ndarray], dict]:
    directory = Path(directory)
    weights = directory / WEIGHTS_FILE
    manifest = directory / MANIFEST_FILE
    if not weights.exists() or not manifest.exists():
        raise CheckpointError(f"{directory}: missing {WEIGHTS_FILE} or {MANIFEST_FILE}")
    return read_tensors(weights), json.loads(manifest.read_text())
