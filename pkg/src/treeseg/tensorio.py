"""Single-file tensor container: JSON header + raw little-endian buffers.

Layout: 8-byte magic, u32 header length, UTF-8 JSON header, then the
tensor payloads back to back. The header carries names, dtypes, shapes,
offsets and an arbitrary ``meta`` dict (training config, seed, ...).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptManifest

MAGIC = b"TSEGTEN1"
FORMAT_VERSION = 1


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = {}
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        entries[name] = {
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": len(raw),
        }
        payload.extend(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "meta": meta or {},
        "tensors": entries,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(bytes(payload))


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise CorruptManifest(f"no tensor container at {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CorruptManifest(f"{path} is not a tensor container")
    (hlen,) = struct.unpack("<I", data[8:12])
    try:
        header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"bad container header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CorruptManifest(f"unsupported container version in {path}")
    base = 12 + hlen
    tensors = {}
    for name, ent in header["tensors"].items():
        start = base + ent["offset"]
        raw = data[start : start + ent["nbytes"]]
        if len(raw) != ent["nbytes"]:
            raise CorruptManifest(f"truncated tensor {name!r} in {path}")
        arr = np.frombuffer(raw, dtype=np.dtype(ent["dtype"])).reshape(ent["shape"])
        tensors[name] = arr.copy()
    return tensors, header["meta"]
