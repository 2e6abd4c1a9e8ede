"""Binary parameter container.

Layout (all integers little-endian)::

    offset 0   8 bytes   magic  b"RMOTCKPT"
    offset 8   u32       format version (currently 1)
    offset 12  u64       header length H in bytes
    offset 20  H bytes   UTF-8 JSON header, keys sorted, no whitespace:
                         {"config_hash": str, "meta": {...}, "seed": int,
                          "params": [{"name", "shape", "offset", "count"}, ...]}
    offset 20+H          payload: float64 little-endian values, each
                         parameter row-major at ``offset`` (in values, not
                         bytes) from the payload start, in header order.

Identical parameters, seed, hash and meta always produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .params import ParamStore

MAGIC = b"RMOTCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(params: ParamStore, config_hash: str = "", meta: dict | None = None) -> bytes:
    entries, offset = [], 0
    for name, value in params.items():
        entries.append({"name": name, "shape": list(value.shape), "offset": offset, "count": int(value.size)})
        offset += value.size
    header = {"config_hash": config_hash, "meta": meta or {}, "seed": params.seed, "params": entries}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(v, dtype="<f8").tobytes() for v in params._arrays.values())
    return MAGIC + struct.pack("<IQ", VERSION, len(blob)) + blob + payload


def loads(data: bytes) -> tuple[ParamStore, dict]:
    if data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[20:20 + hlen].decode("utf-8"))
    payload = np.frombuffer(data[20 + hlen:], dtype="<f8")
    store = ParamStore(seed=header["seed"])
    for entry in header["params"]:
        start, count = entry["offset"], entry["count"]
        if start + count > payload.size:
            raise CheckpointError(f"truncated payload for {entry['name']!r}")
        store.add(entry["name"], payload[start:start + count].reshape(entry["shape"]))
    return store, header


def save(path, params: ParamStore, config_hash: str = "", meta: dict | None = None) -> None:
    Path(path).write_bytes(dumps(params, config_hash, meta))


def load(path) -> tuple[ParamStore, dict]:
    return loads(Path(path).read_bytes())
