"""Binary state cache.

Layout of ``<name>.qdl`` (all little-endian)::

    bytes 0-3    magic  b"QDLS"
    bytes 4-5    format version (uint16)
    bytes 6-7    reserved, zero
    bytes 8-11   n_qubits (uint32)
    bytes 12-19  item count (uint64)
    body         count * 2**n_qubits complex amplitudes, each a (real, imag) float64 pair

Features, labels, splits, flags and metadata live in ``<name>.qdl.json``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CacheFormatError
from ..learn import LabeledDataset

MAGIC = b"QDLS"
VERSION = 1
_HEADER = struct.Struct("<4sHHIQ")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def cache_states(dataset, path):
    """Write ``dataset`` to ``path`` plus its JSON sidecar; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    states = np.ascontiguousarray(dataset.states, dtype="<c16")
    header = _HEADER.pack(MAGIC, VERSION, 0, dataset.n_qubits, len(dataset))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(states.tobytes())
    side = {
        "version": VERSION,
        "n_qubits": dataset.n_qubits,
        "count": len(dataset),
        "features": dataset.features,
        "labels": dataset.labels,
        "splits": dataset.splits,
        "flags": dataset.flags,
        "meta": dataset.meta,
    }
    sidecar_path(path).write_text(json.dumps(side, default=_jsonable, indent=1, sort_keys=True))
    return path


def read_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise CacheFormatError(f"{path}: file shorter than the header")
    magic, version, _, n_qubits, count = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise CacheFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheFormatError(f"{path}: unsupported version {version}")
    return n_qubits, count


def load_states(path):
    """Inverse of :func:`cache_states`.  Any inconsistency raises :class:`CacheFormatError`."""
    path = Path(path)
    if not path.exists():
        raise CacheFormatError(f"{path}: no such cache file")
    n_qubits, count = read_header(path)
    body = path.read_bytes()[_HEADER.size:]
    expected = count * (2 ** n_qubits) * 16
    if len(body) != expected:
        raise CacheFormatError(f"{path}: body has {len(body)} bytes, header implies {expected}")
    try:
        side = json.loads(sidecar_path(path).read_text())
    except FileNotFoundError as exc:
        raise CacheFormatError(f"{path}: sidecar missing") from exc
    except json.JSONDecodeError as exc:
        raise CacheFormatError(f"{path}: sidecar is not valid JSON") from exc
    if side.get("version") != VERSION or side.get("n_qubits") != n_qubits:
        raise CacheFormatError(f"{path}: sidecar does not match the header")
    if side.get("count") != count or len(side.get("labels", ())) != count:
        raise CacheFormatError(f"{path}: sidecar lists {side.get('count')} items, body has {count}")
    states = np.frombuffer(body, dtype="<c16").reshape(count, 2 ** n_qubits).copy()
    return LabeledDataset(states, np.asarray(side["features"], dtype=float).reshape(count, -1),
                          side["labels"], side["splits"], n_qubits, side["flags"], side["meta"])
