"""Append-only on-disk entity store.

A store directory holds segment files plus ``MANIFEST.json``. A segment
is a run of frames::

    >BHII  codec, kind length, key length, payload length
    kind bytes, key bytes, payload bytes

Codec 0 is canonical JSON; codec 1 is a set of numpy arrays (a JSON
header of names, dtypes and shapes followed by the raw little-endian
buffers). A stage's segment only becomes visible when the manifest is
atomically replaced at commit, so files left by an aborted run are
ignored. The manifest keeps a sha256 per segment, checked on open.
"""

import hashlib
import json
import os
import struct
from collections import defaultdict
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from ..errors import CorruptionError, NotFoundError

MANIFEST = "MANIFEST.json"
STAGES = ("extract", "partition", "match", "classify", "cluster")
_FRAME = struct.Struct(">BHII")
JSON, ARRAYS = 0, 1


def encode_json(record) -> bytes:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def encode_arrays(arrays: dict) -> bytes:
    header, bufs = [], []
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        header.append([name, a.dtype.str, list(a.shape)])
        bufs.append(a.tobytes())
    h = encode_json(header)
    return struct.pack(">I", len(h)) + h + b"".join(bufs)


def decode_arrays(payload: bytes) -> dict:
    (hlen,) = struct.unpack_from(">I", payload)
    header = json.loads(payload[4:4 + hlen])
    out, pos = {}, 4 + hlen
    for name, dtype, shape in header:
        dt = np.dtype(dtype)
        n = int(np.prod(shape)) * dt.itemsize
        out[name] = np.frombuffer(payload, dt, count=n // dt.itemsize if dt.itemsize else 0,
                                  offset=pos).reshape(shape)
        pos += n
    return out


class StageWriter:
    def __init__(self, store: "EntityStore", stage: str, name: str):
        self.store = store
        self.stage = stage
        self.name = name
        self.path = store.root / name
        self._fh = open(self.path, "wb")
        self._sha = hashlib.sha256()
        self._size = 0
        self.kinds = set()
        self.records = 0
        self.meta = {}  # small summary (counts, timings) kept in the manifest

    def _frame(self, codec, kind, key, payload):
        k, kk = kind.encode("utf-8"), str(key).encode("utf-8")
        data = _FRAME.pack(codec, len(k), len(kk), len(payload)) + k + kk + payload
        self._fh.write(data)
        self._sha.update(data)
        self._size += len(data)
        self.kinds.add(kind)
        self.records += 1

    def put(self, kind: str, key, record):
        self._frame(JSON, kind, key, encode_json(record))

    def put_arrays(self, kind: str, key, arrays: dict):
        self._frame(ARRAYS, kind, key, encode_arrays(arrays))

    def commit(self):
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._fh.close()
        self.store._commit(self.stage, {"name": self.name, "sha256": self._sha.hexdigest(),
                                        "bytes": self._size, "kinds": sorted(self.kinds)},
                          self.meta)

    def abort(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, *rest):
        if exc_type is None:
            self.commit()
        else:
            self.abort()


class EntityStore:
    """Keyed records namespaced by kind, grouped into per-stage segments.

    ``trace`` (a list) records every kind read, for auditing which store
    kinds a stage touched.
    """

    def __init__(self, root, trace: Optional[list] = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.trace = trace
        self.manifest = self._read_manifest()
        self._index = {}  # kind -> {key: (codec, payload)}
        self._loaded = False

    # manifest ------------------------------------------------------------

    def _read_manifest(self):
        p = self.root / MANIFEST
        if not p.exists():
            return {"version": 1, "next": 0, "stages": {}}
        try:
            return json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise CorruptionError(MANIFEST, f"unreadable manifest ({e.msg})") from None

    def _write_manifest(self):
        tmp = self.root / (MANIFEST + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=1, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.root / MANIFEST)

    def completed_stages(self) -> list:
        return [s for s in STAGES if s in self.manifest["stages"]]

    def is_complete(self, stage) -> bool:
        return stage in self.manifest["stages"]

    def stage_meta(self, stage) -> dict:
        return self.manifest["stages"].get(stage, {}).get("meta", {})

    # writing -------------------------------------------------------------

    def begin_stage(self, stage: str) -> StageWriter:
        name = f"{self.manifest['next']:05d}-{stage}.seg"
        self.manifest["next"] += 1
        return StageWriter(self, stage, name)

    def _commit(self, stage, segment, meta):
        stages = self.manifest["stages"]
        if stage in STAGES:
            # a rerun supersedes this stage and everything downstream of it
            for later in STAGES[STAGES.index(stage):]:
                stages.pop(later, None)
        stages[stage] = {"segments": [segment], "meta": meta}
        self._write_manifest()
        self._loaded = False

    # reading -------------------------------------------------------------

    def segments(self):
        for stage in sorted(self.manifest["stages"], key=_stage_order):
            for seg in self.manifest["stages"][stage]["segments"]:
                yield stage, seg

    def verify(self):
        for _, seg in self.segments():
            self._load_segment(seg)

    def _load_segment(self, seg) -> bytes:
        path = self.root / seg["name"]
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise CorruptionError(seg["name"], "segment file missing") from None
        if hashlib.sha256(data).hexdigest() != seg["sha256"]:
            raise CorruptionError(seg["name"])
        return data

    def _load(self):
        if self._loaded:
            return
        index = defaultdict(dict)
        for _, seg in self.segments():
            data = self._load_segment(seg)
            pos, n = 0, len(data)
            while pos < n:
                if pos + _FRAME.size > n:
                    raise CorruptionError(seg["name"], "truncated frame")
                codec, klen, keylen, plen = _FRAME.unpack_from(data, pos)
                pos += _FRAME.size
                kind = data[pos:pos + klen].decode("utf-8")
                pos += klen
                key = data[pos:pos + keylen].decode("utf-8")
                pos += keylen
                index[kind][key] = (codec, data[pos:pos + plen])
                pos += plen
        self._index = dict(index)
        self._loaded = True

    def _touch(self, kind):
        if self.trace is not None:
            self.trace.append(kind)

    def _decode(self, codec, payload):
        return json.loads(payload) if codec == JSON else decode_arrays(payload)

    def get(self, kind: str, key):
        self._touch(kind)
        self._load()
        try:
            codec, payload = self._index[kind][str(key)]
        except KeyError:
            raise NotFoundError(f"no {kind} record with key {key!r}") from None
        return self._decode(codec, payload)

    def get_raw(self, kind: str, key) -> bytes:
        self._touch(kind)
        self._load()
        try:
            return self._index[kind][str(key)][1]
        except KeyError:
            raise NotFoundError(f"no {kind} record with key {key!r}") from None

    def keys(self, kind: str) -> list:
        self._touch(kind)
        self._load()
        return sorted(self._index.get(kind, {}))

    def items(self, kind: str) -> Iterator[tuple]:
        self._touch(kind)
        self._load()
        recs = self._index.get(kind, {})
        for key in sorted(recs):
            yield key, self._decode(*recs[key])

    def count(self, kind: str) -> int:
        self._load()
        return len(self._index.get(kind, {}))


def _stage_order(stage):
    return (STAGES.index(stage) if stage in STAGES else len(STAGES), stage)
