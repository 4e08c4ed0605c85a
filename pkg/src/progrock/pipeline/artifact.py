"""ModelArtifact container.

Layout (little-endian)::

    "PRGA" | version u16 | kind u8 | config length u32 | config JSON (UTF-8)
    section count u32
    per section: name length u16 | name | dtype length u8 | dtype str
                 | ndim u8 | shape u64 * ndim | byte length u64 | raw bytes

Config JSON is written with sorted keys, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ArtifactFormatError

MAGIC = b"PRGA"
VERSION = 1
KINDS = {"pca+ensemble": 1, "pca+boosted": 2, "neural": 3}
KIND_NAMES = {v: k for k, v in KINDS.items()}


@dataclass
class ModelArtifact:
    kind: str
    config: dict
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        if self.kind not in KINDS:
            raise ArtifactFormatError(f"unknown artifact kind {self.kind!r}")
        cfg = json.dumps(self.config, sort_keys=True, separators=(",", ":")).encode("utf-8")
        parts = [MAGIC, struct.pack("<HBI", VERSION, KINDS[self.kind], len(cfg)), cfg,
                 struct.pack("<I", len(self.arrays))]
        for name, arr in self.arrays.items():
            arr = np.asarray(arr)
            dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder not in ("|", "<") else arr.dtype
            arr = np.ascontiguousarray(arr, dtype=dt)
            dstr = arr.dtype.str.encode("ascii")
            nm = name.encode("utf-8")
            parts += [struct.pack("<H", len(nm)), nm, struct.pack("<B", len(dstr)), dstr,
                      struct.pack("<B", arr.ndim), struct.pack(f"<{arr.ndim}Q", *arr.shape),
                      struct.pack("<Q", arr.nbytes), arr.tobytes()]
        return b"".join(parts)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelArtifact":
        if data[:4] != MAGIC:
            raise ArtifactFormatError(f"bad artifact magic {data[:4]!r}")
        try:
            version, kind, clen = struct.unpack_from("<HBI", data, 4)
            if version != VERSION:
                raise ArtifactFormatError(f"unsupported artifact version {version}")
            if kind not in KIND_NAMES:
                raise ArtifactFormatError(f"unknown artifact kind code {kind}")
            pos = 4 + struct.calcsize("<HBI")
            config = json.loads(data[pos:pos + clen].decode("utf-8"))
            pos += clen
            (count,) = struct.unpack_from("<I", data, pos)
            pos += 4
            arrays = {}
            for _ in range(count):
                (nlen,) = struct.unpack_from("<H", data, pos)
                pos += 2
                name = data[pos:pos + nlen].decode("utf-8")
                pos += nlen
                (dlen,) = struct.unpack_from("<B", data, pos)
                pos += 1
                dtype = np.dtype(data[pos:pos + dlen].decode("ascii"))
                pos += dlen
                (ndim,) = struct.unpack_from("<B", data, pos)
                pos += 1
                shape = struct.unpack_from(f"<{ndim}Q", data, pos)
                pos += 8 * ndim
                (nbytes,) = struct.unpack_from("<Q", data, pos)
                pos += 8
                if pos + nbytes > len(data):
                    raise ArtifactFormatError(f"section {name!r} is truncated")
                arrays[name] = np.frombuffer(data, dtype=dtype, count=nbytes // dtype.itemsize,
                                             offset=pos).reshape(shape).copy()
                pos += nbytes
        except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ArtifactFormatError(f"corrupt artifact: {exc}") from exc
        if pos != len(data):
            raise ArtifactFormatError("trailing bytes after artifact sections")
        return cls(KIND_NAMES[kind], config, arrays)

    @classmethod
    def load(cls, path) -> "ModelArtifact":
        return cls.from_bytes(Path(path).read_bytes())
