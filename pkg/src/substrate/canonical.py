"""Canonical byte serialization.

Layout rules: fields in fixed order, integers as little-endian u32/u64,
floats as their IEEE-754 binary64 bit pattern, strings as u32 length + UTF-8.
Two payloads are equal iff the objects they encode are equal.
"""

import hashlib
import json
import struct


class Writer:
    def __init__(self):
        self._parts = []

    def u8(self, v):
        self._parts.append(struct.pack("<B", v))
        return self

    def u32(self, v):
        self._parts.append(struct.pack("<I", v))
        return self

    def u64(self, v):
        self._parts.append(struct.pack("<Q", v))
        return self

    def f64(self, v):
        self._parts.append(struct.pack("<d", v))
        return self

    def f64_array(self, values):
        # values: 1-d float64 numpy array or sequence of floats
        self._parts.append(struct.pack(f"<{len(values)}d", *values))
        return self

    def text(self, s):
        b = s.encode("utf-8")
        self._parts.append(struct.pack("<I", len(b)))
        self._parts.append(b)
        return self

    def texts(self, items):
        self.u32(len(items))
        for s in items:
            self.text(s)
        return self

    def getvalue(self):
        return b"".join(self._parts)


def sha256(data):
    return hashlib.sha256(data).hexdigest()


def json_bytes(obj):
    """Deterministic JSON encoding used for digests and reports."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def json_digest(obj):
    return sha256(json_bytes(obj))
