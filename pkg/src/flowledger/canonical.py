"""Canonical JSON encoding and content addressing.

Everything that gets hashed or signed in this project goes through
``canonical_bytes``: sorted keys, no insignificant whitespace, UTF-8.
Equal values therefore always produce equal bytes, equal CIDs and equal
signatures.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

CID_PREFIX = "cid:"


def canonical_bytes(value: Any) -> bytes:
    """Encode ``value`` as canonical JSON bytes."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def canonical_text(value: Any) -> str:
    return canonical_bytes(value).decode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def cid_of(data: bytes) -> str:
    """Content identifier of raw bytes: ``cid:`` + SHA-256 hex."""
    return CID_PREFIX + sha256_hex(data)


def cid_of_value(value: Any) -> str:
    """Content identifier of a JSON value's canonical encoding."""
    return cid_of(canonical_bytes(value))


def is_cid(text: str) -> bool:
    if not text.startswith(CID_PREFIX):
        return False
    hexpart = text[len(CID_PREFIX):]
    return len(hexpart) == 64 and all(c in "0123456789abcdef" for c in hexpart)
