"""Canonical JSON encoding used for bundles, graph exports, and HTTP bodies.

Keys are sorted and encoding is UTF-8 without ASCII escaping, so equal
values always serialize to identical bytes. Bundles and graph documents use
the indented form (diff-friendly, trailing newline); HTTP bodies use the
compact form.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_json(obj: Any, *, indent: int | None = None) -> str:
    if indent is None:
        return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=indent) + "\n"


def canonical_json_bytes(obj: Any, *, indent: int | None = None) -> bytes:
    return canonical_json(obj, indent=indent).encode("utf-8")
