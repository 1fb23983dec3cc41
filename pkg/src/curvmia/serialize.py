"""Canonical JSON serialization and content digests.

Every artifact this package persists (models, ledgers, manifests, reports)
goes through :func:`dumps_canonical` so that identical inputs always produce
byte-identical files: floats are rendered with 17 significant digits (a
lossless float64 round trip), mapping keys are sorted, and there is no
locale- or platform-dependent formatting.  Digests are SHA-256 over the
canonical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from typing import Any

import numpy as np


def _normalize(obj: Any) -> Any:
    """Reduce numpy containers/scalars to plain Python values."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write(obj: Any, parts: list[str], indent: int | None, level: int) -> None:
    obj = _normalize(obj)
    if obj is None or isinstance(obj, (bool, str)):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, int):
        parts.append(repr(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj!r}")
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, (dict, list, tuple)):
        is_dict = isinstance(obj, dict)
        open_ch, close_ch = ("{", "}") if is_dict else ("[", "]")
        if not obj:
            parts.append(open_ch + close_ch)
            return
        item_pad = "\n" + " " * (indent * (level + 1)) if indent else ""
        close_pad = "\n" + " " * (indent * level) if indent else ""
        parts.append(open_ch)
        items = sorted(obj.items()) if is_dict else [(None, v) for v in obj]
        for n, (key, value) in enumerate(items):
            parts.append(("," if n else "") + item_pad)
            if is_dict:
                if not isinstance(key, str):
                    raise TypeError(f"mapping keys must be strings, got {type(key).__name__}")
                parts.append(json.dumps(key) + (": " if indent else ":"))
            _write(value, parts, indent, level + 1)
        parts.append(close_pad + close_ch)
    else:
        raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


def dumps_canonical(obj: Any, indent: int | None = None) -> str:
    """Serialize `obj` to canonical JSON text (trailing newline when indented)."""
    parts: list[str] = []
    _write(obj, parts, indent, 0)
    text = "".join(parts)
    return text + "\n" if indent else text


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def digest_of(obj: Any) -> str:
    """SHA-256 digest of the canonical serialization of `obj`."""
    return sha256_hex(dumps_canonical(obj))


def write_canonical(path, obj: Any, indent: int | None = 2) -> str:
    """Atomically write canonical JSON to `path`; returns its digest."""
    text = dumps_canonical(obj, indent=indent)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return sha256_hex(text)
