"""JSON and JSON-lines I/O for corpora, decodes, metrics logs and reports.

orjson is used when installed and stdlib :mod:`json` otherwise.  Both
backends see the same input: :func:`_to_plain` first turns numpy values into
Python numbers and lists and rejects NaN and infinities, so the bytes written
and the errors raised do not depend on which backend is active.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

import numpy as np

from gpas_summarizer.exceptions import SerializationError


def _to_plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return _to_plain(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        msg = f"Cannot serialize non-finite float value {obj!r}; JSON (RFC 8259) has no NaN or Infinity"
        raise SerializationError(msg)
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

try:
    import orjson

    _BACKEND = "orjson"

    def _encode(plain: Any, pretty: bool, sort_keys: bool) -> bytes:
        option = (orjson.OPT_INDENT_2 if pretty else 0) | (orjson.OPT_SORT_KEYS if sort_keys else 0)
        return orjson.dumps(plain, option=option)

    _decode = orjson.loads

except ImportError:
    import json as _json

    _BACKEND = "json"

    def _encode(plain: Any, pretty: bool, sort_keys: bool) -> bytes:
        text = _json.dumps(
            plain,
            indent=2 if pretty else None,
            separators=None if pretty else (",", ":"),
            sort_keys=sort_keys,
            ensure_ascii=False,
            allow_nan=False,
        )
        return text.encode("utf-8")

    _decode = _json.loads  # type: ignore[assignment]


def get_backend() -> str:
    """Return the name of the active JSON backend ('orjson' or 'json')."""
    return _BACKEND


def dumps(obj: Any, *, pretty: bool = False, sort_keys: bool = False) -> bytes:
    """Serialize ``obj`` to UTF-8 JSON bytes.

    Args:
        obj: Plain data, possibly holding numpy scalars or arrays.
        pretty: Indent with 2 spaces.
        sort_keys: Emit object keys in sorted order.

    Raises:
        SerializationError: Non-finite floats or an unserializable value.
    """
    plain = _to_plain(obj)
    try:
        return _encode(plain, pretty, sort_keys)
    except Exception as exc:
        msg = f"Failed to serialize object: {exc}"
        raise SerializationError(msg) from exc


def loads(data: bytes | str) -> Any:
    """Parse JSON bytes or text.

    Raises:
        SerializationError: If ``data`` is not valid JSON.
    """
    try:
        return _decode(data)
    except Exception as exc:
        msg = f"Failed to deserialize JSON: {exc}"
        raise SerializationError(msg) from exc


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_json(obj: Any, path: str | Path, *, pretty: bool = True) -> int:
    """Write one JSON document, creating parent directories; returns the byte count.

    Raises:
        SerializationError: If encoding or writing fails.
    """
    data = dumps(obj, pretty=pretty)
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    except OSError as exc:
        msg = f"Failed to write JSON to {path}: {exc}"
        raise SerializationError(msg) from exc
    return len(data)


def read_json(path: str | Path) -> Any:
    """Read one JSON document.

    Raises:
        SerializationError: If the file is missing or not valid JSON.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        msg = f"Failed to read JSON from {path}: {exc}"
        raise SerializationError(msg) from exc
    return loads(data)


def write_jsonl(rows: Iterable[Any], path: str | Path) -> int:
    """Write one compact JSON document per line, replacing the file.

    Returns:
        Number of lines written.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with target.open("wb") as fh:
        for row in rows:
            fh.write(dumps(row) + b"\n")
            count += 1
    return count


def append_jsonl(row: Any, path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("ab") as fh:
        fh.write(dumps(row) + b"\n")


def iter_jsonl(path: str | Path) -> Iterator[Any]:
    """Yield parsed documents from a JSON-lines file, skipping blank lines.

    Raises:
        SerializationError: On an invalid line; the message names its 1-based number.
    """
    with Path(path).open("rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                yield loads(line)
            except SerializationError as exc:
                msg = f"Invalid JSON on line {lineno} of '{path}': {exc}"
                raise SerializationError(msg) from exc
