"""Records already in memory, e.g. from the synthetic generator or a re-encode."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from typing import Any

from gpas_summarizer.adapters.base import RawRecord, SourceAdapter


class DictAdapter(SourceAdapter):
    """Serve a list of raw record dicts.

    A single mapping is treated as a one-record corpus.  Iterables are
    copied up front, so a generator can be read more than once.

    Example:
        >>> DictAdapter([{"id": "r0", "segments": [], "reference": "a man runs"}]).count()
        1
    """

    def __init__(self, records: Mapping[str, Any] | Iterable[Mapping[str, Any]]) -> None:
        items = [records] if isinstance(records, Mapping) else list(records)
        self._records: list[RawRecord] = [dict(r) for r in items]

    def read(self) -> Iterator[RawRecord]:
        yield from self._records

    def count(self) -> int:
        return len(self._records)
