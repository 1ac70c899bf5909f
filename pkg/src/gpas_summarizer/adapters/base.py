"""The interface every corpus source implements.

A source yields raw proposal records, plain dicts shaped like one line of a
corpus file::

    {"id": "v_01", "segments": [{"sentence": "...", "visual": [...]}, ...], "reference": "..."}

Validation and encoding happen later, in :func:`~gpas_summarizer.corpus.load_corpus`;
a source only has to say where each record came from.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterator
from typing import Any

RawRecord = dict[str, Any]


class SourceAdapter(ABC):
    """Base for corpus sources."""

    @abstractmethod
    def read(self) -> Iterator[RawRecord]:
        """Yield raw records in source order."""

    def read_numbered(self) -> Iterator[tuple[int, RawRecord]]:
        """Yield ``(position, record)``, positions starting at 1.

        Errors raised while encoding quote the position, so file-backed
        sources override this to report physical line numbers.
        """
        yield from enumerate(self.read(), start=1)

    def count(self) -> int | None:
        """Number of records, or ``None`` when the source cannot tell without reading."""
        return None
