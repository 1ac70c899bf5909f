"""JSON-lines corpus adapter, streaming, line-by-line.

Each non-blank line of the input file must be one JSON object describing a
proposal record.  Lines are parsed one at a time so the whole corpus is never
held as text in memory.
"""

from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

from gpas_summarizer.adapters.base import RawRecord, SourceAdapter
from gpas_summarizer.exceptions import CorpusParseError, SerializationError
from gpas_summarizer.serializer import loads


class JSONLinesAdapter(SourceAdapter):
    """Read proposal records from a JSON-lines corpus file.

    Example:
        >>> adapter = JSONLinesAdapter("corpus/train.jsonl")
        >>> for row in adapter.read():
        ...     print(row["id"], len(row["segments"]))
    """

    def __init__(self, path: str | Path, *, encoding: str = "utf-8-sig") -> None:
        """Initialize with a file path.

        Args:
            path: Path to the ``.jsonl`` corpus.
            encoding: File encoding.  ``utf-8-sig`` transparently strips a
                UTF-8 BOM if present.

        Raises:
            CorpusParseError: If the file does not exist.
        """
        self._path = Path(path)
        if not self._path.exists():
            msg = f"Corpus file not found: {self._path}"
            raise CorpusParseError(msg)
        self._encoding = encoding

    @property
    def path(self) -> Path:
        return self._path

    def read_numbered(self) -> Iterator[tuple[int, RawRecord]]:
        """Yield ``(line_number, record)``; blank lines are skipped.

        Raises:
            CorpusParseError: On invalid JSON or a line that is not an object.
        """
        with self._path.open(encoding=self._encoding) as fh:
            for lineno, raw_line in enumerate(fh, start=1):
                line = raw_line.strip()
                if not line:
                    continue
                try:
                    record = loads(line)
                except SerializationError as exc:
                    msg = f"Invalid JSON on line {lineno} of '{self._path}': {exc}"
                    raise CorpusParseError(msg) from exc
                if not isinstance(record, dict):
                    msg = f"Line {lineno} of '{self._path}' is not a JSON object"
                    raise CorpusParseError(msg)
                yield lineno, record

    def read(self) -> Iterator[RawRecord]:
        for _, record in self.read_numbered():
            yield record

    def count(self) -> int | None:
        """Return the number of non-blank lines, or ``None`` on I/O error."""
        try:
            with self._path.open(encoding=self._encoding) as fh:
                return sum(1 for raw_line in fh if raw_line.strip())
        except OSError:
            return None
