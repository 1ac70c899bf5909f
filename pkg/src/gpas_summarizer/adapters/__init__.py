"""Source adapters for ingesting proposal-record corpora."""

from __future__ import annotations

from gpas_summarizer.adapters.base import SourceAdapter
from gpas_summarizer.adapters.dict_adapter import DictAdapter
from gpas_summarizer.adapters.jsonl_adapter import JSONLinesAdapter

__all__ = [
    "DictAdapter",
    "JSONLinesAdapter",
    "SourceAdapter",
]
