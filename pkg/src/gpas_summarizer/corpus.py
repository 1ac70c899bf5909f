"""Proposal records, corpus splits, ingestion, and minibatch collation.

A corpus file holds one proposal per line::

    {"id": "v_001-p3",
     "segments": [{"sentence": "a man runs .", "visual": [0.1, ...], "confidence": -0.4}, ...],
     "reference": "a man is running"}

:func:`load_corpus` normalizes and encodes every sentence to exactly ``L_k``
ids and checks the segment count ``L_m`` and visual width ``D_v`` against the
model configuration.  :func:`collate` stacks records into the ``[B, ...]``
arrays the model consumes.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from gpas_summarizer.adapters.base import SourceAdapter
from gpas_summarizer.adapters.jsonl_adapter import JSONLinesAdapter
from gpas_summarizer.config import ModelConfig
from gpas_summarizer.exceptions import CorpusParseError, SchemaError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.serializer import write_jsonl
from gpas_summarizer.text import BOS_ID, Vocabulary, encode_fixed, normalize_text, supervised_mask

_log = get_logger(__name__)

Role = Literal["train", "validation", "test"]
ROLES: tuple[str, ...] = ("train", "validation", "test")


@dataclass(frozen=True, eq=False)
class ProposalRecord:
    """One event proposal: ``L_m`` segment sentences and visuals, one reference.

    Attributes:
        id: Record identifier, unique within its split.
        sentences: Encoded segment sentences, ``[L_m × L_k]`` int64.
        visual: Segment visual features, ``[L_m × D_v]`` float64.
        reference: Encoded reference summary, ``[L_k]`` int64.
        segment_tokens: Normalized segment sentences (for the partition baselines).
        reference_tokens: Normalized reference (metrics score against this).
        confidences: Per-segment captioner confidence, ``None`` where absent.
    """

    id: str
    sentences: np.ndarray
    visual: np.ndarray
    reference: np.ndarray
    segment_tokens: tuple[tuple[str, ...], ...]
    reference_tokens: tuple[str, ...]
    confidences: tuple[float | None, ...] = ()

    @property
    def segments(self) -> int:
        return int(self.sentences.shape[0])

    @property
    def max_words(self) -> int:
        return int(self.reference.shape[0])

    @property
    def visual_dim(self) -> int:
        return int(self.visual.shape[1])

    @property
    def words(self) -> np.ndarray:
        """Encoder input ``w^in``: all segment sentences concatenated, ``[L_m·L_k]``."""
        return self.sentences.reshape(-1)

    def to_raw(self) -> dict[str, Any]:
        """The external JSON-lines layout, with sentences as normalized text."""
        segments: list[dict[str, Any]] = []
        for j, tokens in enumerate(self.segment_tokens):
            seg: dict[str, Any] = {"sentence": " ".join(tokens), "visual": self.visual[j].tolist()}
            conf = self.confidences[j] if j < len(self.confidences) else None
            if conf is not None:
                seg["confidence"] = conf
            segments.append(seg)
        return {"id": self.id, "segments": segments, "reference": " ".join(self.reference_tokens)}


@dataclass
class CorpusSplit:
    """The records of one split, in file order.

    Raises:
        SchemaError: If two records share an id or the role is unknown.
    """

    records: list[ProposalRecord]
    role: Role = "train"
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            msg = f"Unknown split role {self.role!r}; expected one of {ROLES}"
            raise SchemaError(msg)
        self._index = {}
        for i, record in enumerate(self.records):
            if record.id in self._index:
                msg = f"Duplicate record id {record.id!r} in {self.role} split"
                raise SchemaError(msg)
            self._index[record.id] = i

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ProposalRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> ProposalRecord:
        return self.records[index]

    def get(self, record_id: str) -> ProposalRecord:
        try:
            return self.records[self._index[record_id]]
        except KeyError:
            msg = f"No record {record_id!r} in {self.role} split"
            raise SchemaError(msg) from None

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _where(lineno: int, source: str) -> str:
    return f"record {lineno} of {source}"


def _visual_row(values: Any, dim: int, where: str) -> np.ndarray:
    if not isinstance(values, list):
        msg = f"{where}: 'visual' must be a list of numbers"
        raise CorpusParseError(msg)
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            msg = f"{where}: non-numeric visual entry {v!r}"
            raise CorpusParseError(msg)
    if len(values) != dim:
        msg = f"{where}: visual dimension {len(values)} != D_v={dim}"
        raise SchemaError(msg)
    return np.asarray(values, dtype=np.float64)


def _text_field(raw: Mapping[str, Any], key: str, where: str) -> str:
    value = raw.get(key)
    if not isinstance(value, str):
        msg = f"{where}: field {key!r} must be a string"
        raise SchemaError(msg)
    return value


def encode_record(
    raw: Mapping[str, Any],
    vocab: Vocabulary,
    config: ModelConfig,
    *,
    where: str = "record",
) -> ProposalRecord:
    """Validate and encode one raw record dict.

    Args:
        raw: A record in the external JSON-lines layout.
        vocab: Vocabulary used for encoding.
        config: Supplies ``segments`` (L_m), ``max_words`` (L_k) and ``visual_dim`` (D_v).
        where: Location prefix for error messages.

    Raises:
        SchemaError: Missing fields, wrong segment count or visual dimension.
        CorpusParseError: Non-numeric visual entries or confidences.
    """
    record_id = raw.get("id")
    if not isinstance(record_id, str) or not record_id:
        msg = f"{where}: missing or non-string 'id'"
        raise SchemaError(msg)
    where = f"{where} ({record_id})"
    segments = raw.get("segments")
    if not isinstance(segments, list):
        msg = f"{where}: 'segments' must be a list"
        raise SchemaError(msg)
    if len(segments) != config.segments:
        msg = f"{where}: {len(segments)} segments, expected L_m={config.segments}"
        raise SchemaError(msg)

    sentences = np.empty((config.segments, config.max_words), dtype=np.int64)
    visual = np.empty((config.segments, config.visual_dim), dtype=np.float64)
    segment_tokens: list[tuple[str, ...]] = []
    confidences: list[float | None] = []
    for j, seg in enumerate(segments):
        seg_where = f"{where} segment {j}"
        if not isinstance(seg, dict):
            msg = f"{seg_where}: segment must be an object"
            raise SchemaError(msg)
        tokens = normalize_text(_text_field(seg, "sentence", seg_where))
        sentences[j] = encode_fixed(tokens, vocab, config.max_words)
        visual[j] = _visual_row(seg.get("visual"), config.visual_dim, seg_where)
        segment_tokens.append(tuple(tokens))
        conf = seg.get("confidence")
        if conf is not None and (isinstance(conf, bool) or not isinstance(conf, (int, float))):
            msg = f"{seg_where}: non-numeric confidence {conf!r}"
            raise CorpusParseError(msg)
        confidences.append(None if conf is None else float(conf))

    reference_tokens = normalize_text(_text_field(raw, "reference", where))
    reference = np.asarray(encode_fixed(reference_tokens, vocab, config.max_words), dtype=np.int64)
    return ProposalRecord(
        id=record_id,
        sentences=sentences,
        visual=visual,
        reference=reference,
        segment_tokens=tuple(segment_tokens),
        reference_tokens=tuple(reference_tokens),
        confidences=tuple(confidences),
    )


def load_corpus(
    source: SourceAdapter | str | Path,
    vocab: Vocabulary,
    config: ModelConfig,
    *,
    role: Role = "train",
) -> CorpusSplit:
    """Read, validate and encode a whole split.

    Args:
        source: An adapter, or a path to a JSON-lines corpus file.
        vocab: Vocabulary used for encoding.
        config: Model configuration fixing L_m, L_k and D_v.
        role: Split role recorded on the result.

    Returns:
        The encoded :class:`CorpusSplit`, records in source order.

    Raises:
        CorpusParseError: Malformed JSON (with its line number) or non-numeric visual entries.
        SchemaError: Wrong segment count, visual dimension, or duplicate ids.
    """
    adapter = source if isinstance(source, SourceAdapter) else JSONLinesAdapter(source)
    label = str(adapter.path) if isinstance(adapter, JSONLinesAdapter) else type(adapter).__name__
    _log.debug("corpus.reading", source=label, role=role, expected=adapter.count())
    records = [
        encode_record(raw, vocab, config, where=_where(lineno, label)) for lineno, raw in adapter.read_numbered()
    ]
    split = CorpusSplit(records, role=role)
    _log.info("corpus.loaded", source=label, role=role, records=len(split))
    return split


def write_corpus(rows: Iterable[ProposalRecord | Mapping[str, Any]], path: str | Path) -> int:
    """Write records (or raw dicts) in the external JSON-lines layout.

    Returns:
        Number of records written.
    """
    count = write_jsonl((r.to_raw() if isinstance(r, ProposalRecord) else dict(r) for r in rows), path)
    _log.debug("corpus.written", path=str(path), records=count)
    return count


def iter_sentences(source: SourceAdapter | str | Path) -> Iterator[list[str]]:
    """Yield the normalized segment sentences and reference of every raw record.

    This is the text :func:`~gpas_summarizer.text.build_vocab` counts.
    """
    adapter = source if isinstance(source, SourceAdapter) else JSONLinesAdapter(source)
    for lineno, raw in adapter.read_numbered():
        where = _where(lineno, type(adapter).__name__)
        for seg in raw.get("segments") or []:
            if isinstance(seg, dict):
                yield normalize_text(_text_field(seg, "sentence", where))
        yield normalize_text(_text_field(raw, "reference", where))


# ---------------------------------------------------------------------------
# Batching
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Batch:
    """Records stacked along a leading batch axis.

    Attributes:
        ids: Record ids in batch order.
        words: Encoder input words, ``[B × L_m·L_k]``.
        visual: Visual features, ``[B × L_m × D_v]``.
        reference: Encoded references, ``[B × L_k]``.
        mask: Loss weights per reference position, ``[B × L_k]``.
    """

    ids: tuple[str, ...]
    words: np.ndarray
    visual: np.ndarray
    reference: np.ndarray
    mask: np.ndarray

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def decoder_inputs(self) -> np.ndarray:
        """Teacher-forced previous words: ``<bos>`` then ``reference[:-1]``, ``[B × L_k]``."""
        bos = np.full((self.size, 1), BOS_ID, dtype=np.int64)
        return np.concatenate([bos, self.reference[:, :-1]], axis=1)


def collate(records: Sequence[ProposalRecord], *, mask_padding: bool = True) -> Batch:
    """Stack records into a :class:`Batch`.

    Raises:
        SchemaError: If ``records`` is empty or the records disagree in shape.
    """
    if not records:
        msg = "Cannot collate an empty batch"
        raise SchemaError(msg)
    shapes = {(r.sentences.shape, r.visual.shape) for r in records}
    if len(shapes) != 1:
        msg = f"Records in one batch disagree in shape: {sorted(shapes)}"
        raise SchemaError(msg)
    reference = np.stack([r.reference for r in records])
    mask = np.asarray([supervised_mask(row.tolist(), mask_padding=mask_padding) for row in reference], dtype=np.float64)
    return Batch(
        ids=tuple(r.id for r in records),
        words=np.stack([r.words for r in records]),
        visual=np.stack([r.visual for r in records]),
        reference=reference,
        mask=mask,
    )
