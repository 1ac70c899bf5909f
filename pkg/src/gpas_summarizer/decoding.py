"""Decode a whole split and collect the rows ``gpas eval`` scores.

Each row is::

    {"id": "...", "hypothesis": "a man runs", "reference": "a man is running",
     "confidence": -0.21, "correct": 6, "supervised": 7}

``confidence`` is the mean log-probability of the greedy sentence and the
``correct`` / ``supervised`` counts come from a teacher-forced pass over the
same record.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any

from gpas_summarizer.autodiff import no_grad
from gpas_summarizer.corpus import CorpusSplit
from gpas_summarizer.logging import get_logger
from gpas_summarizer.model import ModelParams, forward_teacher_forced, greedy_decode_batch
from gpas_summarizer.text import Vocabulary
from gpas_summarizer.training import check_compatible, iter_batches, token_accuracy

_log = get_logger(__name__)


def iter_decodes(
    split: CorpusSplit,
    params: ModelParams,
    vocab: Vocabulary,
    *,
    batch_size: int = 32,
    mask_padding: bool = True,
) -> Iterator[dict[str, Any]]:
    """Yield one decode row per record, in split order."""
    check_compatible(split, params.config)
    for batch in iter_batches(split, batch_size, mask_padding=mask_padding):
        hyps = greedy_decode_batch(batch, params)
        with no_grad():
            logits = forward_teacher_forced(batch, params).logits.data
        for b, (record_id, hyp) in enumerate(zip(batch.ids, hyps, strict=True)):
            correct, supervised = token_accuracy(logits[b], batch.reference[b], batch.mask[b])
            yield {
                "id": record_id,
                "hypothesis": " ".join(vocab.decode(hyp.ids)),
                "reference": " ".join(split.get(record_id).reference_tokens),
                "confidence": hyp.confidence,
                "correct": correct,
                "supervised": supervised,
            }


def decode_split(
    split: CorpusSplit,
    params: ModelParams,
    vocab: Vocabulary,
    *,
    batch_size: int = 32,
    mask_padding: bool = True,
) -> list[dict[str, Any]]:
    rows = list(iter_decodes(split, params, vocab, batch_size=batch_size, mask_padding=mask_padding))
    _log.info("decode.done", records=len(rows), label=params.config.label())
    return rows
