"""Partition-module baselines that need no summarizer.

``PM-ave`` scores every segment sentence of a proposal against its reference
and averages; ``PM-best`` keeps only the segment sentence the partition
captioner was most confident about.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from gpas_summarizer.corpus import ProposalRecord
from gpas_summarizer.metrics.ngrams import EvalPair
from gpas_summarizer.metrics.report import Report, average_reports, score_pairs, token_accuracy_percent
from gpas_summarizer.text import supervised_mask


@dataclass(frozen=True)
class PMBaselines:
    pm_ave: Report
    pm_best: tuple[str, ...]
    best_index: int


def pm_best_index(confidences: Sequence[float | None]) -> int:
    """Segment with the highest confidence, lowest index on ties.

    Falls back to segment 0 when any confidence is missing.
    """
    if not confidences or any(c is None for c in confidences):
        return 0
    return int(np.argmax(np.asarray(confidences, dtype=np.float64)))


def segment_pair(record: ProposalRecord, segment: int) -> EvalPair:
    return EvalPair(record.segment_tokens[segment], (record.reference_tokens,))


def segment_token_counts(record: ProposalRecord, segment: int, *, mask_padding: bool = True) -> tuple[int, int]:
    """Position-wise agreement of an encoded segment sentence with the encoded reference."""
    weights = np.asarray(supervised_mask(record.reference.tolist(), mask_padding=mask_padding)) > 0
    hits = record.sentences[segment] == record.reference
    return int(np.sum(hits & weights)), int(np.sum(weights))


def _segment_report(records: Sequence[ProposalRecord], choose: Sequence[int]) -> Report:
    pairs = [segment_pair(r, j) for r, j in zip(records, choose, strict=True)]
    counts = [segment_token_counts(r, j) for r, j in zip(records, choose, strict=True)]
    correct = sum(c for c, _ in counts)
    supervised = sum(s for _, s in counts)
    return score_pairs(pairs, token_acc=token_accuracy_percent(correct, supervised))


def pm_baselines(record: ProposalRecord) -> PMBaselines:
    """Both baselines for one proposal."""
    reports = [_segment_report([record], [j]) for j in range(record.segments)]
    best = pm_best_index(record.confidences)
    return PMBaselines(pm_ave=average_reports(reports), pm_best=record.segment_tokens[best], best_index=best)


def pm_ave_report(records: Sequence[ProposalRecord]) -> Report:
    """Corpus report of each segment position in turn, averaged over positions."""
    if not records:
        return score_pairs([])
    segments = records[0].segments
    return average_reports([_segment_report(records, [j] * len(records)) for j in range(segments)])


def pm_best_report(records: Sequence[ProposalRecord]) -> Report:
    """Corpus report of the most confident segment sentence of every proposal."""
    return _segment_report(records, [pm_best_index(r.confidences) for r in records])
