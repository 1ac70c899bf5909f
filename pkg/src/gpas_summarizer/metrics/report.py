"""Evaluation reports: the metric dictionary written by ``gpas eval``.

A report is a flat mapping with the keys in :data:`REPORT_KEYS`. BLEU, ROUGE-L
and token accuracy are scaled by 100 (percentages); CIDEr-D keeps its own
scale, which already includes the factor 10.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from gpas_summarizer.exceptions import MetricError, SerializationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.metrics.bleu import bleu
from gpas_summarizer.metrics.cider import cider_d
from gpas_summarizer.metrics.ngrams import EvalPair
from gpas_summarizer.metrics.rouge import rouge_l
from gpas_summarizer.serializer import write_json

_log = get_logger(__name__)

REPORT_KEYS: tuple[str, ...] = ("B1", "B2", "B3", "B4", "RL", "CIDErD", "token_acc")
METRIC_KEYS: tuple[str, ...] = REPORT_KEYS[:-1]

Report = dict[str, float | None]


def token_accuracy_percent(correct: int, supervised: int) -> float | None:
    """``100 * correct / supervised``, ``None`` when nothing was supervised."""
    if supervised <= 0:
        return None
    return 100.0 * correct / supervised


def score_pairs(pairs: Sequence[EvalPair], *, token_acc: float | None = None) -> Report:
    """Full metric report of a corpus of pairs.

    Args:
        pairs: Candidate/reference pairs, at least one.
        token_acc: Token accuracy in percent, computed by the caller from
            teacher-forced counts; ``None`` if unavailable.
    """
    b = bleu(pairs)
    report: Report = {f"B{n}": 100.0 * b[n - 1] for n in range(1, 5)}
    report["RL"] = 100.0 * rouge_l(pairs)
    report["CIDErD"] = cider_d(pairs)
    report["token_acc"] = token_acc
    return report


def average_reports(reports: Sequence[Mapping[str, float | None]]) -> Report:
    """Key-wise mean; a key that is ``None`` in any report stays ``None``."""
    if not reports:
        msg = "cannot average an empty list of reports"
        raise MetricError(msg)
    out: Report = {}
    for key in REPORT_KEYS:
        values = [r.get(key) for r in reports]
        out[key] = None if any(v is None for v in values) else float(np.mean(values))
    return out


def report_from_decodes(rows: Iterable[Mapping[str, Any]]) -> Report:
    """Aggregate ``gpas decode`` output rows into one report.

    Each row carries ``hypothesis`` and ``reference`` (space-joined tokens)
    plus the teacher-forced ``correct`` / ``supervised`` counts.
    """
    pairs: list[EvalPair] = []
    correct = supervised = 0
    for row in rows:
        pairs.append(EvalPair.of(str(row["hypothesis"]), str(row["reference"])))
        correct += int(row.get("correct", 0))
        supervised += int(row.get("supervised", 0))
    report = score_pairs(pairs, token_acc=token_accuracy_percent(correct, supervised))
    _log.info("eval.scored", records=len(pairs), **{k: v for k, v in report.items() if v is not None})
    return report


def write_report(report: Mapping[str, float | None], path: str | Path) -> None:
    """Write a report as JSON, refusing non-finite values."""
    for key, value in report.items():
        if value is not None and not math.isfinite(value):
            msg = f"report value {key}={value!r} is not finite"
            raise SerializationError(msg)
    write_json({key: report.get(key) for key in REPORT_KEYS}, path)
