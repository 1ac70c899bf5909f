"""Captioning metrics (BLEU-1..4, ROUGE-L, CIDEr-D) and the partition baselines."""

from __future__ import annotations

from gpas_summarizer.metrics.baselines import PMBaselines, pm_ave_report, pm_baselines, pm_best_index, pm_best_report
from gpas_summarizer.metrics.bleu import BleuStats, bleu, sentence_bleu
from gpas_summarizer.metrics.cider import cider_d, cider_d_scores, document_frequency
from gpas_summarizer.metrics.ngrams import EvalPair, ngram_counts, strip_special
from gpas_summarizer.metrics.report import (
    METRIC_KEYS,
    REPORT_KEYS,
    Report,
    average_reports,
    report_from_decodes,
    score_pairs,
    token_accuracy_percent,
    write_report,
)
from gpas_summarizer.metrics.rouge import lcs_length, rouge_l

__all__ = [
    "METRIC_KEYS",
    "REPORT_KEYS",
    "BleuStats",
    "EvalPair",
    "PMBaselines",
    "Report",
    "average_reports",
    "bleu",
    "cider_d",
    "cider_d_scores",
    "document_frequency",
    "lcs_length",
    "ngram_counts",
    "pm_ave_report",
    "pm_baselines",
    "pm_best_index",
    "pm_best_report",
    "report_from_decodes",
    "rouge_l",
    "score_pairs",
    "sentence_bleu",
    "strip_special",
    "token_accuracy_percent",
    "write_report",
]
