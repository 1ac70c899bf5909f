"""ROUGE-L: longest-common-subsequence F-measure, beta = 1.2."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from gpas_summarizer.metrics.ngrams import EvalPair, require_pairs

BETA = 1.2


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not a or not b:
        return 0
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int64)
    for i, tok_a in enumerate(a, start=1):
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                table[i, j] = table[i - 1, j - 1] + 1
            else:
                table[i, j] = max(table[i - 1, j], table[i, j - 1])
    return int(table[-1, -1])


def rouge_l_pair(pair: EvalPair, beta: float = BETA) -> float:
    """ROUGE-L of one pair in ``[0, 1]``.

    Precision and recall are each maximised over the references before they
    are combined, as the usual captioning evaluation does.
    """
    cand = pair.candidate
    if not cand:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    for ref in pair.references:
        lcs = lcs_length(cand, ref)
        precisions.append(lcs / len(cand))
        recalls.append(lcs / len(ref) if ref else 0.0)
    p, r = max(precisions), max(recalls)
    if p == 0.0 or r == 0.0:
        return 0.0
    return ((1.0 + beta**2) * p * r) / (r + beta**2 * p)


def rouge_l(pairs: Sequence[EvalPair], beta: float = BETA) -> float:
    """Macro average of per-pair ROUGE-L.

    Raises:
        MetricError: On an empty corpus.
    """
    require_pairs(pairs, "rouge_l")
    return float(np.mean([rouge_l_pair(p, beta) for p in pairs]))
