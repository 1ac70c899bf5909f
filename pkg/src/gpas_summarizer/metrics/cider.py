"""CIDEr-D: consensus on tf-idf weighted n-grams, clipped, with a length penalty.

Document frequencies come from the references of the scored corpus itself,
one document per pair. Per n-gram order the candidate and each reference are
turned into tf-idf vectors; the candidate's weights are clipped at the
reference's, a Gaussian penalty on the length difference is applied, and
orders 1..4 and references are averaged. The result is scaled by 10.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from gpas_summarizer.logging import get_logger
from gpas_summarizer.metrics.ngrams import EvalPair, Ngram, ngram_counts, require_pairs

_log = get_logger(__name__)

MAX_N = 4
SIGMA = 6.0
SCALE = 10.0


@dataclass(frozen=True)
class TfIdf:
    """Per-order tf-idf weights of one sentence."""

    vectors: tuple[dict[Ngram, float], ...]
    norms: tuple[float, ...]
    length: int


def document_frequency(pairs: Sequence[EvalPair], max_n: int = MAX_N) -> Counter[Ngram]:
    """Number of pairs whose reference set contains each n-gram."""
    df: Counter[Ngram] = Counter()
    for pair in pairs:
        seen: set[Ngram] = set()
        for ref in pair.references:
            for n in range(1, max_n + 1):
                seen.update(ngram_counts(ref, n))
        df.update(seen)
    return df


def tfidf(tokens: Sequence[str], df: Mapping[Ngram, int], log_docs: float, max_n: int = MAX_N) -> TfIdf:
    vectors: list[dict[Ngram, float]] = []
    norms: list[float] = []
    for n in range(1, max_n + 1):
        vec = {g: c * (log_docs - math.log(max(1.0, float(df.get(g, 0))))) for g, c in ngram_counts(tokens, n).items()}
        vectors.append(vec)
        norms.append(math.sqrt(sum(w * w for w in vec.values())))
    return TfIdf(tuple(vectors), tuple(norms), len(tokens))


def clipped_similarity(
    cand: Mapping[Ngram, float],
    ref: Mapping[Ngram, float],
    cand_norm: float,
    ref_norm: float,
) -> float | None:
    """Clipped cosine of two tf-idf vectors, ``None`` when both are all-zero."""
    if cand_norm == 0.0 and ref_norm == 0.0:
        return None
    if cand_norm == 0.0 or ref_norm == 0.0:
        return 0.0
    dot = sum(min(w, ref[g]) * ref[g] for g, w in cand.items() if g in ref)
    return dot / (cand_norm * ref_norm)


def length_penalty(cand_length: int, ref_length: int, sigma: float = SIGMA) -> float:
    delta = float(cand_length - ref_length)
    return math.exp(-(delta**2) / (2.0 * sigma**2))


def _pair_score(
    pair: EvalPair, df: Mapping[Ngram, int], log_docs: float, *, max_n: int, sigma: float
) -> float:
    cand = tfidf(pair.candidate, df, log_docs, max_n)
    per_ref: list[float] = []
    for ref_tokens in pair.references:
        ref = tfidf(ref_tokens, df, log_docs, max_n)
        penalty = length_penalty(cand.length, ref.length, sigma)
        sims: list[float] = []
        for n in range(max_n):
            sim = clipped_similarity(cand.vectors[n], ref.vectors[n], cand.norms[n], ref.norms[n])
            if sim is None:
                # No informative n-grams on either side: only an exact match counts.
                sim = 1.0 if pair.candidate == ref_tokens else 0.0
            sims.append(sim * penalty)
        per_ref.append(float(np.mean(sims)))
    return SCALE * float(np.mean(per_ref))


def cider_d_scores(pairs: Sequence[EvalPair], *, max_n: int = MAX_N, sigma: float = SIGMA) -> list[float]:
    """Per-pair CIDEr-D against document frequencies of the whole corpus."""
    require_pairs(pairs, "cider_d")
    df = document_frequency(pairs, max_n)
    log_docs = math.log(float(len(pairs)))
    scores = [_pair_score(p, df, log_docs, max_n=max_n, sigma=sigma) for p in pairs]
    _log.debug("cider.scored", pairs=len(pairs), ngrams=len(df))
    return scores


def cider_d(pairs: Sequence[EvalPair], *, max_n: int = MAX_N, sigma: float = SIGMA) -> float:
    """Corpus CIDEr-D: mean of the per-pair scores.

    Raises:
        MetricError: On an empty corpus.
    """
    return float(np.mean(cider_d_scores(pairs, max_n=max_n, sigma=sigma)))
