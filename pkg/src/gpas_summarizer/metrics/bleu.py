"""Corpus BLEU-1..4 with clipped n-gram counts and the brevity penalty.

Clipped matches and candidate n-gram totals are summed over the whole corpus
before precisions are formed; the effective reference length of each pair is
the reference length closest to the candidate's (ties go to the shorter one).
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field

from gpas_summarizer.metrics.ngrams import EvalPair, Ngram, ngram_counts, require_pairs


@dataclass
class BleuStats:
    """Sufficient statistics; shards combine with :meth:`merge`."""

    max_n: int = 4
    matches: list[int] = field(default_factory=list)
    totals: list[int] = field(default_factory=list)
    candidate_length: int = 0
    reference_length: int = 0

    def __post_init__(self) -> None:
        self.matches = self.matches or [0] * self.max_n
        self.totals = self.totals or [0] * self.max_n

    def add(self, pair: EvalPair) -> None:
        cand = pair.candidate
        self.candidate_length += len(cand)
        self.reference_length += closest_reference_length(len(cand), [len(r) for r in pair.references])
        for n in range(1, self.max_n + 1):
            counts = ngram_counts(cand, n)
            ceiling: Counter[Ngram] = Counter()
            for ref in pair.references:
                ceiling |= ngram_counts(ref, n)
            self.matches[n - 1] += sum(min(c, ceiling[g]) for g, c in counts.items())
            self.totals[n - 1] += sum(counts.values())

    def merge(self, other: BleuStats) -> BleuStats:
        return BleuStats(
            self.max_n,
            [a + b for a, b in zip(self.matches, other.matches, strict=True)],
            [a + b for a, b in zip(self.totals, other.totals, strict=True)],
            self.candidate_length + other.candidate_length,
            self.reference_length + other.reference_length,
        )

    def brevity_penalty(self) -> float:
        c, r = self.candidate_length, self.reference_length
        if c == 0:
            return 0.0
        return 1.0 if c >= r else math.exp(1.0 - r / c)

    def scores(self, *, smooth: bool = False) -> list[float]:
        """BLEU-1..max_n in ``[0, 1]``.

        With ``smooth`` every order above 1 uses add-one counts, which keeps
        short single sentences from collapsing to zero.
        """
        bp = self.brevity_penalty()
        out: list[float] = []
        log_sum = 0.0
        dead = False
        for n in range(1, self.max_n + 1):
            m, t = self.matches[n - 1], self.totals[n - 1]
            if smooth and n > 1:
                m, t = m + 1, t + 1
            if m == 0 or t == 0:
                dead = True
            if not dead:
                log_sum += math.log(m / t)
            out.append(0.0 if dead else bp * math.exp(log_sum / n))
        return out


def closest_reference_length(candidate_length: int, reference_lengths: Sequence[int]) -> int:
    return min(reference_lengths, key=lambda r: (abs(r - candidate_length), r))


def bleu(pairs: Sequence[EvalPair], max_n: int = 4) -> list[float]:
    """Corpus BLEU-1..``max_n`` in ``[0, 1]``, unsmoothed.

    Raises:
        MetricError: On an empty corpus.
    """
    require_pairs(pairs, "bleu")
    stats = BleuStats(max_n)
    for pair in pairs:
        stats.add(pair)
    return stats.scores()


def sentence_bleu(pair: EvalPair, max_n: int = 4, *, smooth: bool = True) -> list[float]:
    """BLEU of one pair, add-one smoothed by default (for debugging single outputs)."""
    stats = BleuStats(max_n)
    stats.add(pair)
    return stats.scores(smooth=smooth)
