"""Scored pairs and n-gram counting shared by the caption metrics."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from gpas_summarizer.exceptions import MetricError
from gpas_summarizer.text import BLANK, EOS, PAD, Vocabulary

Ngram = tuple[str, ...]

_STRIPPED = frozenset({PAD, BLANK, EOS})


@dataclass(frozen=True)
class EvalPair:
    """One candidate sentence and its reference sentences (post-normalization tokens)."""

    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.references:
            msg = "an EvalPair needs at least one reference"
            raise MetricError(msg)
        object.__setattr__(self, "candidate", strip_special(self.candidate))
        object.__setattr__(self, "references", tuple(strip_special(r) for r in self.references))

    @classmethod
    def of(cls, candidate: Sequence[str] | str, *references: Sequence[str] | str) -> EvalPair:
        """Build from token lists or whitespace-separated strings."""

        def _tokens(value: Sequence[str] | str) -> tuple[str, ...]:
            return tuple(value.split()) if isinstance(value, str) else tuple(value)

        return cls(_tokens(candidate), tuple(_tokens(r) for r in references))

    @classmethod
    def from_ids(cls, candidate: Iterable[int], reference: Sequence[str], vocab: Vocabulary) -> EvalPair:
        """Decode candidate ids (stopping at ``<eos>``) and pair them with a reference."""
        return cls(tuple(vocab.decode(candidate)), (tuple(reference),))


def strip_special(tokens: Iterable[str]) -> tuple[str, ...]:
    """Drop ``<pad>``, ``<blank>`` and ``<eos>``; nothing else is touched."""
    return tuple(tok for tok in tokens if tok not in _STRIPPED)


def ngram_counts(tokens: Sequence[str], n: int) -> Counter[Ngram]:
    """Occurrences of every contiguous ``n``-gram."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def require_pairs(pairs: Sequence[EvalPair], metric: str) -> None:
    if not pairs:
        msg = f"{metric}: no candidate/reference pairs to score"
        raise MetricError(msg)
