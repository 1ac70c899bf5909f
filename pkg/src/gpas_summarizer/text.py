"""Text normalization, vocabulary construction, and fixed-length encoding.

Sentences are lowercased and stripped of everything outside ``[a-z ]``; the
vocabulary keeps tokens seen at least three times in the training split and
maps everything else to ``<unk>``.  Encoded sentences always have exactly
``L_k`` ids: content, then ``<eos>``, then ``<blank>`` padding.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from gpas_summarizer.exceptions import ConfigurationError, CorpusParseError, IndexLookupError

PAD = "<pad>"
BLANK = "<blank>"
UNK = "<unk>"
BOS = "<bos>"
EOS = "<eos>"

#: Reserved tokens in id order (ids 0..4).
RESERVED: tuple[str, ...] = (PAD, BLANK, UNK, BOS, EOS)
PAD_ID, BLANK_ID, UNK_ID, BOS_ID, EOS_ID = range(len(RESERVED))

#: Tokens seen fewer times than this in training are encoded as ``<unk>``.
MIN_COUNT = 3

_NON_ALPHA = re.compile(r"[^a-z ]+")


def normalize_text(raw: str) -> list[str]:
    """Lowercase, drop non-alphabetic characters, and split on whitespace.

    Punctuation (including the sentence-final period) disappears here; the
    stop symbol is re-introduced as ``<eos>`` by :func:`encode_fixed`.

    Args:
        raw: Free text, e.g. ``"A man, RUNS."``.

    Returns:
        Tokens, e.g. ``["a", "man", "runs"]``; possibly empty.
    """
    lowered = raw.lower().replace("\t", " ").replace("\n", " ")
    return _NON_ALPHA.sub("", lowered).split()


@dataclass
class Vocabulary:
    """Bijective token ↔ id map with reserved tokens at ids 0..4.

    Attributes:
        id_to_token: Tokens in id order.
        counts: Training-split occurrence counts (0 for reserved tokens).
        token_to_id: Inverse of ``id_to_token``.
    """

    id_to_token: list[str]
    counts: dict[str, int] = field(default_factory=dict)
    token_to_id: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        if tuple(self.id_to_token[: len(RESERVED)]) != RESERVED:
            msg = f"Vocabulary must start with reserved tokens {RESERVED}, got {self.id_to_token[: len(RESERVED)]}"
            raise CorpusParseError(msg)
        self.token_to_id = {tok: i for i, tok in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            msg = "Vocabulary contains duplicate tokens"
            raise CorpusParseError(msg)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: object) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        """Return the id of ``token``, or the ``<unk>`` id when it is out of vocabulary."""
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, index: int) -> str:
        if not 0 <= index < len(self.id_to_token):
            msg = f"Token id {index} out of range for vocabulary of size {len(self)}"
            raise IndexLookupError(msg)
        return self.id_to_token[index]

    def decode(self, ids: Iterable[int], *, stop_at_eos: bool = True) -> list[str]:
        """Map ids back to surface tokens, dropping ``<pad>``/``<blank>``/``<bos>``.

        Args:
            ids: Token ids, e.g. a decoder output or an encoded reference.
            stop_at_eos: Stop at (and drop) the first ``<eos>``.

        Returns:
            Content tokens; ``<unk>`` is kept so metrics see the miss.
        """
        out: list[str] = []
        for index in ids:
            index = int(index)
            if index == EOS_ID and stop_at_eos:
                break
            if index in (PAD_ID, BLANK_ID, BOS_ID, EOS_ID):
                continue
            out.append(self.token_of(index))
        return out

    def save(self, path: str | Path) -> None:
        """Write ``token<TAB>count`` lines, reserved tokens first."""
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{tok}\t{self.counts.get(tok, 0)}" for tok in self.id_to_token]
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        """Read a vocabulary file written by :meth:`save`.

        Raises:
            CorpusParseError: If a line is not ``token<TAB>count`` or the
                reserved tokens are missing or out of order.
        """
        tokens: list[str] = []
        counts: dict[str, int] = {}
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                msg = f"Line {lineno} of '{path}' is not 'token<TAB>count'"
                raise CorpusParseError(msg)
            try:
                counts[parts[0]] = int(parts[1])
            except ValueError as exc:
                msg = f"Line {lineno} of '{path}' has a non-integer count {parts[1]!r}"
                raise CorpusParseError(msg) from exc
            tokens.append(parts[0])
        return cls(tokens, counts)


def build_vocab(sentences: Iterable[str | Sequence[str]], *, min_count: int = MIN_COUNT) -> Vocabulary:
    """Build a vocabulary from normalized training sentences.

    Ids after the reserved block are assigned by descending count, then
    alphabetically, so the same corpus always yields the same ids.

    Args:
        sentences: Token lists, or whitespace-joined normalized strings.
        min_count: Tokens occurring fewer times are left out (→ ``<unk>``).

    Returns:
        The vocabulary; only the reserved tokens for an empty corpus.
    """
    counter: Counter[str] = Counter()
    for sentence in sentences:
        tokens = sentence.split() if isinstance(sentence, str) else sentence
        counter.update(tok for tok in tokens if tok not in RESERVED)
    kept = sorted((tok for tok, n in counter.items() if n >= min_count), key=lambda tok: (-counter[tok], tok))
    counts = {tok: 0 for tok in RESERVED}
    counts.update({tok: counter[tok] for tok in kept})
    return Vocabulary([*RESERVED, *kept], counts)


def encode_fixed(tokens: Sequence[str], vocab: Vocabulary, max_words: int) -> list[int]:
    """Encode tokens to exactly ``max_words`` (L_k) ids.

    Out-of-vocabulary tokens become ``<unk>`` and ``<eos>`` is appended.  A
    sentence that does not fit keeps its first ``max_words - 1`` ids and ends
    in ``<eos>``; a short one is padded with ``<blank>``.

    Args:
        tokens: Normalized tokens.
        vocab: Vocabulary to look tokens up in.
        max_words: Output length L_k (≥ 1).

    Returns:
        A list of ``max_words`` token ids.
    """
    if max_words < 1:
        msg = f"max_words (L_k) must be at least 1, got {max_words}"
        raise ConfigurationError(msg)
    ids = [vocab.id_of(tok) for tok in tokens] + [EOS_ID]
    if len(ids) > max_words:
        ids = ids[:max_words]
        ids[-1] = EOS_ID
    return ids + [BLANK_ID] * (max_words - len(ids))


def supervised_mask(ids: Sequence[int], *, mask_padding: bool = True) -> list[float]:
    """Loss weights for an encoded reference: 1 up to and including ``<eos>``, then 0.

    With ``mask_padding=False`` every position is supervised, which trains the
    decoder to emit ``<blank>`` after ``<eos>``.
    """
    if not mask_padding:
        return [1.0] * len(ids)
    weights: list[float] = []
    seen_eos = False
    for index in ids:
        weights.append(0.0 if seen_eos else 1.0)
        if index == EOS_ID:
            seen_eos = True
    return weights
