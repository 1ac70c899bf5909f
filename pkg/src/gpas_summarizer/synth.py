"""Synthetic partition outputs with a known ground-truth summary.

Every record hides a concept triple (subject, verb, object).  The reference is
the template ``"subject verb object"``; each of the ``L_m`` segment sentences
restates it with every token independently replaced by a random distractor
with probability ``noise_rate``, and each segment's visual vector is the
one-hot (role, concept) code of the triple mapped into ``D_v`` dimensions by
:func:`concept_code`, plus Gaussian noise.
Because ``noise_rate < 0.5``, a per-position majority vote over the segments
recovers the reference, which makes the corpus learnable by construction.

Records are generated from the stream ``RngStream(seed).split(role).split(id)``
so generation is deterministic and shardable by record index.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np

from gpas_summarizer.adapters.dict_adapter import DictAdapter
from gpas_summarizer.autodiff.rng import RngStream
from gpas_summarizer.config import ModelConfig
from gpas_summarizer.corpus import CorpusSplit, ProposalRecord, Role, encode_record, load_corpus, write_corpus
from gpas_summarizer.exceptions import ConfigurationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.text import RESERVED, Vocabulary

_log = get_logger(__name__)

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

#: Content tokens per reference sentence.
TEMPLATE_LENGTH = 3

VISUAL_NOISE = 0.1


def pseudo_word(index: int) -> str:
    """Deterministic pronounceable alphabetic token, e.g. ``0 → "ba"``, ``71 → "bebe"``.

    Tokens survive :func:`~gpas_summarizer.text.normalize_text` unchanged.
    """
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    n = len(syllables)
    word = ""
    while True:
        index, rest = divmod(index, n)
        word = syllables[rest] + word
        if index == 0:
            return word


@dataclass(frozen=True)
class SynthSpec:
    """Shape and noise settings of a synthetic corpus.

    Attributes:
        vocab_size: Total vocabulary size including the five reserved tokens.
        segments: Segments per record, L_m.
        max_words: Words per encoded sentence, L_k.
        visual_dim: Visual vector size, D_v.
        n_concepts: Size of the concept inventory (the first content tokens).
        noise_rate: Per-token corruption probability in segment sentences.
        seed: Root seed.
    """

    vocab_size: int = 40
    segments: int = 5
    max_words: int = 8
    visual_dim: int = 16
    n_concepts: int = 24
    noise_rate: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        content = self.vocab_size - len(RESERVED)
        if content < 2:
            msg = f"vocab_size must leave at least 2 content tokens, got {self.vocab_size}"
            raise ConfigurationError(msg)
        if not 1 <= self.n_concepts <= content:
            msg = f"n_concepts must lie in [1, vocab_size - {len(RESERVED)}] = [1, {content}], got {self.n_concepts}"
            raise ConfigurationError(msg)
        if not 0.0 <= self.noise_rate < 0.5:
            msg = f"noise_rate must lie in [0, 0.5), got {self.noise_rate}"
            raise ConfigurationError(msg)
        if min(self.segments, self.max_words, self.visual_dim) < 1:
            msg = "segments, max_words and visual_dim must be positive"
            raise ConfigurationError(msg)

    @property
    def content_tokens(self) -> list[str]:
        return [pseudo_word(i) for i in range(self.vocab_size - len(RESERVED))]

    def vocabulary(self) -> Vocabulary:
        """Every token the generator can emit, reserved tokens first."""
        tokens = self.content_tokens
        return Vocabulary([*RESERVED, *tokens], {tok: 0 for tok in (*RESERVED, *tokens)})

    def model_config(self, base: ModelConfig | None = None) -> ModelConfig:
        """``base`` (or defaults) with the corpus sizes and vocabulary size filled in."""
        return dataclasses.replace(
            base or ModelConfig(),
            segments=self.segments,
            max_words=self.max_words,
            visual_dim=self.visual_dim,
            vocab_size=self.vocab_size,
        )


def _segment_confidence(corrupted: int, kept: int, noise_rate: float) -> float:
    """Mean log-probability of a segment sentence under the corruption model (``<eos>`` scores 0)."""
    total = kept * math.log1p(-noise_rate)
    if corrupted:
        total += corrupted * math.log(noise_rate)
    return total / (corrupted + kept + 1)


@lru_cache(maxsize=16)
def concept_code(spec: SynthSpec) -> np.ndarray:
    """Fixed ``[TEMPLATE_LENGTH·n_concepts × D_v]`` map from one-hot (role, concept) codes to visual space.

    Row ``role·n_concepts + c`` is the visual direction of concept ``c`` in
    template slot ``role``.  When the ``⌈log2 n_concepts⌉`` bits of every
    slot fit side by side in ``D_v``, each slot owns its own block of ±1 bit
    patterns, so a triple is recoverable from its code by a matched filter
    per slot.  Otherwise rows are unit-norm directions drawn from the corpus
    seed.  The array is shared between calls and must not be modified.
    """
    rows = TEMPLATE_LENGTH * spec.n_concepts
    bits = max(1, math.ceil(math.log2(spec.n_concepts)))
    if TEMPLATE_LENGTH * bits <= spec.visual_dim:
        code = np.zeros((rows, spec.visual_dim))
        for role in range(TEMPLATE_LENGTH):
            for c in range(spec.n_concepts):
                pattern = [1.0 if (c >> k) & 1 else -1.0 for k in range(bits)]
                code[role * spec.n_concepts + c, role * bits : (role + 1) * bits] = pattern
    else:
        code = RngStream(spec.seed).split("concept-code").normal(1.0, (rows, spec.visual_dim))
        code /= np.linalg.norm(code, axis=1, keepdims=True)
    code.setflags(write=False)
    return code


def gen_raw_record(spec: SynthSpec, rng: RngStream, record_id: str) -> dict[str, Any]:
    """Generate one record in the external JSON-lines layout."""
    tokens = spec.content_tokens
    concepts = [int(c) for c in rng.split("concepts").integers(0, spec.n_concepts, size=TEMPLATE_LENGTH)]
    reference = [tokens[c] for c in concepts]

    code = concept_code(spec)
    base = code[[role * spec.n_concepts + c for role, c in enumerate(concepts)]].sum(axis=0)

    segments: list[dict[str, Any]] = []
    for j in range(spec.segments):
        seg_rng = rng.split(f"segment-{j}")
        flips = seg_rng.split("flip").bernoulli(spec.noise_rate, (TEMPLATE_LENGTH,))
        picks = seg_rng.split("distractor").integers(0, len(tokens) - 1, size=TEMPLATE_LENGTH)
        words: list[str] = []
        for pos, c in enumerate(concepts):
            if flips[pos]:
                # Any token except the true one.
                d = int(picks[pos])
                words.append(tokens[d + 1 if d >= c else d])
            else:
                words.append(tokens[c])
        visual = base + seg_rng.split("visual").normal(VISUAL_NOISE, (spec.visual_dim,))
        corrupted = int(flips.sum())
        segments.append(
            {
                "sentence": " ".join(words),
                "visual": [round(float(v), 6) for v in visual],
                "confidence": _segment_confidence(corrupted, TEMPLATE_LENGTH - corrupted, spec.noise_rate),
            }
        )
    return {"id": record_id, "segments": segments, "reference": " ".join(reference)}


def gen_record(spec: SynthSpec, rng: RngStream, record_id: str = "synth-000000") -> ProposalRecord:
    """Generate one encoded :class:`ProposalRecord` (vocabulary: :meth:`SynthSpec.vocabulary`)."""
    raw = gen_raw_record(spec, rng, record_id)
    return encode_record(raw, spec.vocabulary(), spec.model_config(), where="synthetic record")


def _raw_split(spec: SynthSpec, role: Role, n: int) -> list[dict[str, Any]]:
    root = RngStream(spec.seed).split(role)
    prefix = "val" if role == "validation" else role
    return [gen_raw_record(spec, root.split(str(i)), f"{prefix}-{i:06d}") for i in range(n)]


def gen_corpus(spec: SynthSpec, n_train: int, n_val: int) -> tuple[CorpusSplit, CorpusSplit]:
    """Generate train and validation splits from disjoint named streams.

    Raises:
        ConfigurationError: If either count is below 1.
    """
    if n_train < 1 or n_val < 1:
        msg = f"n_train and n_val must be at least 1, got {n_train} and {n_val}"
        raise ConfigurationError(msg)
    vocab = spec.vocabulary()
    config = spec.model_config()
    train = load_corpus(DictAdapter(_raw_split(spec, "train", n_train)), vocab, config, role="train")
    val = load_corpus(DictAdapter(_raw_split(spec, "validation", n_val)), vocab, config, role="validation")
    return train, val


def write_synth_corpus(spec: SynthSpec, n_train: int, n_val: int, out_dir: str | Path) -> dict[str, Path]:
    """Write ``train.jsonl`` and ``val.jsonl`` under ``out_dir``.

    Same spec and counts always produce byte-identical files.

    Returns:
        Mapping of split name to written path.
    """
    if n_train < 1 or n_val < 1:
        msg = f"n_train and n_val must be at least 1, got {n_train} and {n_val}"
        raise ConfigurationError(msg)
    out = Path(out_dir)
    paths = {"train": out / "train.jsonl", "val": out / "val.jsonl"}
    write_corpus(_raw_split(spec, "train", n_train), paths["train"])
    write_corpus(_raw_split(spec, "validation", n_val), paths["val"])
    _log.info("synth.written", out_dir=str(out), train=n_train, val=n_val, noise_rate=spec.noise_rate)
    return paths
