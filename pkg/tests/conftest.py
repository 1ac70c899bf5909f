"""Shared test fixtures for gpas-summarizer.

Everything here runs at the ``micro`` preset scale (H=8, L_m=2, L_k=3, V=12)
so a full forward/backward pass takes milliseconds.
"""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest

from gpas_summarizer.autodiff import RngStream
from gpas_summarizer.config import RunConfig, get_preset
from gpas_summarizer.corpus import Batch, CorpusSplit, collate, write_corpus
from gpas_summarizer.model import ModelParams, init_params
from gpas_summarizer.synth import SynthSpec, gen_corpus
from gpas_summarizer.text import Vocabulary

MICRO_SPEC = SynthSpec(vocab_size=12, segments=2, max_words=3, visual_dim=5, n_concepts=4, noise_rate=0.2, seed=0)


@pytest.fixture()
def micro_spec() -> SynthSpec:
    return MICRO_SPEC


@pytest.fixture()
def micro_run() -> RunConfig:
    """The micro preset; its vocabulary size already matches :data:`MICRO_SPEC`."""
    return get_preset("micro")


@pytest.fixture()
def micro_vocab() -> Vocabulary:
    return MICRO_SPEC.vocabulary()


@pytest.fixture()
def micro_splits() -> tuple[CorpusSplit, CorpusSplit]:
    return gen_corpus(MICRO_SPEC, 6, 4)


@pytest.fixture()
def micro_batch(micro_splits: tuple[CorpusSplit, CorpusSplit]) -> Batch:
    return collate(list(micro_splits[0])[:3])


@pytest.fixture()
def make_params(micro_run: RunConfig) -> Callable[..., ModelParams]:
    """Build micro-scale parameters for any architecture switch combination."""

    def _make(seed: int = 0, **overrides: Any) -> ModelParams:
        run = micro_run.replace(**overrides)
        return init_params(run.model, RngStream(seed).split("init"))

    return _make


@pytest.fixture()
def micro_corpus_dir(tmp_path: Path, micro_splits: tuple[CorpusSplit, CorpusSplit], micro_vocab: Vocabulary) -> Path:
    """``train.jsonl``, ``val.jsonl`` and ``vocab.tsv`` of the micro corpus."""
    train, val = micro_splits
    write_corpus(train, tmp_path / "train.jsonl")
    write_corpus(val, tmp_path / "val.jsonl")
    micro_vocab.save(tmp_path / "vocab.tsv")
    return tmp_path


def _raw_record(
    record_id: str = "r0",
    sentences: tuple[str, ...] = ("a man runs", "the man is running"),
    reference: str = "a man is running",
    visual_dim: int = 5,
    confidences: tuple[float | None, ...] | None = None,
) -> dict[str, Any]:
    """A record in the external JSON-lines layout."""
    segments: list[dict[str, Any]] = []
    for j, sentence in enumerate(sentences):
        seg: dict[str, Any] = {"sentence": sentence, "visual": [0.1 * (j + 1)] * visual_dim}
        if confidences is not None and confidences[j] is not None:
            seg["confidence"] = confidences[j]
        segments.append(seg)
    return {"id": record_id, "segments": segments, "reference": reference}


@pytest.fixture()
def raw_record() -> Callable[..., dict[str, Any]]:
    """Factory for records in the external JSON-lines layout."""
    return _raw_record
