"""Tests for decoding a whole split into scored rows."""

from __future__ import annotations

from collections.abc import Callable

import pytest

from gpas_summarizer.corpus import CorpusSplit, collate
from gpas_summarizer.decoding import decode_split, iter_decodes
from gpas_summarizer.exceptions import ConfigurationError
from gpas_summarizer.model import ModelParams, greedy_decode_batch
from gpas_summarizer.text import Vocabulary

MakeParams = Callable[..., ModelParams]
Splits = tuple[CorpusSplit, CorpusSplit]

ROW_KEYS = {"id", "hypothesis", "reference", "confidence", "correct", "supervised"}


class TestDecodeSplit:
    def test_one_row_per_record_in_order(
        self, make_params: MakeParams, micro_splits: Splits, micro_vocab: Vocabulary
    ) -> None:
        val = micro_splits[1]
        rows = decode_split(val, make_params(), micro_vocab, batch_size=3)
        assert [row["id"] for row in rows] == val.ids
        assert all(set(row) == ROW_KEYS for row in rows)

    def test_row_contents(self, make_params: MakeParams, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        val = micro_splits[1]
        params = make_params()
        rows = decode_split(val, params, micro_vocab)
        hyps = greedy_decode_batch(collate(list(val)), params)
        for row, hyp, record in zip(rows, hyps, val, strict=True):
            assert row["hypothesis"] == " ".join(micro_vocab.decode(hyp.ids))
            assert row["reference"] == " ".join(record.reference_tokens)
            assert row["confidence"] == pytest.approx(hyp.confidence)
            assert 0 <= row["correct"] <= row["supervised"] <= params.config.max_words

    def test_batch_size_does_not_change_rows(
        self, make_params: MakeParams, micro_splits: Splits, micro_vocab: Vocabulary
    ) -> None:
        params = make_params(seed=4)
        whole = decode_split(micro_splits[1], params, micro_vocab, batch_size=4)
        single = decode_split(micro_splits[1], params, micro_vocab, batch_size=1)
        assert [r["hypothesis"] for r in whole] == [r["hypothesis"] for r in single]

    def test_iter_is_lazy(self, make_params: MakeParams, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        rows = iter_decodes(micro_splits[0], make_params(), micro_vocab, batch_size=2)
        assert next(rows)["id"] == micro_splits[0].ids[0]

    def test_incompatible_params(self, make_params: MakeParams, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        with pytest.raises(ConfigurationError, match="expects"):
            decode_split(micro_splits[1], make_params(max_words=4), micro_vocab)
