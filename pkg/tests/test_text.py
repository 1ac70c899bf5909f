"""Tests for normalization, the vocabulary, and fixed-length encoding."""

from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpas_summarizer.exceptions import ConfigurationError, CorpusParseError, IndexLookupError
from gpas_summarizer.text import (
    BLANK_ID,
    BOS_ID,
    EOS_ID,
    PAD_ID,
    RESERVED,
    UNK,
    UNK_ID,
    Vocabulary,
    build_vocab,
    encode_fixed,
    normalize_text,
    supervised_mask,
)


@pytest.fixture()
def vocab() -> Vocabulary:
    return build_vocab(["a man runs", "a man walks", "a dog runs", "a man runs"], min_count=2)


class TestNormalize:
    def test_lowercases_and_strips_punctuation(self) -> None:
        assert normalize_text("A man, RUNS.") == ["a", "man", "runs"]

    def test_digits_and_symbols_removed(self) -> None:
        assert normalize_text("3 dogs & 2 cats!") == ["dogs", "cats"]

    def test_tabs_and_newlines_split(self) -> None:
        assert normalize_text("a\tman\nruns") == ["a", "man", "runs"]

    def test_empty(self) -> None:
        assert normalize_text("...") == []


class TestVocabulary:
    def test_reserved_ids(self, vocab: Vocabulary) -> None:
        assert vocab.id_to_token[: len(RESERVED)] == list(RESERVED)
        assert (PAD_ID, BLANK_ID, UNK_ID, BOS_ID, EOS_ID) == (0, 1, 2, 3, 4)

    def test_order_by_count_then_alpha(self, vocab: Vocabulary) -> None:
        # a: 4, man: 3, runs: 3; walks and dog fall under min_count.
        assert vocab.id_to_token[len(RESERVED) :] == ["a", "man", "runs"]

    def test_min_count_default_is_three(self) -> None:
        v = build_vocab(["x x x y y"])
        assert "x" in v
        assert "y" not in v

    def test_oov_maps_to_unk(self, vocab: Vocabulary) -> None:
        assert vocab.id_of("walks") == UNK_ID

    def test_empty_corpus(self) -> None:
        assert len(build_vocab([])) == len(RESERVED)

    def test_decode_stops_at_eos_and_drops_padding(self, vocab: Vocabulary) -> None:
        ids = [vocab.id_of("a"), UNK_ID, EOS_ID, vocab.id_of("man"), BLANK_ID]
        assert vocab.decode(ids) == ["a", UNK]
        assert vocab.decode([BOS_ID, PAD_ID, vocab.id_of("man")]) == ["man"]

    def test_token_of_out_of_range(self, vocab: Vocabulary) -> None:
        with pytest.raises(IndexLookupError):
            vocab.token_of(len(vocab))

    def test_save_load_round_trip(self, vocab: Vocabulary, tmp_path: Path) -> None:
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.id_to_token == vocab.id_to_token
        assert loaded.counts == vocab.counts

    def test_load_rejects_missing_reserved(self, tmp_path: Path) -> None:
        path = tmp_path / "vocab.tsv"
        path.write_text("a\t3\nman\t2\n", encoding="utf-8")
        with pytest.raises(CorpusParseError, match="reserved"):
            Vocabulary.load(path)

    def test_load_rejects_bad_line(self, tmp_path: Path) -> None:
        path = tmp_path / "vocab.tsv"
        path.write_text("<pad>\n", encoding="utf-8")
        with pytest.raises(CorpusParseError, match="Line 1"):
            Vocabulary.load(path)

    def test_duplicates_rejected(self) -> None:
        with pytest.raises(CorpusParseError, match="duplicate"):
            Vocabulary([*RESERVED, "a", "a"])


class TestEncodeFixed:
    def test_short_sentence_padded(self, vocab: Vocabulary) -> None:
        assert encode_fixed(["a", "man"], vocab, 5) == [5, 6, EOS_ID, BLANK_ID, BLANK_ID]

    def test_long_sentence_truncated_to_eos(self, vocab: Vocabulary) -> None:
        assert encode_fixed(["a", "man", "runs", "a"], vocab, 3) == [5, 6, EOS_ID]

    def test_empty_sentence(self, vocab: Vocabulary) -> None:
        assert encode_fixed([], vocab, 3) == [EOS_ID, BLANK_ID, BLANK_ID]

    def test_rejects_zero_length(self, vocab: Vocabulary) -> None:
        with pytest.raises(ConfigurationError):
            encode_fixed(["a"], vocab, 0)

    @given(
        tokens=st.lists(st.sampled_from(["a", "man", "runs", "zebra"]), max_size=12),
        max_words=st.integers(1, 10),
    )
    @settings(max_examples=100)
    def test_always_exact_length_with_one_eos(self, tokens: list[str], max_words: int) -> None:
        v = build_vocab(["a man runs"], min_count=1)
        ids = encode_fixed(tokens, v, max_words)
        assert len(ids) == max_words
        assert ids.count(EOS_ID) == 1
        tail = ids[ids.index(EOS_ID) + 1 :]
        assert all(i == BLANK_ID for i in tail)


class TestSupervisedMask:
    def test_masks_after_eos(self) -> None:
        assert supervised_mask([5, EOS_ID, BLANK_ID]) == [1.0, 1.0, 0.0]

    def test_unmasked(self) -> None:
        assert supervised_mask([5, EOS_ID, BLANK_ID], mask_padding=False) == [1.0, 1.0, 1.0]
