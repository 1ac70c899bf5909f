"""Tests for the ablation and sweep drivers and their pandas tables."""

from __future__ import annotations

import math
from pathlib import Path

import pandas as pd
import pytest

from gpas_summarizer.config import RunConfig
from gpas_summarizer.corpus import CorpusSplit
from gpas_summarizer.exceptions import ConfigurationError
from gpas_summarizer.experiments import (
    ABLATION_ROWS,
    PUBLISHED_METEOR_COLUMN,
    ablate,
    format_table,
    reencode,
    summarize,
    sweep,
    write_table,
)
from gpas_summarizer.metrics import REPORT_KEYS
from gpas_summarizer.text import Vocabulary

Splits = tuple[CorpusSplit, CorpusSplit]


def _long(rows: list[tuple[str, int, float]]) -> pd.DataFrame:
    records = []
    for name, seed, b4 in rows:
        record = {"name": name, "seed": seed, **{k: 10.0 for k in REPORT_KEYS}, "published_meteor": 9.5}
        record["B4"] = b4
        record["token_acc"] = math.nan
        records.append(record)
    return pd.DataFrame.from_records(records)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


class TestSummarize:
    def test_mean_and_sample_sd(self) -> None:
        summary = summarize(_long([("a", 0, 2.0), ("a", 1, 4.0)]))
        assert summary.loc[0, "B4_mean"] == pytest.approx(3.0)
        assert summary.loc[0, "B4_sd"] == pytest.approx(math.sqrt(2.0))
        assert summary.loc[0, "seeds"] == 2

    def test_single_seed_has_zero_sd(self) -> None:
        summary = summarize(_long([("a", 0, 2.0)]))
        assert summary.loc[0, "B4_sd"] == 0.0

    def test_order_of_first_appearance(self) -> None:
        summary = summarize(_long([("zeta", 0, 1.0), ("alpha", 0, 1.0), ("zeta", 1, 1.0)]))
        assert list(summary["name"]) == ["zeta", "alpha"]

    def test_published_column_carried(self) -> None:
        assert summarize(_long([("a", 0, 1.0)]))[PUBLISHED_METEOR_COLUMN].tolist() == [9.5]


class TestFormatTable:
    def test_mean_sd_text(self) -> None:
        table = format_table(summarize(_long([("a", 0, 2.0), ("a", 1, 4.0)])))
        assert table.loc[0, "B4"] == "3.00±1.41"
        assert table.loc[0, "B1"] == "10.00±0.00"

    def test_missing_metric_is_na(self) -> None:
        table = format_table(summarize(_long([("a", 0, 2.0)])))
        assert table.loc[0, "token_acc"] == "n/a"
        assert table.loc[0, PUBLISHED_METEOR_COLUMN] == "9.50"

    def test_write_table_tsv(self, tmp_path: Path) -> None:
        path = tmp_path / "out" / "ablation.tsv"
        table = write_table(_long([("a", 0, 2.0), ("b", 0, 3.0)]), path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].split("\t")[:3] == ["name", "seeds", "B1"]
        assert len(lines) == 1 + len(table) == 3


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


class TestReencode:
    def test_changes_sentence_length(self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        train = micro_splits[0]
        longer = reencode(train, micro_vocab, micro_run.replace(max_words=5))
        assert longer.ids == train.ids
        assert longer.role == train.role
        assert all(record.max_words == 5 for record in longer)
        assert [r.reference_tokens for r in longer] == [r.reference_tokens for r in train]


class TestSweep:
    def test_unknown_knob(self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        with pytest.raises(ConfigurationError, match="cannot sweep"):
            sweep(micro_run, *micro_splits, micro_vocab, "hidden", [4], [0])

    def test_no_values(self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        with pytest.raises(ConfigurationError, match="at least one value"):
            sweep(micro_run, *micro_splits, micro_vocab, "rounds", [], [0])

    def test_lambda_d_rows(self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary) -> None:
        run = micro_run.replace(epochs=1)
        long = sweep(run, *micro_splits, micro_vocab, "lambda_d", [0.0, 0.1], [0])
        assert list(long["name"]) == ["lambda_d=0.0", "lambda_d=0.1"]
        assert list(long["published_meteor"]) == [9.45, 9.62]

    def test_max_words_reencodes(
        self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary, tmp_path: Path
    ) -> None:
        run = micro_run.replace(epochs=1)
        long = sweep(run, *micro_splits, micro_vocab, "max_words", [4], [0], out_dir=tmp_path)
        assert list(long["max_words"]) == [4]
        assert (tmp_path / "max_words-4" / "seed-0" / "model.ckpt").is_file()


class TestAblate:
    def test_every_row_once_per_seed(
        self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary
    ) -> None:
        long = ablate(micro_run.replace(epochs=1), *micro_splits, micro_vocab, [0])
        assert list(long["name"]) == [row.name for row in ABLATION_ROWS]
        assert len(long) == 8
        assert set(REPORT_KEYS) <= set(long.columns)
        assert long[["B1", "B4", "RL", "CIDErD"]].notna().all().all()

    def test_baselines_identical_across_seeds(
        self, micro_run: RunConfig, micro_splits: Splits, micro_vocab: Vocabulary
    ) -> None:
        baselines = [row for row in ABLATION_ROWS if row.overrides is None]
        long = ablate(micro_run, *micro_splits, micro_vocab, [0, 1], rows=baselines)
        pm_best = long[long["name"] == "PM-best"]
        assert len(pm_best) == 2
        assert pm_best["B4"].nunique() == 1
        assert summarize(long).loc[1, "B4_sd"] == 0.0
