"""Ablation and hyper-parameter sweeps over seeds, summarised with pandas.

:func:`ablate` trains every architecture row on the same corpus and seeds
and adds the two partition baselines, which need no training.
:func:`sweep` varies one knob of a single architecture. Both return a long
table (one row per run and seed) that :func:`summarize` reduces to
mean and standard deviation per row, and :func:`write_table` writes as TSV.

The published Meteor column is carried for context only. METEOR is not
computed here and the data differ, so those numbers are not comparable
with anything in the other columns.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd

from gpas_summarizer.adapters import DictAdapter
from gpas_summarizer.config import GraphKind, RunConfig, Variant
from gpas_summarizer.corpus import CorpusSplit, load_corpus
from gpas_summarizer.decoding import decode_split
from gpas_summarizer.exceptions import ConfigurationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.metrics import REPORT_KEYS, Report, pm_ave_report, pm_best_report, report_from_decodes
from gpas_summarizer.text import Vocabulary
from gpas_summarizer.training import train

_log = get_logger(__name__)

PUBLISHED_METEOR_COLUMN = "published_meteor (not comparable)"


@dataclass(frozen=True)
class AblationRow:
    """One line of the ablation table.

    ``overrides`` is ``None`` for the partition baselines, which are scored
    straight from the segment sentences.
    """

    name: str
    overrides: dict[str, Any] | None
    published_meteor: float


ABLATION_ROWS: tuple[AblationRow, ...] = (
    AblationRow("PM-ave", None, 8.46),
    AblationRow("PM-best", None, 9.07),
    AblationRow("PaS-basic-w/o-TVJ", {"variant": Variant.NONE, "graph": GraphKind.BASIC, "use_tvj": False}, 9.00),
    AblationRow("PaS-basic", {"variant": Variant.NONE, "graph": GraphKind.BASIC, "use_tvj": True}, 9.30),
    AblationRow("aGCN-out-LSTM-basic", {"variant": Variant.AGCN_OUT, "graph": GraphKind.BASIC, "use_tvj": True}, 9.46),
    AblationRow(
        "aGCN-out-LSTM-expanded", {"variant": Variant.AGCN_OUT, "graph": GraphKind.EXPANDED, "use_tvj": True}, 9.62
    ),
    AblationRow("aGCN-in-LSTM-basic", {"variant": Variant.AGCN_IN, "graph": GraphKind.BASIC, "use_tvj": True}, 9.48),
    AblationRow(
        "aGCN-in-LSTM-expanded", {"variant": Variant.AGCN_IN, "graph": GraphKind.EXPANDED, "use_tvj": True}, 9.72
    ),
)

SWEEP_KNOBS: tuple[str, ...] = ("lambda_d", "max_words", "rounds")

#: Published Meteor for each discriminative-loss weight.
PUBLISHED_LAMBDA_D_METEOR: dict[float, float] = {0.0: 9.45, 0.01: 9.57, 0.1: 9.62, 1.0: 9.55}


def run_variant(
    run: RunConfig,
    train_split: CorpusSplit,
    val_split: CorpusSplit,
    vocab: Vocabulary,
    *,
    out_dir: str | Path | None = None,
) -> Report:
    """Train one configuration and score greedy decodes of ``val_split``."""
    result = train(run, train_split, val_split, out_dir)
    rows = decode_split(val_split, result.params, vocab, batch_size=run.train.batch_size)
    return report_from_decodes(rows)


def reencode(split: CorpusSplit, vocab: Vocabulary, run: RunConfig) -> CorpusSplit:
    """Encode ``split`` again under ``run.model`` (e.g. a different ``max_words``)."""
    return load_corpus(DictAdapter([r.to_raw() for r in split]), vocab, run.model, role=split.role)


def _row(name: str, seed: int, report: Report, **extra: Any) -> dict[str, Any]:
    return {"name": name, "seed": seed, **extra, **{k: report.get(k) for k in REPORT_KEYS}}


def ablate(
    run: RunConfig,
    train_split: CorpusSplit,
    val_split: CorpusSplit,
    vocab: Vocabulary,
    seeds: Sequence[int],
    *,
    rows: Iterable[AblationRow] = ABLATION_ROWS,
    out_dir: str | Path | None = None,
) -> pd.DataFrame:
    """Long ablation table: one line per (row, seed).

    Args:
        run: Base configuration; each row overrides the architecture switches.
        train_split: Training records.
        val_split: Records every row is scored on.
        vocab: Vocabulary the corpus was encoded with.
        seeds: Seeds to repeat every trained row with.
        rows: Rows to run (default: all of :data:`ABLATION_ROWS`).
        out_dir: If given, each trained run keeps its checkpoints under
            ``<out_dir>/<row>/seed-<n>``.
    """
    records: list[dict[str, Any]] = []
    pm_reports = {"PM-ave": pm_ave_report(list(val_split)), "PM-best": pm_best_report(list(val_split))}
    for row in rows:
        for seed in seeds:
            if row.overrides is None:
                report = pm_reports[row.name]
            else:
                variant_run = run.replace(seed=seed, **row.overrides)
                target = _run_dir(out_dir, row.name, seed)
                report = run_variant(variant_run, train_split, val_split, vocab, out_dir=target)
            records.append(_row(row.name, seed, report, published_meteor=row.published_meteor))
            _log.info("ablate.row_done", name=row.name, seed=seed, B4=report.get("B4"))
    return _frame(records)


def sweep(
    run: RunConfig,
    train_split: CorpusSplit,
    val_split: CorpusSplit,
    vocab: Vocabulary,
    knob: str,
    values: Sequence[float | int],
    seeds: Sequence[int],
    *,
    out_dir: str | Path | None = None,
) -> pd.DataFrame:
    """Long sweep table: one line per (value, seed) of ``knob``.

    ``max_words`` re-encodes both splits at the new sentence length, so the
    splits must still carry their raw sentences (they always do after
    :func:`~gpas_summarizer.corpus.load_corpus`).

    Raises:
        ConfigurationError: Unknown knob, or no values.
    """
    if knob not in SWEEP_KNOBS:
        msg = f"cannot sweep {knob!r}; choose one of {list(SWEEP_KNOBS)}"
        raise ConfigurationError(msg)
    if not values:
        msg = "sweep needs at least one value"
        raise ConfigurationError(msg)
    records: list[dict[str, Any]] = []
    for value in values:
        typed = float(value) if knob == "lambda_d" else int(value)
        base = run.replace(**{knob: typed})
        tr, va = train_split, val_split
        if knob == "max_words":
            tr, va = reencode(train_split, vocab, base), reencode(val_split, vocab, base)
        published = PUBLISHED_LAMBDA_D_METEOR.get(float(typed)) if knob == "lambda_d" else None
        for seed in seeds:
            seeded = base.replace(seed=seed)
            report = run_variant(seeded, tr, va, vocab, out_dir=_run_dir(out_dir, f"{knob}-{typed}", seed))
            records.append(_row(f"{knob}={typed}", seed, report, **{knob: typed, "published_meteor": published}))
            _log.info("sweep.point_done", knob=knob, value=typed, seed=seed, B4=report.get("B4"))
    return _frame(records)


def _run_dir(out_dir: str | Path | None, name: str, seed: int) -> Path | None:
    if out_dir is None:
        return None
    safe = name.replace("/", "-").replace("=", "-")
    return Path(out_dir) / safe / f"seed-{seed}"


def summarize(long: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample standard deviation of every metric per ``name``.

    Row order follows first appearance; a single seed reports sd 0.
    """
    metrics = [k for k in REPORT_KEYS if k in long.columns]
    grouped = long.groupby("name", sort=False)
    means = grouped[metrics].mean()
    sds = grouped[metrics].std(ddof=1).fillna(0.0)
    out = pd.DataFrame(index=means.index)
    out["seeds"] = grouped["seed"].count()
    for key in metrics:
        out[f"{key}_mean"] = means[key]
        out[f"{key}_sd"] = sds[key]
    if "published_meteor" in long.columns:
        out[PUBLISHED_METEOR_COLUMN] = grouped["published_meteor"].first()
    return out.reset_index()


def format_table(summary: pd.DataFrame, *, digits: int = 2) -> pd.DataFrame:
    """One ``mean±sd`` text column per metric, ready for a TSV."""
    table = pd.DataFrame({"name": summary["name"], "seeds": summary["seeds"]})
    for key in REPORT_KEYS:
        mean, sd = f"{key}_mean", f"{key}_sd"
        if mean not in summary.columns:
            continue
        table[key] = [
            "n/a" if pd.isna(m) else f"{m:.{digits}f}±{s:.{digits}f}"
            for m, s in zip(summary[mean], summary[sd], strict=True)
        ]
    if PUBLISHED_METEOR_COLUMN in summary.columns:
        table[PUBLISHED_METEOR_COLUMN] = [
            "" if pd.isna(v) else f"{v:.2f}" for v in summary[PUBLISHED_METEOR_COLUMN]
        ]
    return table


def write_table(long: pd.DataFrame, path: str | Path) -> pd.DataFrame:
    """Summarise a long table and write it as TSV; returns the formatted table."""
    table = format_table(summarize(long))
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(target, sep="\t", index=False)
    _log.info("experiments.table_written", path=str(target), rows=len(table))
    return table


def _frame(records: list[dict[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame.from_records(records)
    return frame.astype({key: float for key in REPORT_KEYS if key in frame.columns})
