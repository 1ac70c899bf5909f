"""Command-line interface for gpas-summarizer.

Provides the ``gpas`` CLI with commands for building a vocabulary, generating
a synthetic corpus, training, decoding, scoring, gradient checking, and the
ablation and sweep experiments. Every command writes ``manifest.json`` beside
its outputs.

Requires the ``[cli]`` extra: ``pip install gpas-summarizer[cli]``.
"""

from __future__ import annotations

import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, TypeVar

try:
    import click
except ImportError:
    _msg = "The gpas CLI requires the 'click' package. Install it with: pip install gpas-summarizer[cli]"
    print(_msg, file=sys.stderr)  # noqa: T201
    sys.exit(1)

from gpas_summarizer import __version__
from gpas_summarizer.config import PRESETS, GraphKind, RunConfig, Variant, resolve_run_config
from gpas_summarizer.exceptions import GPaSError
from gpas_summarizer.logging import configure_logging
from gpas_summarizer.manifest import write_manifest
from gpas_summarizer.serializer import dumps

F = TypeVar("F", bound=Callable[..., Any])

VOCAB_FILE = "vocab.tsv"
DECODES_FILE = "decodes.jsonl"
REPORT_FILE = "report.json"

# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _run_options(func: F) -> F:
    """Attach the run-configuration flags shared by training commands."""
    options = [
        click.option(
            "--preset",
            type=click.Choice(sorted(PRESETS)),
            default="desk",
            show_default=True,
            help="Named base configuration.",
        ),
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False),
            default=None,
            help="Flat YAML run-config file applied over the preset.",
        ),
        click.option("--seed", type=int, default=None, help="Root seed of every random stream."),
        click.option(
            "--variant",
            type=click.Choice([v.value for v in Variant]),
            default=None,
            help="Refinement coupling.",
        ),
        click.option(
            "--graph",
            type=click.Choice([g.value for g in GraphKind]),
            default=None,
            help="Graph topology.",
        ),
        click.option("--rounds", type=int, default=None, help="Refinement rounds."),
        click.option("--lambda-d", "lambda_d", type=float, default=None, help="Discriminative-loss weight."),
        click.option("--epochs", type=int, default=None, help="Training epochs."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve(
    preset: str,
    config_path: str | None,
    *,
    vocab_size: int | None = None,
    **overrides: Any,
) -> RunConfig:
    """Preset → config file → explicit flags, with the vocabulary size bound last."""
    try:
        run = resolve_run_config(preset=preset, path=config_path, overrides=overrides)
        if vocab_size is not None:
            run = run.replace(vocab_size=vocab_size)
    except GPaSError as exc:
        raise _fail(exc) from exc
    return run


def _load_vocab(vocab_path: str | None, corpus: str) -> Any:
    """Load ``--vocab``, else ``vocab.tsv`` next to the corpus, else build one from the corpus."""
    from gpas_summarizer.corpus import iter_sentences
    from gpas_summarizer.text import Vocabulary, build_vocab

    candidate = Path(vocab_path) if vocab_path else Path(corpus).with_name(VOCAB_FILE)
    if candidate.exists():
        return Vocabulary.load(candidate)
    if vocab_path:
        raise click.ClickException(f"Vocabulary file not found: {candidate}")
    return build_vocab(iter_sentences(corpus))


def _parse_list(text: str, kind: type) -> list[Any]:
    try:
        return [kind(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected a comma-separated list of {kind.__name__}, got {text!r}") from exc


def _fail(exc: GPaSError) -> click.ClickException:
    return click.ClickException(f"{type(exc).__name__}: {exc}")


# ---------------------------------------------------------------------------
# Main CLI group
# ---------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__)
@click.option("-v", "--verbose", count=True, help="Log progress (-v) or debug detail (-vv) to stderr.")
def cli(verbose: int) -> None:
    """gpas: graph-refined sentence summarization for dense video captioning."""
    configure_logging(("WARNING", "INFO", "DEBUG")[min(verbose, 2)])


# ---------------------------------------------------------------------------
# prep-vocab
# ---------------------------------------------------------------------------


@cli.command("prep-vocab")
@click.option(
    "--corpus",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Training corpus (JSON lines).",
)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--min-count", type=int, default=3, show_default=True, help="Words rarer than this map to <unk>.")
def prep_vocab(corpus: str, out_dir: str, min_count: int) -> None:
    """Build a vocabulary from the segment and reference sentences of a corpus.

    Examples:

        gpas prep-vocab --corpus data/train.jsonl --out data/
    """
    from gpas_summarizer.corpus import iter_sentences
    from gpas_summarizer.text import build_vocab

    try:
        vocab = build_vocab(iter_sentences(corpus), min_count=min_count)
    except GPaSError as exc:
        raise _fail(exc) from exc
    path = Path(out_dir) / VOCAB_FILE
    vocab.save(path)
    write_manifest(
        out_dir, "prep-vocab", version=__version__, config={"min_count": min_count}, inputs={"corpus": corpus}
    )
    click.echo(f"Wrote {len(vocab)} tokens to {path}")


# ---------------------------------------------------------------------------
# gen-synth
# ---------------------------------------------------------------------------


@cli.command("gen-synth")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True, help="Root seed.")
@click.option("--vocab-size", type=int, default=40, show_default=True, help="Vocabulary size incl. reserved tokens.")
@click.option("--n-concepts", type=int, default=24, show_default=True, help="Concept inventory size.")
@click.option("--segments", type=int, default=5, show_default=True, help="Segments per record (L_m).")
@click.option("--max-words", type=int, default=8, show_default=True, help="Words per sentence (L_k).")
@click.option("--visual-dim", type=int, default=16, show_default=True, help="Visual feature size (D_v).")
@click.option("--noise", "noise_rate", type=float, default=0.3, show_default=True, help="Token corruption rate.")
@click.option("--n-train", type=int, default=2000, show_default=True, help="Training records.")
@click.option("--n-val", type=int, default=200, show_default=True, help="Validation records.")
def gen_synth(
    out_dir: str,
    seed: int,
    vocab_size: int,
    n_concepts: int,
    segments: int,
    max_words: int,
    visual_dim: int,
    noise_rate: float,
    n_train: int,
    n_val: int,
) -> None:
    """Generate a synthetic corpus (train.jsonl, val.jsonl, vocab.tsv).

    Examples:

        gpas gen-synth --out data/ --vocab-size 60 --n-concepts 30 --noise 0.2
    """
    from gpas_summarizer.synth import SynthSpec, write_synth_corpus

    try:
        spec = SynthSpec(
            vocab_size=vocab_size,
            segments=segments,
            max_words=max_words,
            visual_dim=visual_dim,
            n_concepts=n_concepts,
            noise_rate=noise_rate,
            seed=seed,
        )
        paths = write_synth_corpus(spec, n_train, n_val, out_dir)
    except GPaSError as exc:
        raise _fail(exc) from exc
    spec.vocabulary().save(Path(out_dir) / VOCAB_FILE)
    config = {
        "vocab_size": vocab_size,
        "n_concepts": n_concepts,
        "segments": segments,
        "max_words": max_words,
        "visual_dim": visual_dim,
        "noise_rate": noise_rate,
        "n_train": n_train,
        "n_val": n_val,
    }
    write_manifest(out_dir, "gen-synth", version=__version__, seed=seed, config=config)
    click.echo(f"Wrote {n_train} train / {n_val} val records to {paths['train'].parent}")


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


@cli.command()
@click.option(
    "--corpus",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Training corpus (JSON lines).",
)
@click.option(
    "--val",
    "val_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Validation corpus (default: the training corpus).",
)
@click.option("--vocab", "vocab_path", type=click.Path(dir_okay=False), default=None, help="Vocabulary file.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Run directory.")
@click.option("--resume", is_flag=True, default=False, help="Continue an interrupted run in --out.")
@click.option("--progress/--no-progress", default=False, help="Show a progress bar (needs tqdm).")
@_run_options
def train(
    corpus: str,
    val_path: str | None,
    vocab_path: str | None,
    out_dir: str,
    resume: bool,
    progress: bool,
    preset: str,
    config_path: str | None,
    **overrides: Any,
) -> None:
    """Train a summarizer and keep the best validation checkpoint.

    Writes model.ckpt (best), last.ckpt, trainer_state.ckpt and metrics.jsonl.

    Examples:

        gpas train --corpus data/train.jsonl --val data/val.jsonl --out runs/in-exp \\
            --variant agcn_in --graph expanded
    """
    from gpas_summarizer.corpus import load_corpus
    from gpas_summarizer.training import train as run_training

    vocab = _load_vocab(vocab_path, corpus)
    run = _resolve(preset, config_path, vocab_size=len(vocab), **overrides)
    try:
        train_split = load_corpus(corpus, vocab, run.model, role="train")
        val_split = load_corpus(val_path, vocab, run.model, role="validation") if val_path else None
        vocab.save(Path(out_dir) / VOCAB_FILE)
        result = run_training(run, train_split, val_split, out_dir, resume=resume, progress=progress)
    except GPaSError as exc:
        raise _fail(exc) from exc
    inputs: dict[str, str] = {"corpus": corpus}
    if val_path:
        inputs["val"] = val_path
    write_manifest(out_dir, "train", version=__version__, seed=run.train.seed, config=run.to_dict(), inputs=inputs)
    click.echo(
        f"Best epoch {result.best_epoch}: val token accuracy {100.0 * result.best_token_acc:.2f}% "
        f"({result.elapsed_seconds:.1f}s) -> {out_dir}"
    )


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------


@cli.command()
@click.option(
    "--checkpoint",
    required=True,
    type=click.Path(exists=True),
    help="Model checkpoint, or a run directory holding model.ckpt.",
)
@click.option(
    "--corpus",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Corpus to decode (JSON lines).",
)
@click.option("--vocab", "vocab_path", type=click.Path(dir_okay=False), default=None, help="Vocabulary file.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--batch-size", type=int, default=32, show_default=True, help="Records per decoding batch.")
def decode(checkpoint: str, corpus: str, vocab_path: str | None, out_dir: str, batch_size: int) -> None:
    """Greedy-decode every record of a corpus into decodes.jsonl.

    Examples:

        gpas decode --checkpoint runs/in-exp --corpus data/val.jsonl --out runs/in-exp/val
    """
    from gpas_summarizer.corpus import load_corpus
    from gpas_summarizer.decoding import decode_split
    from gpas_summarizer.model import load_checkpoint
    from gpas_summarizer.serializer import write_jsonl
    from gpas_summarizer.training import MODEL_CKPT

    ckpt = Path(checkpoint)
    if ckpt.is_dir():
        ckpt = ckpt / MODEL_CKPT
        if vocab_path is None and (ckpt.parent / VOCAB_FILE).exists():
            vocab_path = str(ckpt.parent / VOCAB_FILE)
    vocab = _load_vocab(vocab_path, corpus)
    try:
        params = load_checkpoint(ckpt)
        split = load_corpus(corpus, vocab, params.config, role="test")
        rows = decode_split(split, params, vocab, batch_size=batch_size)
    except GPaSError as exc:
        raise _fail(exc) from exc
    path = Path(out_dir) / DECODES_FILE
    write_jsonl(rows, path)
    write_manifest(
        out_dir,
        "decode",
        version=__version__,
        config={"batch_size": batch_size, "label": params.config.label()},
        inputs={"checkpoint": str(ckpt), "corpus": corpus},
    )
    click.echo(f"Decoded {len(rows)} records to {path}")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@cli.command("eval")
@click.option(
    "--decodes",
    "decodes_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="decodes.jsonl written by 'gpas decode'.",
)
@click.option(
    "--corpus",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Corpus for --baseline scoring.",
)
@click.option(
    "--baseline",
    type=click.Choice(["pm-ave", "pm-best"]),
    default=None,
    help="Score a partition baseline from --corpus instead of decodes.",
)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@_run_options
def evaluate(
    decodes_path: str | None,
    corpus: str | None,
    baseline: str | None,
    out_dir: str,
    preset: str,
    config_path: str | None,
    **overrides: Any,
) -> None:
    """Score decodes (or a partition baseline) into report.json.

    Examples:

        gpas eval --decodes runs/in-exp/val/decodes.jsonl --out runs/in-exp/val

        gpas eval --corpus data/val.jsonl --baseline pm-best --out runs/pm-best
    """
    from gpas_summarizer.corpus import load_corpus
    from gpas_summarizer.metrics import pm_ave_report, pm_best_report, report_from_decodes, write_report
    from gpas_summarizer.serializer import iter_jsonl

    if (decodes_path is None) == (baseline is None):
        raise click.UsageError("give exactly one of --decodes or --baseline")
    inputs: dict[str, str] = {}
    try:
        if decodes_path is not None:
            report = report_from_decodes(iter_jsonl(decodes_path))
            inputs["decodes"] = decodes_path
        else:
            if corpus is None:
                raise click.UsageError("--baseline needs --corpus")
            vocab = _load_vocab(None, corpus)
            run = _resolve(preset, config_path, vocab_size=len(vocab), **overrides)
            records = list(load_corpus(corpus, vocab, run.model, role="test"))
            report = pm_ave_report(records) if baseline == "pm-ave" else pm_best_report(records)
            inputs["corpus"] = corpus
        path = Path(out_dir) / REPORT_FILE
        write_report(report, path)
    except GPaSError as exc:
        raise _fail(exc) from exc
    write_manifest(out_dir, "eval", version=__version__, config={"baseline": baseline}, inputs=inputs)
    click.echo(dumps(report, pretty=True).decode())


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="micro", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True, help="Root seed.")
@click.option("--variant", type=click.Choice([v.value for v in Variant]), default=None, help="Check one variant.")
@click.option("--graph", type=click.Choice([g.value for g in GraphKind]), default=None, help="Check one graph.")
@click.option("--lambda-d", "lambda_d", type=float, default=None, help="Discriminative-loss weight.")
@click.option("--eps", type=float, default=1e-5, show_default=True, help="Central-difference step.")
@click.option("--tol", type=float, default=1e-4, show_default=True, help="Maximum relative error.")
@click.option("--max-entries", type=int, default=None, help="Check at most this many entries per parameter.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Write gradcheck.json here.")
def gradcheck(
    preset: str,
    config_path: str | None,
    seed: int,
    variant: str | None,
    graph: str | None,
    lambda_d: float | None,
    eps: float,
    tol: float,
    max_entries: int | None,
    out_dir: str | None,
) -> None:
    """Check backprop against finite differences for every architecture.

    Without --variant, all five (variant, graph) combinations are checked.
    Exits with status 1 if any check fails.

    Examples:

        gpas gradcheck --preset micro

        gpas gradcheck --variant agcn_in --graph expanded
    """
    from gpas_summarizer.diagnostics import ARCHITECTURES, model_grad_check
    from gpas_summarizer.serializer import write_json

    if variant is not None:
        archs = [(Variant(variant), GraphKind(graph or GraphKind.BASIC.value))]
    else:
        archs = [a for a in ARCHITECTURES if graph is None or a[1].value == graph]
    results: dict[str, Any] = {}
    failed = False
    for var, gr in archs:
        run = _resolve(preset, config_path, seed=seed, variant=var, graph=gr, lambda_d=lambda_d)
        try:
            report = model_grad_check(run, eps=eps, tol=tol, max_entries=max_entries)
        except GPaSError as exc:
            raise _fail(exc) from exc
        results[run.model.label()] = report.to_dict()
        failed = failed or not report.passed
        status = click.style("PASSED", fg="green") if report.passed else click.style("FAILED", fg="red")
        click.echo(f"{status}  {run.model.label():<20} max relative error {report.max_rel_error:.3e}")
    if out_dir is not None:
        write_json(results, Path(out_dir) / "gradcheck.json")
        write_manifest(out_dir, "gradcheck", version=__version__, seed=seed, config={"preset": preset, "eps": eps})
    if failed:
        sys.exit(1)


# ---------------------------------------------------------------------------
# ablate / sweep
# ---------------------------------------------------------------------------


def _load_splits(run: RunConfig, corpus: str, val_path: str, vocab: Any) -> tuple[Any, Any]:
    from gpas_summarizer.corpus import load_corpus

    return (
        load_corpus(corpus, vocab, run.model, role="train"),
        load_corpus(val_path, vocab, run.model, role="validation"),
    )


def _experiment_command(func: F) -> F:
    options = [
        click.option(
            "--corpus", required=True, type=click.Path(exists=True, dir_okay=False), help="Training corpus."
        ),
        click.option(
            "--val",
            "val_path",
            required=True,
            type=click.Path(exists=True, dir_okay=False),
            help="Validation corpus every row is scored on.",
        ),
        click.option("--vocab", "vocab_path", type=click.Path(dir_okay=False), default=None, help="Vocabulary file."),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory."),
        click.option("--seeds", default="0,1,2,3,4", show_default=True, help="Comma-separated seeds."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@cli.command()
@_experiment_command
@_run_options
def ablate(
    corpus: str,
    val_path: str,
    vocab_path: str | None,
    out_dir: str,
    seeds: str,
    preset: str,
    config_path: str | None,
    **overrides: Any,
) -> None:
    """Train and score every ablation row over several seeds into ablation.tsv.

    Examples:

        gpas ablate --corpus data/train.jsonl --val data/val.jsonl --out runs/ablate --seeds 0,1
    """
    from gpas_summarizer.experiments import ablate as run_ablation

    seed_list = _parse_list(seeds, int)
    vocab = _load_vocab(vocab_path, corpus)
    overrides = {k: v for k, v in overrides.items() if k not in ("variant", "graph", "seed")}
    run = _resolve(preset, config_path, vocab_size=len(vocab), **overrides)
    try:
        train_split, val_split = _load_splits(run, corpus, val_path, vocab)
        long = run_ablation(run, train_split, val_split, vocab, seed_list, out_dir=Path(out_dir) / "runs")
    except GPaSError as exc:
        raise _fail(exc) from exc
    _finish_experiment("ablate", long, out_dir, run, seed_list, corpus, val_path)


@cli.command()
@_experiment_command
@click.option(
    "--knob",
    required=True,
    type=click.Choice(["lambda_d", "max_words", "rounds"]),
    help="Setting to vary.",
)
@click.option("--values", "values_text", required=True, help="Comma-separated values of the knob.")
@_run_options
def sweep(
    corpus: str,
    val_path: str,
    vocab_path: str | None,
    out_dir: str,
    seeds: str,
    knob: str,
    values_text: str,
    preset: str,
    config_path: str | None,
    **overrides: Any,
) -> None:
    """Train and score one architecture per value of a knob into sweep.tsv.

    Examples:

        gpas sweep --corpus data/train.jsonl --val data/val.jsonl --out runs/sweep \\
            --variant agcn_in --graph expanded --knob lambda_d --values 0,0.01,0.1,1
    """
    from gpas_summarizer.experiments import sweep as run_sweep

    seed_list = _parse_list(seeds, int)
    values = _parse_list(values_text, float if knob == "lambda_d" else int)
    vocab = _load_vocab(vocab_path, corpus)
    overrides.pop("seed", None)
    run = _resolve(preset, config_path, vocab_size=len(vocab), **overrides)
    try:
        train_split, val_split = _load_splits(run, corpus, val_path, vocab)
        long = run_sweep(run, train_split, val_split, vocab, knob, values, seed_list, out_dir=Path(out_dir) / "runs")
    except GPaSError as exc:
        raise _fail(exc) from exc
    _finish_experiment("sweep", long, out_dir, run, seed_list, corpus, val_path)


def _finish_experiment(
    name: str, long: Any, out_dir: str, run: RunConfig, seeds: Sequence[int], corpus: str, val_path: str
) -> None:
    from gpas_summarizer.experiments import write_table

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    long.to_csv(out / f"{name}_runs.tsv", sep="\t", index=False)
    table = write_table(long, out / f"{name}.tsv")
    config = {**run.to_dict(), "seeds": list(seeds)}
    write_manifest(out, name, version=__version__, config=config, inputs={"corpus": corpus, "val": val_path})
    click.echo(table.to_string(index=False))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main() -> None:
    """Entry point for the ``gpas`` console script."""
    cli()


if __name__ == "__main__":
    main()
