"""Epoch loop, validation, checkpointing, and resumable training runs.

A run directory holds::

    model.ckpt           best validation token accuracy (ties → lower validation loss)
    last.ckpt            parameters after the most recent epoch
    trainer_state.ckpt   Adam moments, step, next epoch, best-so-far
    metrics.jsonl        one line per epoch

Shuffling and dropout draw from streams named by ``(seed, epoch, batch)``,
so a run resumed from ``last.ckpt`` + ``trainer_state.ckpt`` reproduces the
uninterrupted run bit for bit.
"""

from __future__ import annotations

import time
from collections.abc import Callable, Iterator
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from gpas_summarizer.autodiff import RngStream, backward, no_grad, trace
from gpas_summarizer.config import ModelConfig, RunConfig
from gpas_summarizer.corpus import Batch, CorpusSplit, collate
from gpas_summarizer.exceptions import CheckpointError, ConfigurationError
from gpas_summarizer.logging import get_logger
from gpas_summarizer.model.checkpoint import load_checkpoint, read_blocks, save_checkpoint, write_blocks
from gpas_summarizer.model.network import forward_teacher_forced
from gpas_summarizer.model.params import ModelParams, init_params
from gpas_summarizer.serializer import append_jsonl, iter_jsonl, write_jsonl
from gpas_summarizer.training.losses import total_loss, token_accuracy
from gpas_summarizer.training.optim import AdamState, adam_step, clip_by_global_norm, gradients, lr_at

_log = get_logger(__name__)

MODEL_CKPT = "model.ckpt"
LAST_CKPT = "last.ckpt"
STATE_CKPT = "trainer_state.ckpt"
METRICS_LOG = "metrics.jsonl"

# Users may supply a progress callback matching this signature:
#   def on_epoch(epochs_done: int, total_epochs: int | None) -> None: ...
ProgressCallback = Callable[[int, int | None], None]


def _try_tqdm(total: int | None = None, desc: str = "Training") -> Any:
    """Return a tqdm progress bar if available, else ``None``."""
    try:
        from tqdm import tqdm

        return tqdm(total=total, desc=desc, unit="epoch")
    except ImportError:
        return None


@dataclass(frozen=True)
class EpochRecord:
    """One line of ``metrics.jsonl``."""

    epoch: int
    train_loss: float
    val_loss: float
    val_token_acc: float
    lr: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EvalSummary:
    """Teacher-forced evaluation of a split.

    Attributes:
        loss: Mean total loss per record.
        cross_entropy: Mean cross-entropy per record.
        token_acc: Fraction of supervised positions predicted correctly.
        correct: Correct supervised positions.
        supervised: Supervised positions.
        records: Records evaluated.
    """

    loss: float
    cross_entropy: float
    token_acc: float
    correct: int
    supervised: int
    records: int


@dataclass
class TrainResult:
    """Outcome of :func:`train`.

    Attributes:
        params: Best parameters by validation token accuracy.
        last: Parameters after the final epoch.
        history: One :class:`EpochRecord` per epoch, including resumed ones.
        best_epoch: Epoch that produced ``params`` (``-1`` if no epoch ran).
        best_token_acc: Its validation token accuracy.
        best_val_loss: Its validation loss.
        elapsed_seconds: Wall time of this call.
    """

    params: ModelParams
    last: ModelParams
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_token_acc: float = -1.0
    best_val_loss: float = float("inf")
    elapsed_seconds: float = 0.0


def check_compatible(split: CorpusSplit, config: ModelConfig) -> None:
    """Verify that records fit the model's sizes and vocabulary.

    Raises:
        ConfigurationError: On a shape mismatch or a token id outside the vocabulary.
    """
    for record in split:
        if (record.segments, record.max_words, record.visual_dim) != (
            config.segments,
            config.max_words,
            config.visual_dim,
        ):
            msg = (
                f"record {record.id} has L_m={record.segments}, L_k={record.max_words}, D_v={record.visual_dim}; "
                f"the model expects {config.segments}, {config.max_words}, {config.visual_dim}"
            )
            raise ConfigurationError(msg)
        top = max(int(record.sentences.max()), int(record.reference.max()))
        if top >= config.vocab_size:
            msg = f"record {record.id} uses token id {top} but the model vocabulary has {config.vocab_size} entries"
            raise ConfigurationError(msg)


def shuffle_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return RngStream(seed).split("shuffle").split(f"epoch-{epoch}").permutation(n)


def dropout_stream(seed: int, epoch: int, batch_index: int) -> RngStream:
    return RngStream(seed).split("dropout").split(f"epoch-{epoch}").split(f"batch-{batch_index}")


def iter_batches(
    split: CorpusSplit,
    batch_size: int,
    order: np.ndarray | None = None,
    *,
    mask_padding: bool = True,
) -> Iterator[Batch]:
    """Collate ``split`` in ``order`` (file order by default); the last batch may be short."""
    indices = np.arange(len(split)) if order is None else order
    for start in range(0, len(indices), batch_size):
        yield collate([split[int(i)] for i in indices[start : start + batch_size]], mask_padding=mask_padding)


def evaluate(
    split: CorpusSplit,
    params: ModelParams,
    *,
    batch_size: int = 32,
    mask_padding: bool = True,
    lambda_d: float = 0.0,
) -> EvalSummary:
    """Teacher-forced loss and token accuracy over ``split`` with dropout off."""
    loss_sum = ce_sum = 0.0
    correct = supervised = records = 0
    with no_grad():
        for batch in iter_batches(split, batch_size, mask_padding=mask_padding):
            result = forward_teacher_forced(batch, params)
            breakdown = total_loss(result, batch, params, lambda_d)
            loss_sum += breakdown.value * batch.size
            ce_sum += breakdown.cross_entropy * batch.size
            c, s = token_accuracy(result.logits.data, batch.reference, batch.mask)
            correct += c
            supervised += s
            records += batch.size
    return EvalSummary(
        loss=loss_sum / max(records, 1),
        cross_entropy=ce_sum / max(records, 1),
        token_acc=correct / supervised if supervised else 0.0,
        correct=correct,
        supervised=supervised,
        records=records,
    )


def train_epoch(
    split: CorpusSplit,
    params: ModelParams,
    adam: AdamState,
    run: RunConfig,
    epoch: int,
) -> float:
    """One pass over ``split``; returns the mean training loss per record."""
    cfg = run.train
    lr = lr_at(epoch, cfg.lr0, cfg.lr_decay, cfg.decay_every)
    order = shuffle_order(len(split), cfg.seed, epoch)
    loss_sum, seen = 0.0, 0
    for i, batch in enumerate(iter_batches(split, cfg.batch_size, order, mask_padding=cfg.mask_padding)):
        params.zero_grad()
        with trace():
            result = forward_teacher_forced(batch, params, rng=dropout_stream(cfg.seed, epoch, i), training=True)
            loss = total_loss(result, batch, params, cfg.lambda_d)
            backward(loss.total)
        grads, _ = clip_by_global_norm(gradients(params), cfg.clip_norm)
        adam_step(params, grads, adam, lr)
        loss_sum += loss.value * batch.size
        seen += batch.size
    params.zero_grad()
    return loss_sum / max(seen, 1)


def _save_state(out: Path, adam: AdamState, next_epoch: int, result: TrainResult, seed: int) -> None:
    header = {
        "kind": "trainer",
        "next_epoch": str(next_epoch),
        "step": str(adam.step),
        "seed": str(seed),
        "best_epoch": str(result.best_epoch),
        "best_token_acc": repr(result.best_token_acc),
        "best_val_loss": repr(result.best_val_loss),
    }
    write_blocks(out / STATE_CKPT, header, adam.arrays())


def _resume(out: Path, run: RunConfig, result: TrainResult) -> tuple[ModelParams, AdamState, int]:
    header, arrays = read_blocks(out / STATE_CKPT)
    if header.get("kind") != "trainer":
        msg = f"{out / STATE_CKPT} is not a trainer-state file"
        raise CheckpointError(msg)
    if int(header["seed"]) != run.train.seed:
        msg = f"cannot resume: run seed {run.train.seed} differs from the saved seed {header['seed']}"
        raise CheckpointError(msg)
    params = load_checkpoint(out / LAST_CKPT, expected=run.model)
    adam = AdamState.from_arrays(
        arrays, int(header["step"]), beta1=run.train.beta1, beta2=run.train.beta2, eps=run.train.adam_eps
    )
    if set(adam.m) != set(params) or set(adam.v) != set(params):
        msg = f"{out / STATE_CKPT} does not hold moments for every parameter"
        raise CheckpointError(msg)
    next_epoch = int(header["next_epoch"])
    result.best_epoch = int(header["best_epoch"])
    result.best_token_acc = float(header["best_token_acc"])
    result.best_val_loss = float(header["best_val_loss"])
    if (out / MODEL_CKPT).exists():
        result.params = load_checkpoint(out / MODEL_CKPT, expected=run.model)
    log_path = out / METRICS_LOG
    if log_path.exists():
        result.history = [EpochRecord(**row) for row in iter_jsonl(log_path) if row["epoch"] < next_epoch]
        write_jsonl((r.to_dict() for r in result.history), log_path)
    _log.info("train.resumed", out_dir=str(out), next_epoch=next_epoch, step=adam.step)
    return params, adam, next_epoch


def train(
    run: RunConfig,
    train_split: CorpusSplit,
    val_split: CorpusSplit | None = None,
    out_dir: str | Path | None = None,
    *,
    resume: bool = False,
    params: ModelParams | None = None,
    progress: bool | ProgressCallback = False,
) -> TrainResult:
    """Train a model and keep the best validation checkpoint.

    Args:
        run: Model and training configuration; ``run.model.vocab_size`` must be set.
        train_split: Training records (non-empty).
        val_split: Validation records; the training split is used when omitted.
        out_dir: Run directory for checkpoints and the metrics log; nothing is
            written when ``None``.
        resume: Continue from ``out_dir``'s ``last.ckpt`` and trainer state.
        params: Initial parameters (default: :func:`init_params` from the run seed).
        progress: ``True`` shows a tqdm bar when installed; a callable
            receives ``(epochs_done, total_epochs)`` after each epoch.

    Returns:
        A :class:`TrainResult`.

    Raises:
        ConfigurationError: Empty corpus, or corpus and model disagree.
        CheckpointError: ``resume`` without a usable run directory.
    """
    started = time.perf_counter()
    if len(train_split) == 0:
        msg = "training split is empty"
        raise ConfigurationError(msg)
    val = val_split if val_split is not None and len(val_split) else train_split
    check_compatible(train_split, run.model)
    check_compatible(val, run.model)
    cfg = run.train
    out = Path(out_dir) if out_dir is not None else None

    model = params if params is not None else init_params(run.model, RngStream(cfg.seed).split("init"))
    result = TrainResult(params=model.snapshot(), last=model)
    adam = AdamState.zeros(model, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps)
    start = 0
    if resume:
        if out is None or not (out / STATE_CKPT).exists():
            msg = f"nothing to resume in {out}"
            raise CheckpointError(msg)
        model, adam, start = _resume(out, run, result)
    elif out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl([], out / METRICS_LOG)

    _log.info(
        "train.started",
        label=run.model.label(),
        records=len(train_split),
        epochs=cfg.epochs,
        start_epoch=start,
        parameters=model.num_scalars,
    )
    pbar = _try_tqdm(total=cfg.epochs, desc=f"Training {run.model.label()}") if progress is True else None
    user_cb = progress if callable(progress) else None
    if pbar is not None and start:
        pbar.update(start)
    try:
        for epoch in range(start, cfg.epochs):
            train_loss = train_epoch(train_split, model, adam, run, epoch)
            summary = evaluate(
                val, model, batch_size=cfg.batch_size, mask_padding=cfg.mask_padding, lambda_d=cfg.lambda_d
            )
            record = EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                val_loss=summary.loss,
                val_token_acc=summary.token_acc,
                lr=lr_at(epoch, cfg.lr0, cfg.lr_decay, cfg.decay_every),
            )
            result.history.append(record)
            improved = summary.token_acc > result.best_token_acc or (
                summary.token_acc == result.best_token_acc and summary.loss < result.best_val_loss
            )
            if improved:
                result.best_epoch = epoch
                result.best_token_acc = summary.token_acc
                result.best_val_loss = summary.loss
                result.params = model.snapshot()
            _log.info("train.epoch_done", improved=improved, **record.to_dict())
            if out is not None:
                append_jsonl(record.to_dict(), out / METRICS_LOG)
                if improved:
                    save_checkpoint(model, out / MODEL_CKPT)
                save_checkpoint(model, out / LAST_CKPT)
                _save_state(out, adam, epoch + 1, result, cfg.seed)
            if pbar is not None:
                pbar.update(1)
            if user_cb is not None:
                user_cb(epoch + 1, cfg.epochs)
    finally:
        if pbar is not None:
            pbar.close()

    result.last = model
    result.elapsed_seconds = time.perf_counter() - started
    _log.info(
        "train.done",
        best_epoch=result.best_epoch,
        best_token_acc=result.best_token_acc,
        elapsed_seconds=round(result.elapsed_seconds, 2),
    )
    return result
