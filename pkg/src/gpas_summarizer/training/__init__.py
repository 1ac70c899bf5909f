"""Losses, optimisation, and the training loop."""

from __future__ import annotations

from gpas_summarizer.training.losses import (
    LossBreakdown,
    bag_of_words,
    cross_entropy,
    discriminative_loss,
    token_accuracy,
    total_loss,
)
from gpas_summarizer.training.optim import AdamState, adam_step, clip_by_global_norm, global_norm, gradients, lr_at
from gpas_summarizer.training.trainer import (
    LAST_CKPT,
    METRICS_LOG,
    MODEL_CKPT,
    STATE_CKPT,
    EpochRecord,
    EvalSummary,
    TrainResult,
    check_compatible,
    evaluate,
    iter_batches,
    train,
)

__all__ = [
    "LAST_CKPT",
    "METRICS_LOG",
    "MODEL_CKPT",
    "STATE_CKPT",
    "AdamState",
    "EpochRecord",
    "EvalSummary",
    "LossBreakdown",
    "TrainResult",
    "adam_step",
    "bag_of_words",
    "check_compatible",
    "clip_by_global_norm",
    "cross_entropy",
    "discriminative_loss",
    "evaluate",
    "global_norm",
    "gradients",
    "iter_batches",
    "lr_at",
    "token_accuracy",
    "total_loss",
    "train",
]
