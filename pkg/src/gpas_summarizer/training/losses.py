"""Training objectives: masked cross-entropy, the bag-of-words discriminative
loss, and their weighted sum."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from gpas_summarizer.autodiff import (
    TensorNode,
    add,
    bce_with_logits,
    log_softmax_rows,
    matmul,
    mean_all,
    mul,
    pick,
    reshape,
    scale,
    sum_all,
    tensor,
)
from gpas_summarizer.corpus import Batch
from gpas_summarizer.exceptions import DegenerateBatchError, DimensionError
from gpas_summarizer.model.network import ForwardResult, masked_logits
from gpas_summarizer.model.params import ModelParams
from gpas_summarizer.text import RESERVED


@dataclass(frozen=True)
class LossBreakdown:
    """A differentiable total plus its parts as plain floats."""

    total: TensorNode
    cross_entropy: float
    discriminative: float

    @property
    def value(self) -> float:
        return self.total.item()


def cross_entropy(logits: TensorNode, targets: np.ndarray, mask: np.ndarray) -> TensorNode:
    """Masked token cross-entropy.

    Each record's loss is the mean of ``−log softmax(logits)[target]`` over
    its supervised positions; the batch loss is the mean over records.

    Args:
        logits: ``[B × L_k × V]`` (or ``[L_k × V]`` for one record).
        targets: Reference ids, ``[B × L_k]`` (or ``[L_k]``).
        mask: Loss weights, same shape as ``targets``.

    Raises:
        DegenerateBatchError: If every position is masked.
        DimensionError: If the shapes disagree.
    """
    if logits.data.ndim == 2:
        logits = reshape(logits, (1, *logits.shape))
    B, T, V = logits.shape
    ids = np.asarray(targets, dtype=np.int64).reshape(-1)
    weights = np.asarray(mask, dtype=np.float64)
    if ids.size != B * T or weights.size != B * T:
        msg = f"cross_entropy: logits {logits.shape}, targets {np.shape(targets)} and mask {np.shape(mask)} disagree"
        raise DimensionError(msg)
    weights = weights.reshape(B, T)
    counts = weights.sum(axis=1)
    live = counts > 0
    if not live.any():
        msg = "cross_entropy: every position of the batch is masked"
        raise DegenerateBatchError(msg)
    per_position = np.where(live[:, None], weights / np.where(live, counts, 1.0)[:, None], 0.0) / live.sum()
    picked = pick(log_softmax_rows(reshape(logits, (B * T, V))), ids)
    return scale(sum_all(mul(picked, tensor(per_position.reshape(-1)))), -1.0)


def bag_of_words(reference: np.ndarray, vocab_size: int) -> np.ndarray:
    """0/1 indicator ``[B × V]`` of the content tokens of each reference."""
    ref = np.atleast_2d(np.asarray(reference, dtype=np.int64))
    out = np.zeros((ref.shape[0], vocab_size), dtype=np.float64)
    for b, row in enumerate(ref):
        content = row[row >= len(RESERVED)]
        out[b, content] = 1.0
    return out


def discriminative_loss(outputs: Sequence[TensorNode], reference: np.ndarray, params: ModelParams) -> TensorNode:
    """Bag-of-words binary cross-entropy of the mean decoder state.

    ``sigmoid(mean_t ĥ^d_t · W_disc)`` is scored against the indicator of the
    reference's content tokens, averaged over the vocabulary and the batch.
    """
    if not outputs:
        msg = "discriminative_loss: no decoder states"
        raise DimensionError(msg)
    acc = outputs[0]
    for node in outputs[1:]:
        acc = add(acc, node)
    pooled = scale(acc, 1.0 / len(outputs))
    logits = matmul(pooled, params["disc.W"])
    return mean_all(bce_with_logits(logits, bag_of_words(reference, params.config.vocab_size)))


def total_loss(result: ForwardResult, batch: Batch, params: ModelParams, lambda_d: float) -> LossBreakdown:
    """``L = L_ce + λ_d · L_d``; with ``λ_d = 0`` the discriminative head is left out of the graph."""
    ce = cross_entropy(result.logits, batch.reference, batch.mask)
    disc = discriminative_loss(result.outputs, batch.reference, params)
    total = ce if lambda_d == 0.0 else add(ce, scale(disc, lambda_d))
    return LossBreakdown(total, ce.item(), disc.item())


def token_accuracy(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> tuple[int, int]:
    """Teacher-forced ``(correct, supervised)`` counts over positions with nonzero mask."""
    predicted = np.argmax(masked_logits(logits), axis=-1)
    supervised = np.asarray(mask) > 0
    correct = int(np.sum((predicted == np.asarray(targets)) & supervised))
    return correct, int(supervised.sum())
