"""Building blocks of the summarizer: visual attention, text-visual fusion,
the LSTM cell, and attentional graph refinement.

All blocks act on a minibatch laid out along the leading axis: a node value
is ``[B × H]`` and a set of ``N`` node values is ``[B × N × H]``.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import NamedTuple

import numpy as np

from gpas_summarizer.autodiff import (
    RngStream,
    TensorNode,
    add,
    add_bias,
    concat,
    dropout,
    expand,
    gather_rows,
    matmul,
    mul,
    reshape,
    sigmoid,
    slice_axis,
    softmax_rows,
    tanh,
    weighted_sum,
)
from gpas_summarizer.exceptions import DimensionError

Params = Mapping[str, TensorNode]


class LSTMOut(NamedTuple):
    h: TensorNode
    c: TensorNode
    o: TensorNode


def _scores(pre: TensorNode, w: TensorNode) -> TensorNode:
    """``tanh(pre) · w`` for ``pre [B × N × A]`` and ``w [A × 1]``, giving ``[B × N]``."""
    batch, count = pre.shape[0], pre.shape[1]
    return reshape(matmul(tanh(pre), w), (batch, count))


def project_visual(visual: TensorNode, params: Params, layer: str) -> TensorNode:
    """The step-independent half ``V · W_v`` of the attention score, ``[B × L_m × A]``."""
    return matmul(visual, params[f"{layer}.att.W_v"])


def visual_attention(
    visual: TensorNode,
    h_prev: TensorNode,
    params: Params,
    layer: str,
    *,
    projected: TensorNode | None = None,
) -> tuple[TensorNode, TensorNode]:
    """Attend over segment visual features.

    ``score_i = wᵀ tanh(W_v v_i + W_h h_prev + b)``, ``a = softmax(score)`` and
    ``context = Σ_i a_i v_i``.

    Args:
        visual: Segment features ``[B × L_m × D_v]``.
        h_prev: Previous hidden state of the attending layer, ``[B × H]``.
        params: Model parameters.
        layer: Layer prefix (``enc_word``, ``enc_seg`` or ``dec``).
        projected: :func:`project_visual` output, when already computed.

    Returns:
        ``(context [B × D_v], weights [B × L_m])``.
    """
    if visual.data.ndim != 3 or h_prev.data.ndim != 2 or visual.shape[0] != h_prev.shape[0]:
        msg = f"visual_attention: visual {visual.shape} and hidden {h_prev.shape} disagree"
        raise DimensionError(msg)
    pre_v = projected if projected is not None else project_visual(visual, params, layer)
    query = add_bias(matmul(h_prev, params[f"{layer}.att.W_h"]), params[f"{layer}.att.b"])
    weights = softmax_rows(_scores(add(pre_v, expand(query, visual.shape[1], axis=1)), params[f"{layer}.att.w"]))
    return weighted_sum(weights, visual), weights


def embed(params: Params, word_ids: np.ndarray) -> TensorNode:
    """Embedding rows ``e(w)`` for a ``[B]`` vector of token ids."""
    return gather_rows(params["embed"], word_ids)


def tvj_fuse(
    context: TensorNode | None,
    word: TensorNode | np.ndarray,
    params: Params,
    layer: str,
    *,
    keep_prob: float = 1.0,
    rng: RngStream | None = None,
    training: bool = False,
) -> TensorNode:
    """Text-visual joint feature ``tanh(W_f [context ; e(w)] + b_f)``, ``[B × H]``.

    ``word`` is either a ``[B]`` array of token ids or an already embedded
    ``[B × E]`` node.  With ``context=None`` (fusion disabled) the visual
    half is dropped and ``W_f`` only sees the word.
    """
    word_input = embed(params, word) if isinstance(word, np.ndarray) else word
    joint = word_input if context is None else concat([context, word_input], axis=-1)
    fused = tanh(add_bias(matmul(joint, params[f"{layer}.tvj.W"]), params[f"{layer}.tvj.b"]))
    return dropout(fused, keep_prob, rng, training=training)


def lstm_step(x: TensorNode, h_prev: TensorNode, c_prev: TensorNode, params: Params, layer: str) -> LSTMOut:
    """One LSTM cell step; gate order in ``W`` is input, forget, output, candidate.

    ``c = f ⊙ c_prev + i ⊙ g`` and ``h = o ⊙ tanh(c)``; ``o`` is returned for
    cell-refining variants that recompute ``h`` from a refined ``c``.
    """
    if x.shape != h_prev.shape or h_prev.shape != c_prev.shape:
        msg = f"lstm_step: input {x.shape}, hidden {h_prev.shape} and cell {c_prev.shape} must match"
        raise DimensionError(msg)
    H = h_prev.shape[-1]
    z = add_bias(matmul(concat([x, h_prev], axis=-1), params[f"{layer}.lstm.W"]), params[f"{layer}.lstm.b"])
    i = sigmoid(slice_axis(z, 0, H))
    f = sigmoid(slice_axis(z, H, 2 * H))
    o = sigmoid(slice_axis(z, 2 * H, 3 * H))
    g = tanh(slice_axis(z, 3 * H, 4 * H))
    c = add(mul(f, c_prev), mul(i, g))
    return LSTMOut(mul(o, tanh(c)), c, o)


def agcn_keys(preds: TensorNode, params: Params, edge: str) -> TensorNode:
    """Predecessor half of the edge perceptron, ``preds · B + b1``, ``[B × N × G]``."""
    return add_bias(matmul(preds, params[f"gcn.{edge}.B"]), params[f"gcn.{edge}.b1"])


def agcn_weights(
    z: TensorNode,
    preds: TensorNode,
    params: Params,
    edge: str,
    *,
    keys: TensorNode | None = None,
) -> TensorNode:
    """Attention of node ``z [B × H]`` over its predecessors ``preds [B × N × H]``.

    ``u_j = w2ᵀ tanh(A z + B z_j + b1)`` (a two-layer perceptron on
    ``[z ; z_j]`` with its first layer split into query and key halves) and
    ``α = softmax(u)``.

    Raises:
        DimensionError: If ``preds`` is empty; the caller skips refinement instead.
    """
    if preds.data.ndim != 3 or preds.shape[1] == 0:
        msg = f"agcn_weights: need a non-empty [B × N × H] predecessor set, got {preds.shape}"
        raise DimensionError(msg)
    k = keys if keys is not None else agcn_keys(preds, params, edge)
    query = expand(matmul(z, params[f"gcn.{edge}.A"]), preds.shape[1], axis=1)
    return softmax_rows(_scores(add(k, query), params[f"gcn.{edge}.w2"]))


def agcn_refine(
    target: TensorNode,
    preds: TensorNode | None,
    alpha: TensorNode | None,
    W: TensorNode,
) -> TensorNode:
    """One node update ``tanh(target + (Σ_j α_j pred_j) · W)``.

    A node without predecessors is returned unchanged (the very same node).
    """
    if preds is None or alpha is None or preds.shape[1] == 0:
        return target
    return tanh(add(target, matmul(weighted_sum(alpha, preds), W)))
