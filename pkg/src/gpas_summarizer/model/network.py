"""The summarization network: encoder-word layer, optional encoder-segment
layer, decoder, and graph refinement across the three levels.

Refinement variants:

* ``none``: plain encoder/decoder; refined states equal raw states.
* ``agcn_out``: after each cell step the hidden state is refined,
  ``ĥ = tanh(h + W Σ α ĥ_pred)``.
* ``agcn_in``: the cell state is refined inside the cell,
  ``ĉ = tanh(c + W Σ α ĉ_pred)`` and ``ĥ = o ⊙ ĉ``.

Word nodes have no predecessors, so their refined states are their raw states
in every variant.  With ``rounds > 1`` the segment and decoder refinements
are re-applied to their own previous refined values against the upstream
level's newest values; the LSTM chains are not re-run and carry round-one
states.

Example::

    >>> params = init_params(config, RngStream(0).split("init"))
    >>> result = forward_teacher_forced(collate(records), params)
    >>> result.logits.shape
    (8, 8, 40)
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from gpas_summarizer.autodiff import (
    RngStream,
    TensorNode,
    add_bias,
    matmul,
    mul,
    no_grad,
    stack,
    tanh,
    tensor,
    zeros,
)
from gpas_summarizer.autodiff import dropout as _dropout
from gpas_summarizer.config import GraphKind, ModelConfig, Variant
from gpas_summarizer.corpus import Batch, ProposalRecord, collate
from gpas_summarizer.exceptions import ConfigurationError, UndefinedScoreError
from gpas_summarizer.model.graph import GraphSpec
from gpas_summarizer.model.layers import (
    agcn_keys,
    agcn_refine,
    agcn_weights,
    lstm_step,
    project_visual,
    tvj_fuse,
    visual_attention,
)
from gpas_summarizer.model.params import DEC, ENC_SEG, ENC_WORD, SEG_DEC, WORD_DEC, WORD_SEG, ModelParams
from gpas_summarizer.text import BOS_ID, EOS_ID, PAD_ID

#: Token ids the decoder may never emit.
MASKED_OUTPUT_IDS: tuple[int, ...] = (PAD_ID, BOS_ID)


@dataclass
class LayerState:
    """Per-node states of one level, each ``[B × H]``.

    ``h_hat``/``c_hat`` are the refined values after the final round; for
    unrefined nodes they are the raw ``h``/``c`` nodes themselves.  ``rounds[r]``
    holds the refined ``h`` (``agcn_out``) or ``c`` (``agcn_in``) of every node
    after round ``r + 1``.
    """

    h: list[TensorNode] = field(default_factory=list)
    c: list[TensorNode] = field(default_factory=list)
    h_hat: list[TensorNode] = field(default_factory=list)
    c_hat: list[TensorNode] = field(default_factory=list)
    o: list[TensorNode] = field(default_factory=list)
    rounds: list[list[TensorNode]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.h)

    def features(self, variant: Variant, start: int = 0, stop: int | None = None) -> TensorNode:
        """Refined node values other levels aggregate, stacked to ``[B × N × H]``."""
        nodes = self.c_hat if variant is Variant.AGCN_IN else self.h_hat
        return stack(nodes[start:stop], axis=1)


@dataclass
class DecoderState:
    """Recurrent state the next decoder step starts from."""

    h: TensorNode
    c: TensorNode


@dataclass
class Upstream:
    """Decoder predecessors per refinement round, with their perceptron keys precomputed."""

    features: list[TensorNode]
    keys: list[TensorNode]
    edge: str

    @property
    def rounds(self) -> int:
        return len(self.features)


@dataclass
class StepOutput:
    logits: TensorNode
    state: DecoderState
    output: TensorNode
    visual_alpha: TensorNode | None
    gcn_alpha: list[TensorNode]


@dataclass
class ForwardResult:
    """Everything a teacher-forced pass produces.

    Attributes:
        logits: ``[B × L_k × V]`` output scores.
        outputs: Decoder states the logits were projected from, ``L_k`` × ``[B × H]``.
        words: Encoder-word layer states.
        segments: Encoder-segment layer states (expanded graph only).
        attention: Attention weights by name, e.g. ``"visual/dec"`` →
            ``[B × L_k × L_m]`` or ``"gcn/seg_dec/round-1"`` → ``[B × L_k × L_m]``.
    """

    logits: TensorNode
    outputs: list[TensorNode]
    words: LayerState
    segments: LayerState | None
    attention: dict[str, np.ndarray]


class _Dropout:
    """Named dropout sites drawing from child streams of one batch stream."""

    def __init__(self, keep_prob: float, rng: RngStream | None, training: bool) -> None:
        self.keep_prob = keep_prob
        self.rng = rng
        self.training = training and keep_prob < 1.0
        if self.training and rng is None:
            msg = "training with dropout needs an RngStream"
            raise ConfigurationError(msg)

    def stream(self, site: str) -> RngStream | None:
        return self.rng.split(site) if self.training and self.rng is not None else None

    def __call__(self, x: TensorNode, site: str) -> TensorNode:
        return _dropout(x, self.keep_prob, self.stream(site), training=self.training)


def _as_batch(data: Batch | ProposalRecord | Sequence[ProposalRecord]) -> Batch:
    if isinstance(data, Batch):
        return data
    if isinstance(data, ProposalRecord):
        return collate([data])
    return collate(list(data))


def _check_batch(batch: Batch, config: ModelConfig) -> None:
    expected = (config.segments, config.visual_dim)
    if batch.visual.shape[1:] != expected or batch.words.shape[1] != config.word_nodes:
        msg = (
            f"batch of visual {batch.visual.shape} and words {batch.words.shape} does not match "
            f"L_m={config.segments}, L_k={config.max_words}, D_v={config.visual_dim}"
        )
        raise ConfigurationError(msg)


def _fuse_step(
    layer: str,
    visual: TensorNode,
    projected: TensorNode | None,
    h_prev: TensorNode,
    word: TensorNode | np.ndarray,
    params: ModelParams,
    drop: _Dropout,
    site: str,
) -> tuple[TensorNode, TensorNode | None]:
    config = params.config
    context, alpha = (None, None)
    if config.use_tvj:
        context, alpha = visual_attention(visual, h_prev, params, layer, projected=projected)
    x = tvj_fuse(
        context,
        word,
        params,
        layer,
        keep_prob=config.keep_prob,
        rng=drop.stream(site),
        training=drop.training,
    )
    return x, alpha


def _refined_hidden(o: TensorNode, c_hat: TensorNode, config: ModelConfig) -> TensorNode:
    return mul(o, tanh(c_hat) if config.tanh_refined_cell else c_hat)


# ---------------------------------------------------------------------------
# Encoder levels
# ---------------------------------------------------------------------------


def encode_words(
    batch: Batch,
    params: ModelParams,
    *,
    visual: TensorNode | None = None,
    drop: _Dropout | None = None,
    attention: dict[str, list[np.ndarray]] | None = None,
) -> LayerState:
    """Run one LSTM chain over all ``L_m·L_k`` input words (no reset at segment boundaries).

    Word nodes are never refined: ``ĥ^w = h^w`` and ``ĉ^w = c^w``.
    """
    config = params.config
    drop = drop or _Dropout(1.0, None, False)
    V = visual if visual is not None else tensor(batch.visual)
    projected = project_visual(V, params, ENC_WORD) if config.use_tvj else None
    h = zeros((batch.size, config.hidden))
    c = zeros((batch.size, config.hidden))
    state = LayerState()
    for t in range(config.word_nodes):
        x, alpha = _fuse_step(ENC_WORD, V, projected, h, batch.words[:, t], params, drop, f"{ENC_WORD}/{t}")
        h, c, o = lstm_step(x, h, c, params, ENC_WORD)
        state.h.append(h)
        state.c.append(c)
        state.o.append(o)
        if attention is not None and alpha is not None:
            attention.setdefault(f"visual/{ENC_WORD}", []).append(alpha.data.copy())
    state.h_hat = list(state.h)
    state.c_hat = list(state.c)
    return state


def encode_segments(
    words: LayerState,
    batch: Batch,
    params: ModelParams,
    *,
    visual: TensorNode | None = None,
    drop: _Dropout | None = None,
    attention: dict[str, list[np.ndarray]] | None = None,
) -> LayerState:
    """Run the ``L_m``-step segment chain of the expanded graph.

    Segment cell ``i`` takes ``tvj_fuse(attended context, ĥ^w_last(i) · P)``
    where ``ĥ^w_last(i)`` is the last word node of segment ``i``; its state is
    then refined from segment ``i``'s own ``L_k`` word nodes.

    Raises:
        ConfigurationError: On a basic-graph configuration.
    """
    config = params.config
    if config.graph is not GraphKind.EXPANDED:
        msg = "encode_segments needs graph=expanded"
        raise ConfigurationError(msg)
    drop = drop or _Dropout(1.0, None, False)
    graph = GraphSpec.from_config(config)
    V = visual if visual is not None else tensor(batch.visual)
    projected = project_visual(V, params, ENC_SEG) if config.use_tvj else None
    W = params[f"gcn.{WORD_SEG}.W"]
    cell_refined = config.variant is Variant.AGCN_IN
    h = zeros((batch.size, config.hidden))
    c = zeros((batch.size, config.hidden))
    state = LayerState(rounds=[[] for _ in range(config.rounds)])
    for i in range(config.segments):
        support = graph.predecessors("segment", i)
        preds = words.features(config.variant, support.start, support.stop)
        keys = agcn_keys(preds, params, WORD_SEG)
        last_word = matmul(words.h_hat[support.stop - 1], params[f"{ENC_SEG}.proj"])
        x, alpha = _fuse_step(ENC_SEG, V, projected, h, last_word, params, drop, f"{ENC_SEG}/{i}")
        if attention is not None and alpha is not None:
            attention.setdefault(f"visual/{ENC_SEG}", []).append(alpha.data.copy())
        raw_h, raw_c, o = lstm_step(x, h, c, params, ENC_SEG)
        refined = raw_c if cell_refined else raw_h
        for r in range(config.rounds):
            gcn_alpha = agcn_weights(refined, preds, params, WORD_SEG, keys=keys)
            refined = agcn_refine(refined, preds, gcn_alpha, W)
            state.rounds[r].append(refined)
            if attention is not None:
                attention.setdefault(f"gcn/{WORD_SEG}/round-{r + 1}", []).append(gcn_alpha.data.copy())
        carried = state.rounds[0][i]
        state.h.append(raw_h)
        state.c.append(raw_c)
        state.o.append(o)
        if cell_refined:
            state.c_hat.append(refined)
            state.h_hat.append(_refined_hidden(o, refined, config))
            h, c = _refined_hidden(o, carried, config), carried
        else:
            state.h_hat.append(refined)
            state.c_hat.append(raw_c)
            h, c = (raw_h if config.raw_recurrence else carried), raw_c
    return state


def _upstream(words: LayerState, segments: LayerState | None, params: ModelParams) -> Upstream | None:
    """Decoder predecessors for every round (``None`` without refinement)."""
    config = params.config
    if not config.refines:
        return None
    if config.graph is GraphKind.EXPANDED:
        assert segments is not None
        features = [stack(nodes, axis=1) for nodes in segments.rounds]
        keys = [agcn_keys(f, params, SEG_DEC) for f in features]
        return Upstream(features, keys, SEG_DEC)
    # Word nodes never change, so every round sees the same predecessors.
    feats = words.features(config.variant)
    keys_once = agcn_keys(feats, params, WORD_DEC)
    return Upstream([feats] * config.rounds, [keys_once] * config.rounds, WORD_DEC)


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------


def decode_step(
    t: int,
    prev_word_ids: np.ndarray,
    state: DecoderState,
    upstream: Upstream | None,
    params: ModelParams,
    *,
    visual: TensorNode,
    projected: TensorNode | None = None,
    drop: _Dropout | None = None,
) -> StepOutput:
    """One decoder step: attention, fusion, cell, refinement, output projection.

    Args:
        t: Step index, ``0 <= t < L_k``.
        prev_word_ids: ``[B]`` previous words (``<bos>`` at ``t = 0``).
        state: Recurrent state from step ``t - 1`` (the encoder's last word state at ``t = 0``).
        upstream: Decoder predecessors per round, ``None`` without refinement.
        params: Model parameters.
        visual: Segment features ``[B × L_m × D_v]``.
        projected: Precomputed ``V · W_v`` for the decoder attention.
        drop: Dropout sites (evaluation when omitted).

    Raises:
        ConfigurationError: If ``t`` is outside ``[0, L_k)``.
    """
    config = params.config
    if not 0 <= t < config.max_words:
        msg = f"decode step {t} out of range for L_k={config.max_words}"
        raise ConfigurationError(msg)
    drop = drop or _Dropout(1.0, None, False)
    x, visual_alpha = _fuse_step(DEC, visual, projected, state.h, prev_word_ids, params, drop, f"{DEC}/{t}")
    raw_h, raw_c, o = lstm_step(x, state.h, state.c, params, DEC)
    gcn_alpha: list[TensorNode] = []

    if upstream is None:
        output, new_state = raw_h, DecoderState(raw_h, raw_c)
    else:
        W = params[f"gcn.{upstream.edge}.W"]
        refined = raw_c if config.variant is Variant.AGCN_IN else raw_h
        carried = refined
        for r in range(upstream.rounds):
            feats = upstream.features[r]
            alpha = agcn_weights(refined, feats, params, upstream.edge, keys=upstream.keys[r])
            refined = agcn_refine(refined, feats, alpha, W)
            gcn_alpha.append(alpha)
            if r == 0:
                carried = refined
        if config.variant is Variant.AGCN_IN:
            output = _refined_hidden(o, refined, config)
            new_state = DecoderState(_refined_hidden(o, carried, config), carried)
        else:
            output = refined
            new_state = DecoderState(raw_h if config.raw_recurrence else carried, raw_c)

    logits = add_bias(matmul(drop(output, f"{DEC}/out/{t}"), params["out.W"]), params["out.b"])
    return StepOutput(logits, new_state, output, visual_alpha, gcn_alpha)


def _encode(
    batch: Batch,
    params: ModelParams,
    drop: _Dropout,
    attention: dict[str, list[np.ndarray]] | None,
) -> tuple[TensorNode, LayerState, LayerState | None, Upstream | None]:
    config = params.config
    visual = tensor(batch.visual)
    words = encode_words(batch, params, visual=visual, drop=drop, attention=attention)
    segments = None
    if config.graph is GraphKind.EXPANDED:
        segments = encode_segments(words, batch, params, visual=visual, drop=drop, attention=attention)
    return visual, words, segments, _upstream(words, segments, params)


def forward_teacher_forced(
    data: Batch | ProposalRecord | Sequence[ProposalRecord],
    params: ModelParams,
    *,
    rng: RngStream | None = None,
    training: bool = False,
) -> ForwardResult:
    """Encode, then decode ``L_k`` steps feeding ``<bos>`` and the reference words.

    Args:
        data: A batch, a single record, or a list of records.
        params: Model parameters.
        rng: Dropout stream for this batch (required when training with dropout).
        training: Apply dropout.

    Returns:
        A :class:`ForwardResult` with logits ``[B × L_k × V]`` and every attention map.
    """
    config = params.config
    batch = _as_batch(data)
    _check_batch(batch, config)
    drop = _Dropout(config.keep_prob, rng, training)
    attention: dict[str, list[np.ndarray]] = {}
    visual, words, segments, upstream = _encode(batch, params, drop, attention)
    projected = project_visual(visual, params, DEC) if config.use_tvj else None

    state = DecoderState(words.h_hat[-1], words.c_hat[-1])
    prev = batch.decoder_inputs
    logits: list[TensorNode] = []
    outputs: list[TensorNode] = []
    for t in range(config.max_words):
        step = decode_step(t, prev[:, t], state, upstream, params, visual=visual, projected=projected, drop=drop)
        state = step.state
        logits.append(step.logits)
        outputs.append(step.output)
        if step.visual_alpha is not None:
            attention.setdefault(f"visual/{DEC}", []).append(step.visual_alpha.data.copy())
        if upstream is not None:
            for r, alpha in enumerate(step.gcn_alpha, start=1):
                attention.setdefault(f"gcn/{upstream.edge}/round-{r}", []).append(alpha.data.copy())

    return ForwardResult(
        logits=stack(logits, axis=1),
        outputs=outputs,
        words=words,
        segments=segments,
        attention={name: np.stack(maps, axis=1) for name, maps in attention.items()},
    )


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hypothesis:
    """A greedily decoded sentence.

    Attributes:
        ids: Emitted token ids, ending in ``<eos>`` unless ``L_k`` steps ran out.
        probs: Probability of each emitted id at its step.
    """

    ids: tuple[int, ...]
    probs: tuple[float, ...]

    @property
    def confidence(self) -> float | None:
        return confidence_score(self.ids, self.probs) if self.ids else None


def masked_logits(logits: np.ndarray) -> np.ndarray:
    """Copy of ``logits [..., V]`` with the never-emitted ids set to ``-inf``."""
    out = np.array(logits, dtype=np.float64, copy=True)
    out[..., list(MASKED_OUTPUT_IDS)] = -np.inf
    return out


def greedy_decode_batch(data: Batch | Sequence[ProposalRecord], params: ModelParams) -> list[Hypothesis]:
    """Greedy decoding for a batch: argmax each step, feed it back, stop at ``<eos>``.

    Ties go to the smallest token id; ``<pad>`` and ``<bos>`` are never emitted.
    """
    config = params.config
    batch = _as_batch(data)
    _check_batch(batch, config)
    with no_grad():
        drop = _Dropout(1.0, None, False)
        visual, words, _, upstream = _encode(batch, params, drop, None)
        projected = project_visual(visual, params, DEC) if config.use_tvj else None
        state = DecoderState(words.h_hat[-1], words.c_hat[-1])
        prev = np.full(batch.size, BOS_ID, dtype=np.int64)
        ids: list[list[int]] = [[] for _ in range(batch.size)]
        probs: list[list[float]] = [[] for _ in range(batch.size)]
        done = np.zeros(batch.size, dtype=bool)
        for t in range(config.max_words):
            step = decode_step(t, prev, state, upstream, params, visual=visual, projected=projected, drop=drop)
            state = step.state
            scores = masked_logits(step.logits.data)
            choice = np.argmax(scores, axis=-1)
            shifted = scores - scores.max(axis=-1, keepdims=True)
            p = np.exp(shifted) / np.exp(shifted).sum(axis=-1, keepdims=True)
            for b in np.flatnonzero(~done):
                token = int(choice[b])
                ids[b].append(token)
                probs[b].append(float(p[b, token]))
                if token == EOS_ID:
                    done[b] = True
            if done.all():
                break
            prev = choice.astype(np.int64)
    return [Hypothesis(tuple(i), tuple(p)) for i, p in zip(ids, probs, strict=True)]


def greedy_decode(record: ProposalRecord, params: ModelParams) -> list[int]:
    """Greedy decoding of a single record; at most ``L_k`` ids."""
    return list(greedy_decode_batch([record], params)[0].ids)


def confidence_score(token_ids: Sequence[int], probs: Sequence[float]) -> float:
    """Mean log-probability of a generated sentence, up to and including ``<eos>``.

    Raises:
        UndefinedScoreError: If no token was generated.
    """
    logs: list[float] = []
    for token, p in zip(token_ids, probs, strict=False):
        logs.append(math.log(p) if p > 0.0 else -math.inf)
        if token == EOS_ID:
            break
    if not logs:
        msg = "confidence score is undefined for an empty sentence"
        raise UndefinedScoreError(msg)
    return sum(logs) / len(logs)


