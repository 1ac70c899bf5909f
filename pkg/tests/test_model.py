"""Tests for parameter layout, graph topology, the forward pass, and greedy decoding."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable

import numpy as np
import pytest

from gpas_summarizer.autodiff import RngStream, TensorNode, tensor, zeros
from gpas_summarizer.config import GraphKind, ModelConfig, RunConfig
from gpas_summarizer.corpus import Batch, CorpusSplit
from gpas_summarizer.exceptions import (
    CheckpointError,
    ConfigurationError,
    DimensionError,
    IndexLookupError,
    UndefinedScoreError,
)
from gpas_summarizer.model import (
    DecoderState,
    GraphSpec,
    Hypothesis,
    ModelParams,
    confidence_score,
    decode_step,
    edge_types,
    encode_segments,
    encode_words,
    forward_teacher_forced,
    greedy_decode,
    greedy_decode_batch,
    init_params,
    param_shapes,
)
from gpas_summarizer.model.layers import agcn_refine, agcn_weights, lstm_step, tvj_fuse, visual_attention
from gpas_summarizer.model.network import masked_logits
from gpas_summarizer.text import BOS_ID, EOS_ID, PAD_ID

MakeParams = Callable[..., ModelParams]

ARCHITECTURES = [
    {"variant": "none", "graph": "basic"},
    {"variant": "none", "graph": "basic", "use_tvj": False},
    {"variant": "agcn_out", "graph": "basic"},
    {"variant": "agcn_in", "graph": "basic"},
    {"variant": "agcn_out", "graph": "expanded"},
    {"variant": "agcn_in", "graph": "expanded"},
]


def _arch_id(arch: dict[str, object]) -> str:
    return "-".join(str(v) for v in arch.values())


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


class TestParamShapes:
    def test_plain_model_has_no_graph_parameters(self) -> None:
        shapes = param_shapes(ModelConfig(vocab_size=12))
        assert not any(name.startswith(("gcn.", "enc_seg.")) for name in shapes)
        assert shapes["embed"] == (12, 32)
        assert shapes["dec.tvj.W"] == (16 + 32, 64)
        assert shapes["dec.lstm.W"] == (128, 256)
        assert shapes["out.W"] == shapes["disc.W"] == (64, 12)

    def test_without_fusion_no_attention(self) -> None:
        shapes = param_shapes(ModelConfig(vocab_size=12, use_tvj=False))
        assert not any(".att." in name for name in shapes)
        assert shapes["enc_word.tvj.W"] == (32, 64)

    def test_basic_refinement_edge(self) -> None:
        shapes = param_shapes(ModelConfig(vocab_size=12, variant="agcn_out"))  # type: ignore[arg-type]
        assert shapes["gcn.word_dec.W"] == (64, 64)
        assert shapes["gcn.word_dec.A"] == (64, 32)
        assert shapes["gcn.word_dec.w2"] == (32, 1)
        assert "enc_seg.proj" not in shapes

    def test_expanded_adds_segment_layer(self) -> None:
        cfg = ModelConfig(vocab_size=12, variant="agcn_in", graph="expanded")  # type: ignore[arg-type]
        shapes = param_shapes(cfg)
        assert edge_types(cfg) == ("word_seg", "seg_dec")
        assert shapes["enc_seg.proj"] == (64, 32)
        assert "enc_seg.lstm.W" in shapes
        assert "gcn.word_dec.W" not in shapes

    def test_vocab_must_exceed_reserved(self) -> None:
        with pytest.raises(ConfigurationError, match="reserved"):
            param_shapes(ModelConfig(vocab_size=5))


class TestInitParams:
    def test_forget_gate_bias_is_one(self, make_params: MakeParams, micro_run: RunConfig) -> None:
        H = micro_run.model.hidden
        b = make_params()["dec.lstm.b"].data
        np.testing.assert_array_equal(b[H : 2 * H], 1.0)
        assert np.all(np.abs(b[:H]) <= micro_run.model.init_scale)

    def test_deterministic_per_seed(self, make_params: MakeParams) -> None:
        a, b, c = make_params(seed=1), make_params(seed=1), make_params(seed=2)
        np.testing.assert_array_equal(a["embed"].data, b["embed"].data)
        assert not np.array_equal(a["embed"].data, c["embed"].data)

    def test_adding_groups_keeps_other_values(self, make_params: MakeParams) -> None:
        plain = make_params()
        refined = make_params(variant="agcn_out")
        for name in plain:
            np.testing.assert_array_equal(plain[name].data, refined[name].data)

    def test_mismatched_arrays_rejected(self, make_params: MakeParams) -> None:
        params = make_params()
        arrays = params.arrays()
        arrays["extra"] = np.zeros(2)
        with pytest.raises(CheckpointError, match="unexpected"):
            ModelParams.from_arrays(params.config, arrays)

    def test_wrong_shape_rejected(self, make_params: MakeParams) -> None:
        params = make_params()
        arrays = params.arrays()
        arrays["out.b"] = np.zeros(3)
        with pytest.raises(CheckpointError, match="out.b"):
            ModelParams.from_arrays(params.config, arrays)

    def test_snapshot_is_independent(self, make_params: MakeParams) -> None:
        params = make_params()
        copy = params.snapshot()
        copy["embed"].data[0, 0] = 99.0
        assert params["embed"].data[0, 0] != 99.0
        assert copy.num_scalars == params.num_scalars


# ---------------------------------------------------------------------------
# Graph topology
# ---------------------------------------------------------------------------


class TestGraphSpec:
    def test_basic_sizes_and_predecessors(self) -> None:
        g = GraphSpec(GraphKind.BASIC, segments=2, max_words=3)
        assert (g.size("word"), g.size("segment"), g.size("decoder")) == (6, 0, 3)
        assert list(g.predecessors("decoder", 1)) == list(range(6))
        assert list(g.predecessors("word", 4)) == []
        assert g.predecessor_level("decoder") == "word"

    def test_expanded_predecessors(self) -> None:
        g = GraphSpec(GraphKind.EXPANDED, segments=2, max_words=3)
        assert list(g.predecessors("segment", 1)) == [3, 4, 5]
        assert list(g.predecessors("decoder", 0)) == [0, 1]
        assert g.predecessor_level("decoder") == "segment"
        assert g.predecessor_level("word") is None

    @pytest.mark.parametrize(("kind", "count"), [(GraphKind.BASIC, 3 * 6), (GraphKind.EXPANDED, 6 + 3 * 2)])
    def test_edge_count(self, kind: GraphKind, count: int) -> None:
        edges = GraphSpec(kind, segments=2, max_words=3).edges()
        assert len(edges) == count
        assert all(src != dst for src, _, dst, _ in edges)

    def test_missing_node(self) -> None:
        g = GraphSpec(GraphKind.BASIC, segments=2, max_words=3)
        with pytest.raises(IndexLookupError):
            g.predecessors("segment", 0)
        with pytest.raises(IndexLookupError):
            g.predecessors("decoder", 3)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


def _node(*shape: int, seed: int = 0) -> TensorNode:
    return tensor(np.random.default_rng(seed).normal(size=shape))


class TestLayers:
    def test_visual_attention(self, make_params: MakeParams) -> None:
        context, weights = visual_attention(_node(3, 2, 5), _node(3, 8, seed=1), make_params(), "dec")
        assert context.shape == (3, 5)
        np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0)

    def test_visual_attention_batch_mismatch(self, make_params: MakeParams) -> None:
        with pytest.raises(DimensionError, match="disagree"):
            visual_attention(_node(3, 2, 5), _node(2, 8), make_params(), "dec")

    def test_tvj_fuse_without_context(self, make_params: MakeParams) -> None:
        fused = tvj_fuse(None, np.array([4, 5]), make_params(use_tvj=False), "dec")
        assert fused.shape == (2, 8)
        assert np.all(np.abs(fused.data) < 1.0)

    def test_lstm_step_shapes_and_range(self, make_params: MakeParams) -> None:
        out = lstm_step(_node(3, 8), _node(3, 8, seed=1), _node(3, 8, seed=2), make_params(), "dec")
        assert out.h.shape == out.c.shape == out.o.shape == (3, 8)
        assert np.all(np.abs(out.h.data) < 1.0)
        assert np.all((out.o.data > 0.0) & (out.o.data < 1.0))

    def test_lstm_step_rejects_mismatch(self, make_params: MakeParams) -> None:
        with pytest.raises(DimensionError, match="must match"):
            lstm_step(_node(3, 8), _node(3, 7), _node(3, 8), make_params(), "dec")

    def test_agcn_weights_normalized(self, make_params: MakeParams) -> None:
        alpha = agcn_weights(_node(3, 8), _node(3, 4, 8, seed=1), make_params(variant="agcn_out"), "word_dec")
        assert alpha.shape == (3, 4)
        np.testing.assert_allclose(alpha.data.sum(axis=-1), 1.0)

    def test_agcn_weights_need_predecessors(self, make_params: MakeParams) -> None:
        with pytest.raises(DimensionError, match="non-empty"):
            agcn_weights(_node(3, 8), tensor(np.zeros((3, 0, 8))), make_params(variant="agcn_out"), "word_dec")

    def test_agcn_refine_without_predecessors_is_identity(self) -> None:
        target = _node(3, 8)
        assert agcn_refine(target, None, None, _node(8, 8)) is target

    def test_agcn_refine_bounded(self) -> None:
        preds = _node(3, 4, 8, seed=1)
        alpha = tensor(np.full((3, 4), 0.25))
        refined = agcn_refine(_node(3, 8), preds, alpha, _node(8, 8, seed=2))
        assert refined.shape == (3, 8)
        assert np.all(np.abs(refined.data) < 1.0)


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


class TestForward:
    @pytest.mark.parametrize("arch", ARCHITECTURES, ids=_arch_id)
    def test_logit_shape(self, arch: dict[str, object], make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params(**arch)
        result = forward_teacher_forced(micro_batch, params)
        cfg = params.config
        assert result.logits.shape == (micro_batch.size, cfg.max_words, cfg.vocab_size)
        assert len(result.outputs) == cfg.max_words
        assert np.all(np.isfinite(result.logits.data))

    def test_visual_attention_rows_sum_to_one(self, make_params: MakeParams, micro_batch: Batch) -> None:
        result = forward_teacher_forced(micro_batch, make_params())
        dec = result.attention["visual/dec"]
        assert dec.shape == (3, 3, 2)
        np.testing.assert_allclose(dec.sum(axis=-1), 1.0)
        assert result.attention["visual/enc_word"].shape == (3, 6, 2)

    def test_basic_refinement_attention(self, make_params: MakeParams, micro_batch: Batch) -> None:
        result = forward_teacher_forced(micro_batch, make_params(variant="agcn_out", rounds=2))
        for r in (1, 2):
            alpha = result.attention[f"gcn/word_dec/round-{r}"]
            assert alpha.shape == (3, 3, 6)
            np.testing.assert_allclose(alpha.sum(axis=-1), 1.0)

    def test_expanded_refinement_attention(self, make_params: MakeParams, micro_batch: Batch) -> None:
        result = forward_teacher_forced(micro_batch, make_params(variant="agcn_in", graph="expanded"))
        assert result.attention["gcn/word_seg/round-1"].shape == (3, 2, 3)
        assert result.attention["gcn/seg_dec/round-1"].shape == (3, 3, 2)
        assert result.attention["visual/enc_seg"].shape == (3, 2, 2)
        assert result.segments is not None
        assert len(result.segments) == 2

    def test_word_nodes_are_never_refined(self, make_params: MakeParams, micro_batch: Batch) -> None:
        result = forward_teacher_forced(micro_batch, make_params(variant="agcn_in"))
        assert all(a is b for a, b in zip(result.words.h_hat, result.words.h, strict=True))
        assert all(a is b for a, b in zip(result.words.c_hat, result.words.c, strict=True))

    def test_refined_outputs_bounded(self, make_params: MakeParams, micro_batch: Batch) -> None:
        result = forward_teacher_forced(micro_batch, make_params(variant="agcn_out", graph="expanded"))
        for out in result.outputs:
            assert np.all(np.abs(out.data) < 1.0)

    def test_rounds_ignored_without_refinement(self, make_params: MakeParams, micro_batch: Batch) -> None:
        one = forward_teacher_forced(micro_batch, make_params(rounds=1))
        three = forward_teacher_forced(micro_batch, make_params(rounds=3))
        np.testing.assert_array_equal(one.logits.data, three.logits.data)

    @pytest.mark.parametrize("arch", ARCHITECTURES[2:], ids=_arch_id)
    def test_variant_none_matches_skipped_refinement(
        self, arch: dict[str, object], make_params: MakeParams, micro_batch: Batch
    ) -> None:
        refining = make_params(**arch)
        skipped = forward_teacher_forced(micro_batch, refining.without_refinement())
        absent = forward_teacher_forced(micro_batch, make_params())
        np.testing.assert_array_equal(skipped.logits.data, absent.logits.data)
        refined = forward_teacher_forced(micro_batch, refining)
        assert not np.array_equal(refined.logits.data, absent.logits.data)

    def test_skipped_refinement_shares_nodes(self, make_params: MakeParams) -> None:
        refining = make_params(variant="agcn_in", graph="expanded")
        view = refining.without_refinement()
        assert view.config.refines is False
        assert not any(name.startswith("gcn.") for name in view)
        assert all(view[name] is refining[name] for name in view)

    @pytest.mark.parametrize("arch", [a for a in ARCHITECTURES if a.get("use_tvj", True)], ids=_arch_id)
    def test_swapping_segment_visuals_swaps_first_step_attention(
        self, arch: dict[str, object], make_params: MakeParams, micro_batch: Batch
    ) -> None:
        params = make_params(**arch)
        swapped = dataclasses.replace(micro_batch, visual=np.ascontiguousarray(micro_batch.visual[:, ::-1]))
        base = forward_teacher_forced(micro_batch, params).attention["visual/dec"][:, 0]
        perm = forward_teacher_forced(swapped, params).attention["visual/dec"][:, 0]
        np.testing.assert_allclose(perm, base[:, ::-1], rtol=0, atol=1e-12)

    def test_single_record_input(self, make_params: MakeParams, micro_splits: tuple[CorpusSplit, CorpusSplit]) -> None:
        result = forward_teacher_forced(micro_splits[0][0], make_params())
        assert result.logits.shape[0] == 1

    def test_batch_shape_checked(self, make_params: MakeParams, micro_batch: Batch) -> None:
        with pytest.raises(ConfigurationError, match="does not match"):
            forward_teacher_forced(micro_batch, make_params(max_words=4))

    def test_dropout_needs_stream(self, make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params(keep_prob=0.5)
        with pytest.raises(ConfigurationError, match="RngStream"):
            forward_teacher_forced(micro_batch, params, training=True)

    def test_dropout_is_reproducible(self, make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params(keep_prob=0.5)
        a = forward_teacher_forced(micro_batch, params, rng=RngStream(3).split("b"), training=True)
        b = forward_teacher_forced(micro_batch, params, rng=RngStream(3).split("b"), training=True)
        evaluation = forward_teacher_forced(micro_batch, params)
        np.testing.assert_array_equal(a.logits.data, b.logits.data)
        assert not np.array_equal(a.logits.data, evaluation.logits.data)

    def test_encode_segments_needs_expanded_graph(self, make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params(variant="agcn_out")
        words = encode_words(micro_batch, params)
        with pytest.raises(ConfigurationError, match="expanded"):
            encode_segments(words, micro_batch, params)

    def test_decode_step_range(self, make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params()
        H = params.config.hidden
        state = DecoderState(zeros((3, H)), zeros((3, H)))
        with pytest.raises(ConfigurationError, match="out of range"):
            decode_step(3, np.full(3, BOS_ID), state, None, params, visual=zeros((3, 2, 5)))


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


class TestGreedyDecode:
    @pytest.mark.parametrize("arch", ARCHITECTURES, ids=_arch_id)
    def test_hypotheses_are_well_formed(
        self, arch: dict[str, object], make_params: MakeParams, micro_batch: Batch
    ) -> None:
        params = make_params(**arch)
        for hyp in greedy_decode_batch(micro_batch, params):
            assert 1 <= len(hyp.ids) <= params.config.max_words
            assert PAD_ID not in hyp.ids
            assert BOS_ID not in hyp.ids
            assert EOS_ID not in hyp.ids[:-1]
            assert all(0.0 < p <= 1.0 for p in hyp.probs)
            assert hyp.confidence is not None
            assert hyp.confidence <= 0.0

    def test_single_matches_batch(self, make_params: MakeParams, micro_splits: tuple[CorpusSplit, CorpusSplit]) -> None:
        params = make_params(variant="agcn_out")
        records = list(micro_splits[1])
        batched = greedy_decode_batch(records, params)
        for record, hyp in zip(records, batched, strict=True):
            assert greedy_decode(record, params) == list(hyp.ids)

    def test_decoding_leaves_no_graph(self, make_params: MakeParams, micro_batch: Batch) -> None:
        params = make_params()
        greedy_decode_batch(micro_batch, params)
        assert all(node.grad is None for node in params.values())

    def test_masked_logits(self) -> None:
        logits = np.zeros((2, 6))
        masked = masked_logits(logits)
        assert np.all(np.isneginf(masked[:, [PAD_ID, BOS_ID]]))
        assert np.all(logits == 0.0)


class TestConfidenceScore:
    def test_mean_log_probability_through_eos(self) -> None:
        score = confidence_score([5, EOS_ID, 6], [0.5, 0.25, 0.9])
        assert score == pytest.approx((math.log(0.5) + math.log(0.25)) / 2)

    def test_without_eos_uses_every_token(self) -> None:
        assert confidence_score([5, 6], [0.5, 0.5]) == pytest.approx(math.log(0.5))

    def test_zero_probability(self) -> None:
        assert confidence_score([5], [0.0]) == -math.inf

    def test_empty_is_undefined(self) -> None:
        with pytest.raises(UndefinedScoreError):
            confidence_score([], [])
        assert Hypothesis((), ()).confidence is None


def test_init_params_rejects_unbound_vocab() -> None:
    with pytest.raises(ConfigurationError):
        init_params(ModelConfig(), RngStream(0))
