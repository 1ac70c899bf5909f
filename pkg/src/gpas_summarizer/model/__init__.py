"""The graph-refined summarization network."""

from __future__ import annotations

from gpas_summarizer.model.checkpoint import load_checkpoint, read_blocks, save_checkpoint, write_blocks
from gpas_summarizer.model.graph import GraphSpec
from gpas_summarizer.model.layers import agcn_refine, agcn_weights, lstm_step, tvj_fuse, visual_attention
from gpas_summarizer.model.network import (
    DecoderState,
    ForwardResult,
    Hypothesis,
    LayerState,
    confidence_score,
    decode_step,
    encode_segments,
    encode_words,
    forward_teacher_forced,
    greedy_decode,
    greedy_decode_batch,
)
from gpas_summarizer.model.params import ModelParams, edge_types, init_params, param_shapes

__all__ = [
    "DecoderState",
    "ForwardResult",
    "GraphSpec",
    "Hypothesis",
    "LayerState",
    "ModelParams",
    "agcn_refine",
    "agcn_weights",
    "confidence_score",
    "decode_step",
    "edge_types",
    "encode_segments",
    "encode_words",
    "forward_teacher_forced",
    "greedy_decode",
    "greedy_decode_batch",
    "init_params",
    "load_checkpoint",
    "lstm_step",
    "param_shapes",
    "read_blocks",
    "save_checkpoint",
    "tvj_fuse",
    "visual_attention",
    "write_blocks",
]
