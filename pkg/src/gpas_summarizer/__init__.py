"""gpas-summarizer: graph-refined sentence summarization for dense video captioning."""

from __future__ import annotations

from gpas_summarizer.adapters import DictAdapter, JSONLinesAdapter, SourceAdapter
from gpas_summarizer.config import (
    PRESETS,
    GraphKind,
    ModelConfig,
    RunConfig,
    TrainConfig,
    Variant,
    get_preset,
    resolve_run_config,
)
from gpas_summarizer.corpus import Batch, CorpusSplit, ProposalRecord, collate, load_corpus, write_corpus
from gpas_summarizer.decoding import decode_split
from gpas_summarizer.logging import get_logger
from gpas_summarizer.metrics import EvalPair, bleu, cider_d, pm_baselines, rouge_l, score_pairs
from gpas_summarizer.model import (
    ModelParams,
    forward_teacher_forced,
    greedy_decode,
    greedy_decode_batch,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from gpas_summarizer.synth import SynthSpec, gen_corpus, write_synth_corpus
from gpas_summarizer.text import Vocabulary, build_vocab, encode_fixed, normalize_text
from gpas_summarizer.training import TrainResult, evaluate, lr_at, train

__version__ = "0.3.0"
__all__ = [
    "PRESETS",
    "Batch",
    "CorpusSplit",
    "DictAdapter",
    "EvalPair",
    "GraphKind",
    "JSONLinesAdapter",
    "ModelConfig",
    "ModelParams",
    "ProposalRecord",
    "RunConfig",
    "SourceAdapter",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "Variant",
    "Vocabulary",
    "bleu",
    "build_vocab",
    "cider_d",
    "collate",
    "decode_split",
    "encode_fixed",
    "evaluate",
    "forward_teacher_forced",
    "gen_corpus",
    "get_logger",
    "get_preset",
    "greedy_decode",
    "greedy_decode_batch",
    "init_params",
    "load_checkpoint",
    "load_corpus",
    "lr_at",
    "normalize_text",
    "pm_baselines",
    "resolve_run_config",
    "rouge_l",
    "save_checkpoint",
    "score_pairs",
    "train",
    "write_corpus",
    "write_synth_corpus",
]
