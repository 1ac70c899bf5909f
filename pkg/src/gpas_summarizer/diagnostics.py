"""Gradient checks of the full summarizer loss on a tiny synthetic batch."""

from __future__ import annotations

from collections.abc import Mapping

from gpas_summarizer.autodiff import GradCheckReport, RngStream, TensorNode, grad_check
from gpas_summarizer.config import GraphKind, RunConfig, Variant
from gpas_summarizer.corpus import collate
from gpas_summarizer.logging import get_logger
from gpas_summarizer.model import forward_teacher_forced, init_params
from gpas_summarizer.synth import SynthSpec, gen_record
from gpas_summarizer.text import RESERVED
from gpas_summarizer.training import total_loss

_log = get_logger(__name__)

#: Every (variant, graph) pair the model supports.
ARCHITECTURES: tuple[tuple[Variant, GraphKind], ...] = (
    (Variant.NONE, GraphKind.BASIC),
    (Variant.AGCN_OUT, GraphKind.BASIC),
    (Variant.AGCN_OUT, GraphKind.EXPANDED),
    (Variant.AGCN_IN, GraphKind.BASIC),
    (Variant.AGCN_IN, GraphKind.EXPANDED),
)


def model_grad_check(
    run: RunConfig,
    *,
    records: int = 2,
    eps: float = 1e-5,
    tol: float = 1e-4,
    max_entries: int | None = None,
) -> GradCheckReport:
    """Compare backprop of ``total_loss`` against central differences.

    The batch is ``records`` synthetic proposals shaped like ``run.model``;
    dropout is off, so the loss is a deterministic function of the parameters.
    """
    cfg = run.model
    content = cfg.vocab_size - len(RESERVED)
    spec = SynthSpec(
        vocab_size=cfg.vocab_size,
        segments=cfg.segments,
        max_words=cfg.max_words,
        visual_dim=cfg.visual_dim,
        n_concepts=max(1, min(content, 4)),
        noise_rate=0.3,
        seed=run.train.seed,
    )
    root = RngStream(run.train.seed)
    batch = collate(
        [gen_record(spec, root.split("gradcheck").split(str(i)), f"gradcheck-{i}") for i in range(records)],
        mask_padding=run.train.mask_padding,
    )
    params = init_params(cfg, root.split("init"))

    # grad_check perturbs the nodes of `params` in place.
    def loss(_: Mapping[str, TensorNode]) -> TensorNode:
        return total_loss(forward_teacher_forced(batch, params), batch, params, run.train.lambda_d).total

    report = grad_check(loss, params, eps=eps, tol=tol, max_entries=max_entries)
    _log.info("gradcheck.model_done", label=cfg.label(), max_rel_error=report.max_rel_error, passed=report.passed)
    return report
