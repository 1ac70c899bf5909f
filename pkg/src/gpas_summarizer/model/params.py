"""Learnable parameter groups and their initialisation.

Names are dotted paths: ``<layer>.<block>.<tensor>`` for the recurrent layers
(``enc_word``, ``enc_seg``, ``dec``), ``gcn.<edge>.<tensor>`` for the graph
refinement of each edge type, plus ``embed``, ``out.*`` and ``disc.W``.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterator, Mapping

import numpy as np

from gpas_summarizer.autodiff import RngStream, TensorNode
from gpas_summarizer.config import GraphKind, ModelConfig, Variant
from gpas_summarizer.exceptions import CheckpointError, ConfigurationError
from gpas_summarizer.text import RESERVED

ENC_WORD = "enc_word"
ENC_SEG = "enc_seg"
DEC = "dec"

WORD_DEC = "word_dec"
WORD_SEG = "word_seg"
SEG_DEC = "seg_dec"


def recurrent_layers(config: ModelConfig) -> tuple[str, ...]:
    if config.graph is GraphKind.EXPANDED:
        return (ENC_WORD, ENC_SEG, DEC)
    return (ENC_WORD, DEC)


def edge_types(config: ModelConfig) -> tuple[str, ...]:
    """Graph edge types carrying refinement parameters (none without refinement)."""
    if not config.refines:
        return ()
    if config.graph is GraphKind.EXPANDED:
        return (WORD_SEG, SEG_DEC)
    return (WORD_DEC,)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name and shape for ``config``, in canonical order.

    Raises:
        ConfigurationError: If ``config.vocab_size`` leaves no content token.
    """
    if config.vocab_size <= len(RESERVED):
        msg = f"vocab_size must exceed the {len(RESERVED)} reserved tokens, got {config.vocab_size}"
        raise ConfigurationError(msg)
    H, E, D, V, G = config.hidden, config.embed, config.visual_dim, config.vocab_size, config.gcn_width
    shapes: dict[str, tuple[int, ...]] = {"embed": (V, E)}
    fuse_in = D + E if config.use_tvj else E
    for layer in recurrent_layers(config):
        if config.use_tvj:
            shapes[f"{layer}.att.W_v"] = (D, H)
            shapes[f"{layer}.att.W_h"] = (H, H)
            shapes[f"{layer}.att.b"] = (H,)
            shapes[f"{layer}.att.w"] = (H, 1)
        shapes[f"{layer}.tvj.W"] = (fuse_in, H)
        shapes[f"{layer}.tvj.b"] = (H,)
        shapes[f"{layer}.lstm.W"] = (2 * H, 4 * H)
        shapes[f"{layer}.lstm.b"] = (4 * H,)
    if config.graph is GraphKind.EXPANDED:
        shapes[f"{ENC_SEG}.proj"] = (H, E)
    for edge in edge_types(config):
        shapes[f"gcn.{edge}.W"] = (H, H)
        shapes[f"gcn.{edge}.A"] = (H, G)
        shapes[f"gcn.{edge}.B"] = (H, G)
        shapes[f"gcn.{edge}.b1"] = (G,)
        shapes[f"gcn.{edge}.w2"] = (G, 1)
    shapes["out.W"] = (H, V)
    shapes["out.b"] = (V,)
    shapes["disc.W"] = (H, V)
    return shapes


class ModelParams(Mapping[str, TensorNode]):
    """Named leaf nodes of one model, bound to the config that shaped them."""

    def __init__(self, config: ModelConfig, nodes: Mapping[str, TensorNode]) -> None:
        expected = param_shapes(config)
        missing = sorted(set(expected) - set(nodes))
        extra = sorted(set(nodes) - set(expected))
        if missing or extra:
            msg = f"Parameter set does not match the configuration: missing {missing}, unexpected {extra}"
            raise CheckpointError(msg)
        for name, shape in expected.items():
            if nodes[name].shape != shape:
                msg = f"Parameter {name!r} has shape {nodes[name].shape}, expected {shape}"
                raise CheckpointError(msg)
        self.config = config
        self._nodes = {name: nodes[name] for name in expected}

    def __getitem__(self, name: str) -> TensorNode:
        return self._nodes[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: node.data for name, node in self._nodes.items()}

    def snapshot(self) -> ModelParams:
        """Deep copy with gradients cleared; safe to share with concurrent decoders."""
        return ModelParams(
            self.config,
            {
                name: TensorNode(node.data.copy(), requires_grad=node.requires_grad, name=name)
                for name, node in self.items()
            },
        )

    def without_refinement(self) -> ModelParams:
        """The PaS-basic view of these parameters: same nodes, graph refinement skipped.

        Gradients flowing through the view reach the shared nodes.
        """
        config = dataclasses.replace(self.config, variant=Variant.NONE, graph=GraphKind.BASIC)
        return ModelParams(config, {name: self._nodes[name] for name in param_shapes(config)})

    def zero_grad(self) -> None:
        for node in self._nodes.values():
            node.zero_grad()

    @property
    def num_scalars(self) -> int:
        return sum(node.size for node in self._nodes.values())

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: Mapping[str, np.ndarray]) -> ModelParams:
        return cls(
            config,
            {
                name: TensorNode(np.asarray(value, dtype=np.float64).copy(), requires_grad=True, name=name)
                for name, value in arrays.items()
            },
        )


def init_params(config: ModelConfig, rng: RngStream) -> ModelParams:
    """Uniform(−init_scale, init_scale) initialisation, LSTM forget-gate bias 1.

    Each tensor draws from its own stream ``rng.split(name)``, so adding a
    parameter group never changes the values of the others.
    """
    H = config.hidden
    arrays: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        values = rng.split(name).uniform(-config.init_scale, config.init_scale, shape)
        if name.endswith(".lstm.b"):
            values[H : 2 * H] = 1.0
        arrays[name] = values
    return ModelParams.from_arrays(config, arrays)
