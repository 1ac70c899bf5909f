"""Model, training, and run configuration with named presets.

Configurations are frozen dataclasses validated on construction.  A run
config is resolved in three layers (preset, then an optional flat YAML file,
then explicit overrides from CLI flags) and every field of
:class:`ModelConfig` and :class:`TrainConfig` is addressable by its name::

    # run.yaml
    variant: agcn_in
    graph: expanded
    rounds: 2
    lambda_d: 0.1
    epochs: 20
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import yaml

from gpas_summarizer.exceptions import ConfigurationError


class Variant(Enum):
    """How graph refinement couples to the LSTM cells.

    Attributes:
        NONE: No refinement (the basic summarization pipeline).
        AGCN_OUT: Refine hidden states after the cell.
        AGCN_IN: Refine cell states inside the cell; ``ĥ = o ⊙ ĉ``.
    """

    NONE = "none"
    AGCN_OUT = "agcn_out"
    AGCN_IN = "agcn_in"


class GraphKind(Enum):
    """Node topology.

    Attributes:
        BASIC: Encoder-word nodes feed every decoder node directly.
        EXPANDED: Words feed their segment node; segment nodes feed the decoder.
    """

    BASIC = "basic"
    EXPANDED = "expanded"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture switches and sizes.

    Attributes:
        variant: Refinement coupling (:class:`Variant`).
        graph: Node topology (:class:`GraphKind`).
        rounds: Number of refinement sweeps (≥ 1).
        hidden: LSTM hidden size H.
        embed: Word-embedding size E.
        visual_dim: Visual feature size D_v.
        segments: Segments per proposal L_m.
        max_words: Words per sentence L_k.
        vocab_size: Vocabulary size V (0 until bound to a vocabulary).
        keep_prob: Dropout keep probability (1.0 disables dropout).
        use_tvj: Fuse attended visual context into every word input.
        gcn_hidden: Width of the refinement attention perceptron (0 → H // 2).
        raw_recurrence: For ``agcn_out``, carry the raw rather than the
            refined decoder hidden state to the next step.
        tanh_refined_cell: For ``agcn_in``, use ``ĥ = o ⊙ tanh(ĉ)`` instead of
            ``ĥ = o ⊙ ĉ``.
        init_scale: Half-width of the uniform parameter initialisation.
    """

    variant: Variant = Variant.NONE
    graph: GraphKind = GraphKind.BASIC
    rounds: int = 1
    hidden: int = 64
    embed: int = 32
    visual_dim: int = 16
    segments: int = 5
    max_words: int = 8
    vocab_size: int = 0
    keep_prob: float = 0.9
    use_tvj: bool = True
    gcn_hidden: int = 0
    raw_recurrence: bool = False
    tanh_refined_cell: bool = False
    init_scale: float = 0.08

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", _coerce_enum(Variant, self.variant, "variant"))
        object.__setattr__(self, "graph", _coerce_enum(GraphKind, self.graph, "graph"))
        if self.graph is GraphKind.EXPANDED and self.variant is Variant.NONE:
            msg = "graph=expanded requires variant agcn_out or agcn_in"
            raise ConfigurationError(msg)
        if self.rounds < 1:
            msg = f"rounds must be at least 1, got {self.rounds}"
            raise ConfigurationError(msg)
        for name in ("hidden", "embed", "visual_dim", "segments", "max_words"):
            if getattr(self, name) < 1:
                msg = f"{name} must be positive, got {getattr(self, name)}"
                raise ConfigurationError(msg)
        if self.vocab_size < 0:
            msg = f"vocab_size must be non-negative, got {self.vocab_size}"
            raise ConfigurationError(msg)
        if not 0.0 < self.keep_prob <= 1.0:
            msg = f"keep_prob must lie in (0, 1], got {self.keep_prob}"
            raise ConfigurationError(msg)
        if self.gcn_hidden < 0 or self.init_scale <= 0.0:
            msg = "gcn_hidden must be non-negative and init_scale positive"
            raise ConfigurationError(msg)

    @property
    def gcn_width(self) -> int:
        return self.gcn_hidden or max(1, self.hidden // 2)

    @property
    def word_nodes(self) -> int:
        """Encoder input words, L_m × L_k."""
        return self.segments * self.max_words

    @property
    def refines(self) -> bool:
        return self.variant is not Variant.NONE

    def with_vocab(self, vocab_size: int) -> ModelConfig:
        return dataclasses.replace(self, vocab_size=vocab_size)

    def label(self) -> str:
        """Short name used in ablation tables, e.g. ``agcn_in-expanded``."""
        if self.variant is Variant.NONE:
            return "pas-basic" if self.use_tvj else "pas-basic-wo-tvj"
        return f"{self.variant.value}-{self.graph.value}"


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    Attributes:
        lr0: Initial learning rate.
        lr_decay: Divisor applied every ``decay_every`` epochs.
        decay_every: Epochs between decays.
        batch_size: Records per minibatch.
        epochs: Number of epochs.
        lambda_d: Weight of the discriminative loss.
        seed: Root seed of every random stream in the run.
        mask_padding: Exclude positions after ``<eos>`` from the loss.
        clip_norm: Global gradient-norm clip (0 disables clipping).
        beta1: Adam first-moment decay.
        beta2: Adam second-moment decay.
        adam_eps: Adam denominator epsilon.
    """

    lr0: float = 3e-4
    lr_decay: float = 1.25
    decay_every: int = 3
    batch_size: int = 8
    epochs: int = 30
    lambda_d: float = 0.1
    seed: int = 0
    mask_padding: bool = True
    clip_norm: float = 5.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr0 <= 0.0:
            msg = f"lr0 must be positive, got {self.lr0}"
            raise ConfigurationError(msg)
        if self.lambda_d < 0.0:
            msg = f"lambda_d must be non-negative, got {self.lambda_d}"
            raise ConfigurationError(msg)
        if self.lr_decay <= 0.0 or self.decay_every < 1:
            msg = "lr_decay must be positive and decay_every at least 1"
            raise ConfigurationError(msg)
        if self.batch_size < 1 or self.epochs < 0:
            msg = f"batch_size must be ≥ 1 and epochs ≥ 0, got {self.batch_size} and {self.epochs}"
            raise ConfigurationError(msg)
        if self.clip_norm < 0.0:
            msg = f"clip_norm must be non-negative, got {self.clip_norm}"
            raise ConfigurationError(msg)


@dataclass(frozen=True)
class RunConfig:
    """A resolved model + training configuration."""

    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    preset: str = "desk"

    def to_dict(self) -> dict[str, Any]:
        """Flat key/value view, enums as their string values."""
        out: dict[str, Any] = {"preset": self.preset}
        for cfg in (self.model, self.train):
            for f in dataclasses.fields(cfg):
                value = getattr(cfg, f.name)
                out[f.name] = value.value if isinstance(value, Enum) else value
        return out

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> RunConfig:
        """Build from a flat mapping; keys not given fall back to the named preset."""
        values = dict(values)
        preset = str(values.pop("preset", "desk"))
        return resolve_run_config(preset=preset, overrides=values)

    def replace(self, **overrides: Any) -> RunConfig:
        return resolve_run_config(base=self, overrides=overrides)


_MODEL_FIELDS = frozenset(f.name for f in dataclasses.fields(ModelConfig))
_TRAIN_FIELDS = frozenset(f.name for f in dataclasses.fields(TrainConfig))


def _coerce_enum(enum_cls: type[Enum], value: Any, name: str) -> Any:
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        allowed = [m.value for m in enum_cls]  # type: ignore[attr-defined]
        msg = f"{name} must be one of {allowed}, got {value!r}"
        raise ConfigurationError(msg) from None


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESETS: dict[str, RunConfig] = {
    # Gradient-check scale.
    "micro": RunConfig(
        model=ModelConfig(hidden=8, embed=6, visual_dim=5, segments=2, max_words=3, vocab_size=12, keep_prob=1.0),
        train=TrainConfig(batch_size=2, epochs=2),
        preset="micro",
    ),
    # Synthetic-corpus training on a laptop CPU.
    "desk": RunConfig(
        model=ModelConfig(hidden=64, embed=32, visual_dim=16, segments=5, max_words=8, keep_prob=1.0),
        train=TrainConfig(lr0=4e-3, batch_size=8, epochs=30),
        preset="desk",
    ),
    # Published sizes; shape fidelity only, the data behind it is not shipped.
    "paper": RunConfig(
        model=ModelConfig(hidden=512, embed=512, visual_dim=1024, segments=20, max_words=25, keep_prob=0.2),
        train=TrainConfig(lr0=3e-4, batch_size=32, epochs=30),
        preset="paper",
    ),
}


def to_text_fields(cfg: ModelConfig | TrainConfig) -> dict[str, str]:
    """``field → text`` pairs for ``key=value`` headers."""
    out: dict[str, str] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = value.value if isinstance(value, Enum) else repr(value)
    return out


def from_text_fields(cls: type[ModelConfig] | type[TrainConfig], values: dict[str, str]) -> Any:
    """Inverse of :func:`to_text_fields`; each value is parsed by its field's default type.

    Raises:
        ConfigurationError: On unknown, missing, or unparsable fields.
    """
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names)
    missing = sorted(names - set(values))
    if unknown or missing:
        msg = f"{cls.__name__} fields do not match: unknown {unknown}, missing {missing}"
        raise ConfigurationError(msg)
    parsed: dict[str, Any] = {}
    for name, text in values.items():
        kind = type(getattr(defaults, name))
        try:
            if kind is bool:
                if text not in ("True", "False"):
                    raise ValueError(text)
                parsed[name] = text == "True"
            else:
                parsed[name] = kind(text)
        except ValueError as exc:
            msg = f"Cannot parse {cls.__name__}.{name} from {text!r}"
            raise ConfigurationError(msg) from exc
    return cls(**parsed)


def get_preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]
    except KeyError:
        msg = f"Unknown preset {name!r}; available: {sorted(PRESETS)}"
        raise ConfigurationError(msg) from None


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat YAML key/value run-config file.

    Raises:
        ConfigurationError: If the file is unreadable, not a mapping, or nested.
    """
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except (yaml.YAMLError, OSError) as exc:
        msg = f"Failed to read run config {p}: {exc}"
        raise ConfigurationError(msg) from exc
    if not isinstance(data, dict):
        msg = f"Run config {p} must be a key/value mapping, got {type(data).__name__}"
        raise ConfigurationError(msg)
    nested = [k for k, v in data.items() if isinstance(v, (dict, list))]
    if nested:
        msg = f"Run config {p} must be flat; nested values under {nested}"
        raise ConfigurationError(msg)
    return {str(k): v for k, v in data.items()}


def resolve_run_config(
    *,
    preset: str = "desk",
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
    base: RunConfig | None = None,
) -> RunConfig:
    """Resolve preset → config file → overrides into a validated :class:`RunConfig`.

    Args:
        preset: Preset name used when ``base`` is not given.
        path: Optional flat YAML run-config file.
        overrides: Explicit values (``None`` values are ignored).
        base: Start from this config instead of a preset.

    Raises:
        ConfigurationError: On unknown keys or invalid values.
    """
    start = base if base is not None else get_preset(preset)
    values: dict[str, Any] = {}
    if path is not None:
        values.update(load_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    preset_name = str(values.pop("preset", start.preset))

    unknown = sorted(set(values) - _MODEL_FIELDS - _TRAIN_FIELDS)
    if unknown:
        msg = f"Unknown run-config keys {unknown}"
        raise ConfigurationError(msg)
    try:
        model = dataclasses.replace(start.model, **{k: v for k, v in values.items() if k in _MODEL_FIELDS})
        train = dataclasses.replace(start.train, **{k: v for k, v in values.items() if k in _TRAIN_FIELDS})
    except TypeError as exc:
        msg = f"Invalid run-config value: {exc}"
        raise ConfigurationError(msg) from exc
    return RunConfig(model=model, train=train, preset=preset_name)
