"""Tests for run configuration: presets, YAML files, overrides, validation."""

from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from gpas_summarizer.config import (
    PRESETS,
    GraphKind,
    ModelConfig,
    RunConfig,
    TrainConfig,
    Variant,
    from_text_fields,
    get_preset,
    load_config_file,
    resolve_run_config,
    to_text_fields,
)
from gpas_summarizer.exceptions import ConfigurationError


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_preset_is_valid(self, name: str) -> None:
        run = get_preset(name)
        assert run.preset == name
        assert run.model.variant is Variant.NONE

    def test_paper_sizes(self) -> None:
        model = get_preset("paper").model
        assert (model.hidden, model.embed, model.visual_dim) == (512, 512, 1024)
        assert (model.segments, model.max_words, model.keep_prob) == (20, 25, 0.2)

    def test_micro_has_no_dropout(self) -> None:
        assert get_preset("micro").model.keep_prob == 1.0

    def test_desk_recipe(self) -> None:
        run = get_preset("desk")
        assert (run.model.hidden, run.model.keep_prob) == (64, 1.0)
        assert (run.train.lr0, run.train.batch_size, run.train.epochs) == (4e-3, 8, 30)

    def test_unknown_preset(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown preset"):
            get_preset("huge")

    def test_train_defaults(self) -> None:
        train = TrainConfig()
        assert (train.lr0, train.lr_decay, train.decay_every, train.lambda_d) == (3e-4, 1.25, 3, 0.1)


class TestModelConfig:
    def test_enum_coercion_from_strings(self) -> None:
        cfg = ModelConfig(variant="agcn_in", graph="expanded")  # type: ignore[arg-type]
        assert cfg.variant is Variant.AGCN_IN
        assert cfg.graph is GraphKind.EXPANDED

    def test_expanded_requires_refinement(self) -> None:
        with pytest.raises(ConfigurationError, match="expanded"):
            ModelConfig(variant=Variant.NONE, graph=GraphKind.EXPANDED)

    def test_unknown_variant(self) -> None:
        with pytest.raises(ConfigurationError, match="variant must be one of"):
            ModelConfig(variant="gcn")  # type: ignore[arg-type]

    @pytest.mark.parametrize(
        ("field", "value"),
        [("rounds", 0), ("hidden", 0), ("keep_prob", 0.0), ("keep_prob", 1.5), ("vocab_size", -1)],
    )
    def test_invalid_values(self, field: str, value: float) -> None:
        with pytest.raises(ConfigurationError):
            ModelConfig(**{field: value})

    @pytest.mark.parametrize(
        ("variant", "graph", "use_tvj", "label"),
        [
            ("none", "basic", True, "pas-basic"),
            ("none", "basic", False, "pas-basic-wo-tvj"),
            ("agcn_out", "basic", True, "agcn_out-basic"),
            ("agcn_in", "expanded", True, "agcn_in-expanded"),
        ],
    )
    def test_labels(self, variant: str, graph: str, use_tvj: bool, label: str) -> None:
        assert ModelConfig(variant=variant, graph=graph, use_tvj=use_tvj).label() == label  # type: ignore[arg-type]

    def test_derived_sizes(self) -> None:
        cfg = ModelConfig(hidden=10, segments=3, max_words=4)
        assert cfg.word_nodes == 12
        assert cfg.gcn_width == 5
        assert ModelConfig(gcn_hidden=7).gcn_width == 7

    def test_text_fields_round_trip(self) -> None:
        cfg = ModelConfig(variant=Variant.AGCN_OUT, rounds=2, keep_prob=0.75, raw_recurrence=True)
        assert from_text_fields(ModelConfig, to_text_fields(cfg)) == cfg

    def test_text_fields_reject_unknown(self) -> None:
        fields = {**to_text_fields(ModelConfig()), "colour": "red"}
        with pytest.raises(ConfigurationError, match="unknown"):
            from_text_fields(ModelConfig, fields)


class TestTrainConfig:
    @pytest.mark.parametrize(
        ("field", "value"),
        [("lr0", 0.0), ("lambda_d", -0.1), ("batch_size", 0), ("decay_every", 0), ("clip_norm", -1.0)],
    )
    def test_invalid_values(self, field: str, value: float) -> None:
        with pytest.raises(ConfigurationError):
            TrainConfig(**{field: value})


class TestResolve:
    def test_precedence_preset_file_overrides(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"hidden": 16, "epochs": 4, "variant": "agcn_out"}), encoding="utf-8")
        run = resolve_run_config(preset="desk", path=path, overrides={"epochs": 7, "seed": None})
        assert run.model.hidden == 16
        assert run.model.variant is Variant.AGCN_OUT
        assert run.train.epochs == 7
        assert run.train.seed == 0
        assert run.model.embed == get_preset("desk").model.embed

    def test_file_may_name_preset(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("preset: micro\n", encoding="utf-8")
        assert resolve_run_config(path=path).preset == "micro"

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown run-config keys"):
            resolve_run_config(overrides={"hiden": 3})

    def test_invalid_value_is_configuration_error(self) -> None:
        with pytest.raises(ConfigurationError):
            resolve_run_config(overrides={"variant": "none", "graph": "expanded"})

    def test_nested_file_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("model:\n  hidden: 3\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="flat"):
            load_config_file(path)

    def test_non_mapping_file_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="mapping"):
            load_config_file(path)

    def test_broken_yaml(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("hidden: [1,\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="Failed to read"):
            load_config_file(path)

    def test_replace_and_dict_round_trip(self) -> None:
        run = get_preset("micro").replace(variant="agcn_in", graph="expanded", rounds=2, lambda_d=0.0)
        again = RunConfig.from_dict(run.to_dict())
        assert again == run
        assert run.to_dict()["variant"] == "agcn_in"
