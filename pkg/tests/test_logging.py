"""Tests for the structured logging wrapper and its array summarising."""

from __future__ import annotations

import logging
from collections.abc import Iterator

import numpy as np
import pytest

from gpas_summarizer.autodiff import tensor
from gpas_summarizer.logging import (
    SMALL_ARRAY_LIMIT,
    _summarize_arrays,
    configure_logging,
    get_backend,
    get_logger,
)


class TestSummarizeArrays:
    def test_small_array_logged_verbatim(self) -> None:
        event = _summarize_arrays({"alpha": np.array([0.25, 0.75])})
        assert event["alpha"] == [0.25, 0.75]

    def test_large_array_described(self) -> None:
        event = _summarize_arrays({"weights": np.zeros((4, SMALL_ARRAY_LIMIT))})
        assert event["weights"] == f"ndarray(shape=(4, {SMALL_ARRAY_LIMIT}), dtype=float64)"

    def test_numpy_scalar_unwrapped(self) -> None:
        value = _summarize_arrays({"loss": np.float64(0.5)})["loss"]
        assert value == 0.5
        assert type(value) is float

    def test_tensor_node_described(self) -> None:
        event = _summarize_arrays({"h": tensor(np.zeros((2, 3)))})
        assert event["h"] == "TensorNode(shape=(2, 3))"

    def test_nested_values(self) -> None:
        event = _summarize_arrays({"maps": {"dec": [np.zeros(20)]}})
        assert event["maps"]["dec"][0].startswith("ndarray(")

    def test_input_not_mutated(self) -> None:
        original = {"a": np.zeros(20)}
        _summarize_arrays(original)
        assert isinstance(original["a"], np.ndarray)


class TestLogger:
    def test_backend(self) -> None:
        assert get_backend() in ("structlog", "logging")

    def test_logger_accepts_structured_events(self) -> None:
        log = get_logger("gpas_summarizer.tests", run="micro")
        log.info("train.epoch_done", epoch=0, weights=np.zeros(100))
        log.debug("checkpoint.saved", path="model.ckpt")


class TestConfigureLogging:
    @pytest.fixture(autouse=True)
    def _restore_root(self) -> Iterator[None]:
        root = logging.getLogger("gpas_summarizer")
        level, handlers = root.level, list(root.handlers)
        yield
        root.setLevel(level)
        root.handlers[:] = handlers

    def test_sets_level_from_name(self) -> None:
        configure_logging("info")
        assert logging.getLogger("gpas_summarizer").level == logging.INFO

    def test_handler_attached_once(self) -> None:
        configure_logging("DEBUG")
        configure_logging(logging.WARNING)
        root = logging.getLogger("gpas_summarizer")
        attached = [h for h in root.handlers if type(h).__name__ == "_StderrHandler"]
        assert len(attached) == 1
        assert root.level == logging.WARNING

    def test_events_reach_stdlib(self, caplog: pytest.LogCaptureFixture) -> None:
        configure_logging("INFO")
        with caplog.at_level(logging.INFO, logger="gpas_summarizer"):
            get_logger("gpas_summarizer.tests").info("train.epoch_done", epoch=1, weights=np.zeros(100))
        text = caplog.text
        assert "train.epoch_done" in text
        assert "ndarray(shape=(100,)" in text
