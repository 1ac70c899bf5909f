"""Tests for serializer module (orjson with stdlib fallback)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from gpas_summarizer import serializer
from gpas_summarizer.exceptions import SerializationError


class TestDumpsLoads:
    """Test serialization and deserialization."""

    def test_round_trip_dict(self) -> None:
        obj = {"id": "v_001", "hypothesis": "a man runs", "confidence": -0.25}
        data = serializer.dumps(obj)
        assert isinstance(data, bytes)
        assert serializer.loads(data) == obj

    def test_pretty_output(self) -> None:
        assert b"\n" in serializer.dumps({"key": "value"}, pretty=True)

    def test_sorted_keys(self) -> None:
        assert serializer.dumps({"b": 1, "a": 2}, sort_keys=True).startswith(b'{"a"')

    def test_numpy_values_become_plain(self) -> None:
        obj = {"visual": np.array([0.5, 1.5]), "count": np.int64(3), "acc": np.float64(0.25)}
        assert serializer.loads(serializer.dumps(obj)) == {"visual": [0.5, 1.5], "count": 3, "acc": 0.25}

    def test_floats_round_trip_exactly(self) -> None:
        values = [0.1, 1 / 3, 2.5e-300, -math.pi]
        assert serializer.loads(serializer.dumps(values)) == values

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad: float) -> None:
        with pytest.raises(SerializationError, match="non-finite"):
            serializer.dumps({"nested": [1.0, {"loss": bad}]})

    def test_non_finite_numpy_rejected(self) -> None:
        with pytest.raises(SerializationError, match="non-finite"):
            serializer.dumps(np.array([1.0, np.nan]))

    def test_dumps_non_serializable_raises_serialization_error(self) -> None:
        with pytest.raises(SerializationError, match="Failed to serialize"):
            serializer.dumps({"bad": {1, 2, 3}})

    def test_loads_invalid_json_raises_serialization_error(self) -> None:
        with pytest.raises(SerializationError, match="Failed to deserialize"):
            serializer.loads(b"not json")


class TestFileIO:
    """Test file read/write helpers."""

    def test_write_and_read_json(self, tmp_path: Path) -> None:
        path = tmp_path / "sub" / "report.json"
        obj = {"B1": 41.2, "token_acc": None}
        n = serializer.write_json(obj, path)
        assert n == path.stat().st_size
        assert serializer.read_json(path) == obj

    def test_read_nonexistent_raises(self, tmp_path: Path) -> None:
        with pytest.raises(SerializationError):
            serializer.read_json(tmp_path / "nonexistent.json")

    def test_jsonl_write_append_iter(self, tmp_path: Path) -> None:
        path = tmp_path / "metrics.jsonl"
        assert serializer.write_jsonl([{"epoch": 0}, {"epoch": 1}], path) == 2
        serializer.append_jsonl({"epoch": 2}, path)
        assert [row["epoch"] for row in serializer.iter_jsonl(path)] == [0, 1, 2]

    def test_iter_jsonl_skips_blank_lines(self, tmp_path: Path) -> None:
        path = tmp_path / "rows.jsonl"
        path.write_bytes(b'{"a": 1}\n\n{"a": 2}\n')
        assert list(serializer.iter_jsonl(path)) == [{"a": 1}, {"a": 2}]

    def test_iter_jsonl_names_bad_line(self, tmp_path: Path) -> None:
        path = tmp_path / "rows.jsonl"
        path.write_bytes(b'{"a": 1}\n{broken\n')
        with pytest.raises(SerializationError, match="line 2"):
            list(serializer.iter_jsonl(path))


class TestBackend:
    def test_backend_is_string(self) -> None:
        assert serializer.get_backend() in ("orjson", "json")
