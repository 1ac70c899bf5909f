"""Tests for named deterministic random streams."""

from __future__ import annotations

import numpy as np
import pytest

from gpas_summarizer.autodiff import ALGORITHMS, RngStream
from gpas_summarizer.exceptions import ConfigurationError


class TestRngStream:
    def test_same_path_same_draws(self) -> None:
        a = RngStream(42).split("init").split("embed")
        b = RngStream(42).split("init").split("embed")
        np.testing.assert_array_equal(a.uniform(-1.0, 1.0, (3, 4)), b.uniform(-1.0, 1.0, (3, 4)))

    def test_different_keys_differ(self) -> None:
        root = RngStream(42)
        assert not np.array_equal(root.split("a").normal(1.0, (8,)), root.split("b").normal(1.0, (8,)))

    def test_different_seeds_differ(self) -> None:
        assert not np.array_equal(RngStream(1).normal(1.0, (8,)), RngStream(2).normal(1.0, (8,)))

    def test_split_ignores_parent_draws(self) -> None:
        used = RngStream(5)
        used.normal(1.0, (100,))
        fresh = RngStream(5)
        np.testing.assert_array_equal(used.split("x").random(), fresh.split("x").random())

    def test_path_recorded(self) -> None:
        assert RngStream(0).split("dropout").split("epoch-1").path == ("dropout", "epoch-1")

    @pytest.mark.parametrize("algorithm", ALGORITHMS)
    def test_every_algorithm_is_reproducible(self, algorithm: str) -> None:
        a = RngStream(9, algorithm).split("k").integers(0, 1000, size=5)
        b = RngStream(9, algorithm).split("k").integers(0, 1000, size=5)
        np.testing.assert_array_equal(a, b)

    def test_unknown_algorithm(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown RNG algorithm"):
            RngStream(0, "xorshift")

    def test_negative_seed_accepted(self) -> None:
        RngStream(-1).random()

    def test_bernoulli_is_zero_one(self) -> None:
        mask = RngStream(0).bernoulli(0.3, (1000,))
        assert set(np.unique(mask)) <= {0.0, 1.0}
        assert 0.2 < mask.mean() < 0.4

    def test_permutation(self) -> None:
        perm = RngStream(0).permutation(10)
        assert sorted(perm.tolist()) == list(range(10))
