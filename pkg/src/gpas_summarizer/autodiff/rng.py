"""Seedable, splittable random streams.

Every stochastic site (parameter init, dropout, shuffling, synthetic data)
receives an explicit :class:`RngStream`.  Children are derived by *name*
rather than by draw order, so ``RngStream(0).split("dropout/epoch-3")`` is the
same stream no matter what else ran first; that is what makes resumed
training runs bit-identical.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from gpas_summarizer.exceptions import ConfigurationError

#: Bit generators accepted for ``algorithm``.
ALGORITHMS: tuple[str, ...] = ("PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937")

_U64 = (1 << 64) - 1


def _key_to_int(key: str) -> int:
    return zlib.crc32(key.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    """A named deterministic generator.

    Attributes:
        seed: 64-bit seed (negative values are taken modulo 2**64).
        algorithm: numpy bit-generator name, one of :data:`ALGORITHMS`.
        path: Names of the splits leading from the root stream to this one.
    """

    seed: int
    algorithm: str = "PCG64"
    path: tuple[str, ...] = ()
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            msg = f"Unknown RNG algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            raise ConfigurationError(msg)
        seq = np.random.SeedSequence(
            entropy=self.seed & _U64,
            spawn_key=tuple(_key_to_int(k) for k in self.path),
        )
        bit_generator = getattr(np.random, self.algorithm)(seq)
        object.__setattr__(self, "_generator", np.random.Generator(bit_generator))

    def split(self, key: str) -> RngStream:
        """Return the child stream named ``key`` (fresh state, independent of draws so far)."""
        return RngStream(self.seed, self.algorithm, (*self.path, key))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def uniform(self, low: float, high: float, shape: tuple[int, ...]) -> np.ndarray:
        return self._generator.uniform(low, high, size=shape)

    def normal(self, scale: float, shape: tuple[int, ...]) -> np.ndarray:
        return self._generator.normal(0.0, scale, size=shape)

    def bernoulli(self, p: float, shape: tuple[int, ...]) -> np.ndarray:
        """0/1 float64 mask with ``P(1) = p``."""
        return (self._generator.random(size=shape) < p).astype(np.float64)

    def integers(self, low: int, high: int, size: int | None = None) -> np.ndarray | int:
        return self._generator.integers(low, high, size=size)

    def random(self) -> float:
        return float(self._generator.random())

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)
