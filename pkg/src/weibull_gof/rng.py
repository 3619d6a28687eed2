"""Counter-based random substreams.

Every stream is a Philox4x64-10 bit generator keyed by ``(seed, stream_id)``,
so two consumers holding different stream ids never share state and a stream
can be regenerated from its two integers alone.  The compiled core runs the
same Philox construction internally and reproduces these draws bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
# 2**-52: the top 52 bits of a raw draw plus one half step land strictly
# inside (0, 1); with 53 bits the largest value would round up to 1.0
_INV_2_52 = 1.0 / 4503599627370496.0

#: stream-id offset used when a bootstrap replicate has to be redrawn
REDRAW_STRIDE = 1 << 40


def _u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


def derive_seed(seed: int, *path: int) -> int:
    """Derive a child 64-bit seed from ``seed`` and an integer path.

    Uses :class:`numpy.random.SeedSequence` spawn keys, so children for
    distinct paths are statistically independent and adding a new path never
    changes the value for an existing one.
    """
    ss = np.random.SeedSequence(_u64(seed, "seed"), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RngStream:
    """An immutable handle on one reproducible random substream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", _u64(self.seed, "seed"))
        object.__setattr__(self, "stream_id", _u64(self.stream_id, "stream_id"))

    def bit_generator(self) -> np.random.Philox:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Philox(key=key)

    def generator(self) -> np.random.Generator:
        """A fresh :class:`numpy.random.Generator` positioned at the stream start."""
        return np.random.Generator(self.bit_generator())

    def raw(self, n: int) -> np.ndarray:
        return self.bit_generator().random_raw(n)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms on the open interval (0, 1) from the stream start."""
        return raw_to_open_uniform(self.raw(n))

    def child(self, *path: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, self.stream_id, *path), 0)


def raw_to_open_uniform(raw: np.ndarray) -> np.ndarray:
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _INV_2_52
