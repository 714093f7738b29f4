"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream_id)``, so two
streams never overlap and a stream's draws don't depend on which thread
consumes it or how the draws are batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# purpose tags occupy the high 16 bits of a stream id
DIFFUSION = 1
DEFAULTS = 2
BUMPS = 3
PORTFOLIO = 4
SCENARIOS = 5
TRAINING = 6


@dataclass(frozen=True)
class RngStream:
    """Identity of one random stream.

    ``counter`` is the number of 128-bit Philox blocks to skip before the
    first draw; it lets a caller resume a stream without replaying it.
    """

    seed: int
    stream_id: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(key=[self.seed & _MASK64, self.stream_id & _MASK64])
        if self.counter:
            bitgen = bitgen.advance(self.counter)
        return np.random.Generator(bitgen)

    def normals(self, size) -> np.ndarray:
        return self.generator().standard_normal(size)


def make_stream(seed: int, stream_id: int) -> RngStream:
    if seed < 0 or stream_id < 0:
        raise ValueError("seed and stream_id must be non-negative")
    return RngStream(int(seed) & _MASK64, int(stream_id) & _MASK64)


def stream_id(purpose: int, index: int = 0, sub: int = 0) -> int:
    """Pack a purpose tag, a block index and a sub-index into 64 bits."""
    if not (0 <= purpose < 1 << 16 and 0 <= sub < 1 << 16 and 0 <= index < 1 << 32):
        raise ValueError("stream id component out of range")
    return (purpose << 48) | (sub << 32) | index


def derive_seed(seed: int, *labels: int) -> int:
    """Child seed for a labelled sub-experiment (e.g. a twin copy)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in labels))
    return int(ss.generate_state(1, np.uint64)[0])
