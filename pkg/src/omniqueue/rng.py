"""Counter-based random streams keyed by (seed, run id, purpose, index).

Every variate is a pure function of its key, so a run can re-read any part
of its randomness after extending its window into the past.  Values are
produced in blocks by numpy's Philox generator, keyed by a BLAKE2 hash of
``(seed, run_id, purpose, block)``.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

BLOCK = 256
_TWO_M53 = 2.0 ** -53

DEFAULT_SEED = 20160301


@dataclass(frozen=True)
class StreamKey:
    run_id: int
    purpose: str
    index: int


def _block_key(seed: int, run_id: int, purpose: str, block: int) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<QqQ", seed & (2**64 - 1), run_id, block))
    h.update(purpose.encode())
    return int.from_bytes(h.digest(), "little")


def _make_block(seed: int, run_id: int, purpose: str, block: int) -> list[float]:
    bits = np.random.Philox(key=_block_key(seed, run_id, purpose, block))
    raw = bits.random_raw(BLOCK) >> np.uint64(11)
    # midpoint of each 2^-53 cell, so values lie strictly inside (0, 1)
    return ((raw.astype(np.float64) + 0.5) * _TWO_M53).tolist()


def uniform(key: StreamKey, seed: int = DEFAULT_SEED) -> float:
    """The uniform variate in (0, 1) identified by ``key``."""
    if key.index < 0:
        raise ValueError("stream index must be non-negative")
    b, j = divmod(key.index, BLOCK)
    return _make_block(seed, key.run_id, key.purpose, b)[j]


def inverse_exponential(u: float, rate: float) -> float:
    """Inverse-transform map from a uniform ``u`` to an Exp(rate) variate."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate!r}")
    return -math.log(u) / rate


def exponential(key: StreamKey, rate: float, seed: int = DEFAULT_SEED) -> float:
    return inverse_exponential(uniform(key, seed), rate)


def geometric_queue_length(key: StreamKey, rho: float, seed: int = DEFAULT_SEED) -> int:
    """Draw N with P(N = n) = (1 - rho) rho^n."""
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho!r}")
    return _geometric(uniform(key, seed), rho)


def _geometric(u: float, rho: float) -> int:
    if rho == 0:
        return 0
    return int(math.floor(math.log(u) / math.log(rho)))


class Stream:
    """Cached sequential view of one (seed, run_id, purpose) stream.

    ``stream[i]`` equals ``uniform(StreamKey(run_id, purpose, i), seed)``;
    blocks are generated on first use and kept.
    """

    __slots__ = ("seed", "run_id", "purpose", "_blocks")

    def __init__(self, seed: int, run_id: int, purpose: str):
        self.seed = seed
        self.run_id = run_id
        self.purpose = purpose
        self._blocks: list[list[float]] = []

    def __getitem__(self, i: int) -> float:
        b, j = divmod(i, BLOCK)
        blocks = self._blocks
        while len(blocks) <= b:
            blocks.append(_make_block(self.seed, self.run_id, self.purpose, len(blocks)))
        return blocks[b][j]

    def exponential(self, i: int, rate: float) -> float:
        return -math.log(self[i]) / rate

    def geometric(self, i: int, rho: float) -> int:
        return _geometric(self[i], rho)
