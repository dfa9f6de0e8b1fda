"""Bloom filters, fence pointers, and the per-level FPR schedule."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .config import LN2_SQ, ConfigError, EngineConfig, Monkey, Uniform, fpr_for_bits

_MASK64 = (1 << 64) - 1
_SEED1 = 0x8445D61A4E774912
_SEED2 = 0x61C8864680B583EB
_MULT1 = 0x9E3779B97F4A7C15
_MULT2 = 0xC2B2AE3D27D4EB4F
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(h: int) -> int:
    h = ((h ^ (h >> 30)) * _MIX1) & _MASK64
    h = ((h ^ (h >> 27)) * _MIX2) & _MASK64
    return h ^ (h >> 31)


def hash_pair(key: bytes) -> tuple[int, int]:
    """Two independent 64-bit hashes of a key (word-folded splitmix)."""
    rem = len(key) % 8
    if rem:
        key = key + b"\x00" * (8 - rem)
    h1, h2 = _SEED1, _SEED2
    for off in range(0, len(key), 8):
        w = int.from_bytes(key[off:off + 8], "little")
        h1 = _mix64(((h1 ^ w) * _MULT1) & _MASK64)
        h2 = _mix64((((h2 + w) & _MASK64) * _MULT2) & _MASK64)
    return h1, h2


def _mix64_vec(h: np.ndarray) -> np.ndarray:
    h = (h ^ (h >> np.uint64(30))) * np.uint64(_MIX1)
    h = (h ^ (h >> np.uint64(27))) * np.uint64(_MIX2)
    return h ^ (h >> np.uint64(31))


def hash_pairs(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hash_pair` over an array of fixed-width byte keys."""
    n = len(keys)
    kw = keys.dtype.itemsize
    raw = np.ascontiguousarray(keys).view(np.uint8).reshape(n, kw)
    pad = (-kw) % 8
    if pad:
        raw = np.concatenate([raw, np.zeros((n, pad), np.uint8)], axis=1)
    words = np.ascontiguousarray(raw).view("<u8")
    h1 = np.full(n, _SEED1, dtype=np.uint64)
    h2 = np.full(n, _SEED2, dtype=np.uint64)
    for col in range(words.shape[1]):
        w = words[:, col]
        h1 = _mix64_vec((h1 ^ w) * np.uint64(_MULT1))
        h2 = _mix64_vec((h2 + w) * np.uint64(_MULT2))
    return h1, h2


def bloom_params(n: int, target_fpr: float) -> tuple[int, int]:
    """Bit count and hash count for ``n`` keys at the target FPR."""
    if not 0.0 < target_fpr < 1.0:
        raise ConfigError("target_fpr must be in (0, 1)")
    if n < 1:
        raise ConfigError("need at least one key")
    nbits = max(1, math.ceil(-n * math.log(target_fpr) / LN2_SQ))
    k = max(1, round(nbits / n * math.log(2.0)))
    return nbits, k


class BloomFilter:
    """Double-hashed Bloom filter; may false-positive, never false-negative."""

    __slots__ = ("nbits", "hash_count", "bits", "inserted", "sized_for")

    def __init__(self, nbits: int, hash_count: int, sized_for: int = 0):
        if nbits < 1 or hash_count < 1:
            raise ConfigError("bloom filter needs nbits >= 1 and hash_count >= 1")
        self.nbits = nbits
        self.hash_count = hash_count
        self.bits = bytearray((nbits + 7) // 8)
        self.inserted = 0
        self.sized_for = sized_for

    def add(self, key: bytes):
        h1, h2 = hash_pair(key)
        bits, nbits = self.bits, self.nbits
        for j in range(self.hash_count):
            pos = (h1 + j * h2) % nbits
            bits[pos >> 3] |= 1 << (pos & 7)
        self.inserted += 1

    def add_many(self, keys: np.ndarray):
        if len(keys) == 0:
            return
        h1, h2 = hash_pairs(keys)
        ks = np.arange(self.hash_count, dtype=np.uint64)
        pos = (h1[:, None] + ks[None, :] * h2[:, None]) % np.uint64(self.nbits)
        pos = pos.ravel()
        arr = np.frombuffer(self.bits, dtype=np.uint8)
        np.bitwise_or.at(
            arr,
            (pos >> np.uint64(3)).astype(np.int64),
            (np.uint8(1) << (pos & np.uint64(7)).astype(np.uint8)),
        )
        self.inserted += len(keys)

    def might_contain(self, key: bytes) -> bool:
        h1, h2 = hash_pair(key)
        return self.might_contain_hashed(h1, h2)

    def might_contain_hashed(self, h1: int, h2: int) -> bool:
        bits, nbits = self.bits, self.nbits
        for j in range(self.hash_count):
            pos = (h1 + j * h2) % nbits
            if not bits[pos >> 3] >> (pos & 7) & 1:
                return False
        return True


def build_bloom(keys, target_fpr: float) -> BloomFilter:
    """Filter over ``keys`` with no false negatives and FPR near the target."""
    if isinstance(keys, np.ndarray):
        arr = keys
        n = len(arr)
    else:
        keys = list(keys)
        n = len(keys)
        if n == 0:
            raise ConfigError("need at least one key")
        width = len(keys[0])
        if any(len(k) != width for k in keys):
            raise ConfigError("keys must share one fixed width")
        arr = np.frombuffer(b"".join(keys), dtype=f"S{width}")
    nbits, k = bloom_params(n, target_fpr)
    bf = BloomFilter(nbits, k, sized_for=n)
    bf.add_many(arr)
    return bf


class FencePointers:
    """First key of each data page; binary search yields the one candidate page."""

    __slots__ = ("first_keys",)

    def __init__(self, first_keys: list[bytes]):
        self.first_keys = first_keys

    @classmethod
    def from_sorted_keys(cls, keys: np.ndarray, entries_per_page: int) -> "FencePointers":
        kw = keys.dtype.itemsize
        raw = keys.tobytes()
        firsts = [raw[i * kw:i * kw + kw] for i in range(0, len(keys), entries_per_page)]
        return cls(firsts)

    def locate(self, key: bytes) -> int | None:
        """Index of the page whose range may hold ``key``; None if below the run."""
        idx = bisect_right(self.first_keys, key) - 1
        return idx if idx >= 0 else None

    def __len__(self) -> int:
        return len(self.first_keys)


@dataclass(frozen=True)
class FprSchedule:
    """Per-level Bloom FPR assignment, uniform or geometric."""

    scheme: str
    level1_fpr: float
    size_ratio: int

    def __post_init__(self):
        if self.scheme not in ("uniform", "monkey"):
            raise ConfigError(f"unknown bloom scheme {self.scheme!r}")
        if not 0.0 < self.level1_fpr < 1.0:
            raise ConfigError("level-1 fpr must be in (0, 1)")

    def level_fpr(self, level_index: int) -> float:
        if level_index < 1:
            raise ConfigError("level index must be >= 1")
        if self.scheme == "uniform":
            return self.level1_fpr
        return min(1.0, self.level1_fpr * self.size_ratio ** (level_index - 1))

    @classmethod
    def from_config(cls, config: EngineConfig) -> "FprSchedule":
        if isinstance(config.bloom, Uniform):
            return cls("uniform", fpr_for_bits(config.bloom.bits_per_key), config.size_ratio)
        if isinstance(config.bloom, Monkey):
            return cls("monkey", fpr_for_bits(config.bloom.bits_per_key_level1), config.size_ratio)
        raise ConfigError(f"unknown bloom scheme {config.bloom!r}")
