"""Engine configuration: tree geometry, entry layout, Bloom schemes, cost model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

# Every stored entry carries its sequence number; the entry size E below
# includes this footprint so page math stays exact.
SEQ_WIDTH = 8

LN2_SQ = math.log(2.0) ** 2


class ConfigError(ValueError):
    """Invalid engine, workload, or experiment configuration."""


@dataclass(frozen=True)
class CostModelParams:
    """Simulated-time charges for page I/O and CPU work.

    ``read_io``/``write_io`` are per disk page, ``probe_cpu`` per sorted-run
    probe, and ``merge_cpu`` per entry touched while merging.
    """

    read_io: float = 1.0
    write_io: float = 1.0
    probe_cpu: float = 0.02
    merge_cpu: float = 0.005

    def __post_init__(self):
        for name in ("read_io", "write_io", "probe_cpu", "merge_cpu"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class Uniform:
    """Same bits-per-key for the Bloom filters at every level."""

    bits_per_key: float = 8.0

    def __post_init__(self):
        if self.bits_per_key <= 0:
            raise ConfigError("bits_per_key must be positive")


@dataclass(frozen=True)
class Monkey:
    """Geometric FPR allocation: level i runs at T^(i-1) times the level-1 FPR."""

    bits_per_key_level1: float = 32.0

    def __post_init__(self):
        if self.bits_per_key_level1 <= 0:
            raise ConfigError("bits_per_key_level1 must be positive")


def fpr_for_bits(bits_per_key: float) -> float:
    """Expected false-positive rate of a Bloom filter using ``bits_per_key``."""
    return math.exp(-bits_per_key * LN2_SQ)


def bits_for_fpr(fpr: float) -> float:
    """Bits-per-key needed to hit ``fpr`` with an optimally-hashed filter."""
    if not 0.0 < fpr < 1.0:
        raise ConfigError("fpr must be in (0, 1)")
    return -math.log(fpr) / LN2_SQ


def monkey_level1_bits(size_ratio: int, largest_level: int,
                       bits_at_largest: float = 4.0) -> float:
    """Level-1 bits/key such that the largest level lands at ``bits_at_largest``."""
    if largest_level < 1:
        raise ConfigError("largest_level must be >= 1")
    return bits_at_largest + (largest_level - 1) * math.log(size_ratio) / LN2_SQ


@dataclass(frozen=True)
class EngineConfig:
    """Static parameters of one tree instance.

    Level capacities are geometric: C_1 = T * buffer_capacity and
    C_{i+1} = T * C_i, with T the size ratio.
    """

    size_ratio: int = 10
    buffer_capacity: int = 16384
    key_width: int = 16
    value_width: int = 104
    page_size: int = 4096
    max_levels: int = 7
    bloom: Uniform | Monkey = field(default_factory=Uniform)
    costs: CostModelParams = field(default_factory=CostModelParams)

    def __post_init__(self):
        if self.size_ratio < 2:
            raise ConfigError("size_ratio must be >= 2")
        if self.key_width < 1 or self.value_width < 1:
            raise ConfigError("key and value widths must be positive")
        if self.page_size < 1:
            raise ConfigError("page_size must be positive")
        if self.entry_size > self.page_size:
            raise ConfigError("entry size must not exceed the page size")
        if self.buffer_capacity <= 0 or self.buffer_capacity % self.entry_size:
            raise ConfigError("buffer_capacity must be a positive multiple of the entry size")
        if self.max_levels < 1:
            raise ConfigError("max_levels must be >= 1")

    @property
    def entry_size(self) -> int:
        return self.key_width + self.value_width + SEQ_WIDTH

    @property
    def entries_per_page(self) -> int:
        return self.page_size // self.entry_size

    @property
    def buffer_entries(self) -> int:
        return self.buffer_capacity // self.entry_size

    def level_capacity(self, index: int) -> int:
        """Capacity in bytes of 1-based level ``index``."""
        if index < 1:
            raise ConfigError("level index must be >= 1")
        return self.buffer_capacity * self.size_ratio**index
