"""The FLSM tree: memory buffer, levels of variable-sized runs, lookups,
flush and compaction mechanics.

All I/O is simulated: page reads and writes bump counters and advance a
cost-model clock instead of touching disk. One tree instance is a single
logical thread of control; operations are never invoked concurrently.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .bloom import BloomFilter, FencePointers, FprSchedule, bloom_params, hash_pair
from .config import EngineConfig
from .stats import StatsCollector


class EngineError(Exception):
    """Engine misuse or internal invariant violation."""


class InputError(EngineError, ValueError):
    """Caller-supplied key or value does not match the configured widths."""


class Entry(NamedTuple):
    key: bytes
    value: bytes
    seq: int


def merge_dedup(keys_parts, seqs_parts, vals_parts):
    """Merge sorted entry arrays; on duplicate keys the highest seq wins."""
    keys = np.concatenate(keys_parts)
    seqs = np.concatenate(seqs_parts)
    vals = np.concatenate(vals_parts)
    order = np.lexsort((-seqs, keys))
    keys, seqs, vals = keys[order], seqs[order], vals[order]
    if len(keys) > 1:
        keep = np.empty(len(keys), bool)
        keep[0] = True
        keep[1:] = keys[1:] != keys[:-1]
        if not keep.all():
            keys, seqs, vals = keys[keep], seqs[keep], vals[keep]
    return keys, seqs, vals


class Run:
    """A key-sorted sequence of entries plus its filter and fence pointers.

    The per-level active run absorbs merged batches in place; sealed runs are
    immutable until a full-level compaction consumes them whole.
    """

    __slots__ = ("id", "level_index", "capacity", "sealed", "keys", "seqs", "vals",
                 "bloom", "fences", "fpr", "entry_size", "entries_per_page")

    def __init__(self, run_id: int, level_index: int, capacity: int, fpr: float,
                 entry_size: int, entries_per_page: int):
        self.id = run_id
        self.level_index = level_index
        self.capacity = capacity
        self.sealed = False
        self.fpr = fpr
        self.entry_size = entry_size
        self.entries_per_page = entries_per_page
        self.keys: np.ndarray | None = None
        self.seqs: np.ndarray | None = None
        self.vals: np.ndarray | None = None
        self.bloom: BloomFilter | None = None
        self.fences: FencePointers | None = None

    @property
    def num_entries(self) -> int:
        return 0 if self.keys is None else len(self.keys)

    @property
    def data_size(self) -> int:
        return self.num_entries * self.entry_size

    @property
    def num_pages(self) -> int:
        return -(-self.num_entries // self.entries_per_page)

    def _capacity_entries(self) -> int:
        return max(1, self.capacity // self.entry_size)

    def ensure_filter_capacity(self, incoming_keys: np.ndarray | None = None):
        """Insert new keys into the filter; rebuild it if undersized.

        Rebuilds are pure metadata work and charge nothing. Stale bits from
        overwritten keys are kept (only false positives, never negatives).
        """
        if self.fpr >= 1.0 or self.keys is None:
            return
        needed = max(self.num_entries, self._capacity_entries())
        if self.bloom is None or self.bloom.sized_for < needed:
            nbits, k = bloom_params(needed, self.fpr)
            self.bloom = BloomFilter(nbits, k, sized_for=needed)
            self.bloom.add_many(self.keys)
        elif incoming_keys is not None and len(incoming_keys):
            self.bloom.add_many(incoming_keys)

    def set_entries(self, keys: np.ndarray, seqs: np.ndarray, vals: np.ndarray,
                    incoming_keys: np.ndarray | None = None):
        if self.sealed:
            raise EngineError("sealed runs are immutable")
        self.keys, self.seqs, self.vals = keys, seqs, vals
        self.fences = FencePointers.from_sorted_keys(keys, self.entries_per_page)
        self.ensure_filter_capacity(incoming_keys if incoming_keys is not None else keys)

    def seal(self):
        self.sealed = True

    def lookup(self, key: bytes) -> bytes | None:
        """Value for ``key`` within this run, ignoring I/O accounting."""
        if self.keys is None:
            return None
        idx = int(np.searchsorted(self.keys, key))
        if idx < len(self.keys) and self.keys[idx] == key:
            return self.vals[idx].tobytes()
        return None

    def content_crc(self) -> int:
        """Checksum over entries and shape, for immutability assertions."""
        if self.keys is None:
            return 0
        crc = zlib.crc32(self.keys.tobytes())
        crc = zlib.crc32(self.seqs.tobytes(), crc)
        crc = zlib.crc32(self.vals.tobytes(), crc)
        return zlib.crc32(str(self.capacity).encode(), crc)

    def entries(self) -> Iterator[Entry]:
        for i in range(self.num_entries):
            yield Entry(self.keys.tobytes()[i * self.keys.dtype.itemsize:
                                            (i + 1) * self.keys.dtype.itemsize],
                        self.vals[i].tobytes(), int(self.seqs[i]))


class Level:
    """One tree level: an ordered set of runs under a compaction policy K."""

    __slots__ = ("index", "capacity", "policy", "active", "sealed_runs",
                 "pending_policy", "bytes")

    def __init__(self, index: int, capacity: int, policy: int):
        self.index = index
        self.capacity = capacity
        self.policy = policy
        self.active: Run | None = None
        self.sealed_runs: list[Run] = []   # newest first
        self.pending_policy: int | None = None
        self.bytes = 0

    @property
    def data_size(self) -> int:
        return self.bytes

    @property
    def fill_ratio(self) -> float:
        return self.bytes / self.capacity

    def active_capacity(self) -> int:
        return self.capacity // self.policy

    def run_count(self) -> int:
        n = len(self.sealed_runs)
        if self.active is not None and self.active.num_entries:
            n += 1
        return n

    def runs_newest_first(self) -> Iterator[Run]:
        if self.active is not None and self.active.num_entries:
            yield self.active
        yield from self.sealed_runs


@dataclass(frozen=True)
class LevelSnapshot:
    index: int
    policy: int
    pending_policy: int | None
    run_count: int
    fill_ratio: float
    data_size: int


@dataclass(frozen=True)
class EngineSnapshot:
    policies: tuple[int, ...]
    levels: tuple[LevelSnapshot, ...]
    page_reads: int
    page_writes: int
    clock: float
    buffer_entries: int


class FlsmTree:
    """Multi-level LSM tree with an independent compaction policy per level."""

    def __init__(self, config: EngineConfig, initial_policy: int | tuple[int, ...] = 1,
                 collector: StatsCollector | None = None):
        self.config = config
        self.schedule = FprSchedule.from_config(config)
        if isinstance(initial_policy, int):
            initial_policy = (initial_policy,)
        else:
            initial_policy = tuple(initial_policy)
        for k in initial_policy:
            if not 1 <= k <= config.size_ratio:
                raise InputError(f"policy {k} outside [1, {config.size_ratio}]")
        self._initial_policy = initial_policy
        self.collector = collector if collector is not None else StatsCollector()
        self.buffer: dict[bytes, tuple[bytes, int]] = {}
        self.levels: list[Level] = []
        self.page_reads = 0
        self.page_writes = 0
        self.clock = 0.0
        self._seq = 0
        self._next_run_id = 1
        # hot-path constants
        self._kw = config.key_width
        self._vw = config.value_width
        self._E = config.entry_size
        self._epp = config.entries_per_page
        self._buffer_cap = config.buffer_entries
        costs = config.costs
        self._ir = costs.read_io
        self._iw = costs.write_io
        self._cr = costs.probe_cpu
        self._cw = costs.merge_cpu

    # -- structure ------------------------------------------------------------

    def level(self, index: int) -> Level:
        return self.levels[index - 1]

    def policies(self) -> tuple[int, ...]:
        return tuple(lvl.policy for lvl in self.levels)

    def _policy_for(self, index: int) -> int:
        p = self._initial_policy
        return p[index - 1] if index <= len(p) else p[-1]

    def materialize_level(self, index: int) -> Level:
        if index != len(self.levels) + 1:
            raise EngineError("levels must be materialized in order")
        if index > self.config.max_levels:
            raise EngineError(f"level cap exceeded (max_levels={self.config.max_levels})")
        lvl = Level(index, self.config.level_capacity(index), self._policy_for(index))
        self.levels.append(lvl)
        self.collector.ensure_levels(index)
        return lvl

    def _new_active(self, level: Level) -> Run:
        run = Run(self._next_run_id, level.index, level.active_capacity(),
                  self.schedule.level_fpr(level.index), self._E, self._epp)
        self._next_run_id += 1
        level.active = run
        return run

    def seal_active(self, level: Level):
        run = level.active
        if run is None:
            return
        run.seal()
        level.sealed_runs.insert(0, run)
        level.active = None

    # -- charges ----------------------------------------------------------------

    def _charge_read(self, level_index: int, pages: int, query: bool):
        if pages:
            self.page_reads += pages
            dt = pages * self._ir
            self.clock += dt
            self.collector.pages_read(level_index, pages, dt, query)

    def _charge_write(self, level_index: int, pages: int):
        if pages:
            self.page_writes += pages
            dt = pages * self._iw
            self.clock += dt
            self.collector.pages_written(level_index, pages, dt)

    # -- operations ---------------------------------------------------------------

    def put(self, key: bytes, value: bytes):
        if len(key) != self._kw or len(value) != self._vw:
            raise InputError(
                f"key/value widths must be {self._kw}/{self._vw} bytes, "
                f"got {len(key)}/{len(value)}")
        self._seq += 1
        self.buffer[key] = (value, self._seq)
        self.collector.op_update()
        if len(self.buffer) >= self._buffer_cap:
            self.flush_buffer()

    def get(self, key: bytes) -> bytes | None:
        self.collector.op_lookup()
        hit = self.buffer.get(key)
        if hit is not None:
            return hit[0]
        if len(key) != self._kw:
            return None
        hashes = None
        collector = self.collector
        cr = self._cr
        for level in self.levels:
            li = level.index
            touched = False
            for run in level.runs_newest_first():
                if not touched:
                    collector.lookup_touched(li)
                    touched = True
                self.clock += cr
                collector.run_probe(li, cr)
                bloom = run.bloom
                if bloom is not None:
                    if hashes is None:
                        hashes = hash_pair(key)
                    if not bloom.might_contain_hashed(*hashes):
                        continue
                page = run.fences.locate(key)
                if page is None:
                    continue
                self._charge_read(li, 1, query=True)
                idx = int(np.searchsorted(run.keys, key))
                if idx < len(run.keys) and run.keys[idx] == key:
                    return run.vals[idx].tobytes()
        return None

    def flush_buffer(self):
        """Sort the buffer into a run and admit it into level 1."""
        buf = self.buffer
        if not buf:
            return
        keys = np.frombuffer(b"".join(buf.keys()), dtype=f"S{self._kw}")
        pairs = list(buf.values())
        vals = np.frombuffer(b"".join(p[0] for p in pairs), dtype=f"V{self._vw}")
        seqs = np.fromiter((p[1] for p in pairs), np.int64, len(pairs))
        order = np.argsort(keys, kind="stable")
        self.buffer = {}
        if not self.levels:
            self.materialize_level(1)
        self._admit(1, keys[order], seqs[order], vals[order], source_level=0)
        lvl1 = self.levels[0]
        if lvl1.bytes >= lvl1.capacity:
            self.compact_level(1)

    def _admit(self, level_index: int, keys, seqs, vals, source_level: int):
        """Merge a sorted batch into the level's active run.

        Charges one read per rewritten active page, one write per merged page,
        and merge CPU per output entry, booked against the source level.
        """
        level = self.levels[level_index - 1]
        active = level.active
        if active is None:
            active = self._new_active(level)
        n_in = len(keys)
        if active.num_entries == 0:
            merged_k, merged_s, merged_v = keys, seqs, vals
            read_pages = 0
        else:
            read_pages = active.num_pages
            merged_k, merged_s, merged_v = merge_dedup(
                (active.keys, keys), (active.seqs, seqs), (active.vals, vals))
        self._charge_read(source_level, read_pages, query=False)
        write_pages = -(-len(merged_k) * self._E // self.config.page_size)
        self._charge_write(source_level, write_pages)
        dt = len(merged_k) * self._cw
        self.clock += dt
        self.collector.merge_cpu(source_level, len(merged_k), dt)
        old_size = active.data_size
        active.set_entries(merged_k, merged_s, merged_v, incoming_keys=keys)
        level.bytes += active.data_size - old_size
        self.collector.entries_admitted(level_index, n_in)
        if active.data_size >= active.capacity:
            self.seal_active(level)

    def compact_level(self, index: int):
        """Merge every run of the level into the next level's admission path.

        The level is left empty under its current policy (a pending lazy policy
        takes effect here). Cascades synchronously if the next level fills.
        """
        level = self.levels[index - 1]
        runs = [r for r in level.runs_newest_first() if r.num_entries]
        if level.pending_policy is not None:
            level.policy = level.pending_policy
            level.pending_policy = None
        if not runs:
            return
        self.collector.compaction(index)
        read_pages = sum(r.num_pages for r in runs)
        self._charge_read(index, read_pages, query=False)
        if len(runs) == 1:
            merged = (runs[0].keys, runs[0].seqs, runs[0].vals)
        else:
            merged = merge_dedup(tuple(r.keys for r in runs),
                                 tuple(r.seqs for r in runs),
                                 tuple(r.vals for r in runs))
        level.active = None
        level.sealed_runs = []
        level.bytes = 0
        if index == len(self.levels):
            self.materialize_level(index + 1)
        self._admit(index + 1, *merged, source_level=index)
        nxt = self.levels[index]
        if nxt.bytes >= nxt.capacity:
            self.compact_level(index + 1)

    def snapshot_state(self) -> EngineSnapshot:
        """Read-only structural summary; causes no I/O or clock charges."""
        levels = tuple(
            LevelSnapshot(l.index, l.policy, l.pending_policy, l.run_count(),
                          l.fill_ratio, l.bytes)
            for l in self.levels)
        return EngineSnapshot(
            policies=self.policies(),
            levels=levels,
            page_reads=self.page_reads,
            page_writes=self.page_writes,
            clock=self.clock,
            buffer_entries=len(self.buffer),
        )

    def sealed_run_crcs(self) -> dict[int, int]:
        """Checksums of every sealed run, keyed by run id."""
        out = {}
        for level in self.levels:
            for run in level.sealed_runs:
                out[run.id] = run.content_crc()
        return out

    def check_sorted_runs(self):
        """Debug invariant: every run's keys strictly ascending."""
        for level in self.levels:
            for run in level.runs_newest_first():
                if run.num_entries > 1 and not (run.keys[1:] > run.keys[:-1]).all():
                    raise EngineError(f"run {run.id} in level {level.index} not strictly sorted")
