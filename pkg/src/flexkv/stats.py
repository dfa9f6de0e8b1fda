"""Per-mission, per-level statistics collection feeding the tuner and CSV output."""
from __future__ import annotations

from dataclasses import dataclass, field, replace


class StatsError(Exception):
    """Malformed event or level tag fed to the collector."""


@dataclass
class LevelTotals:
    """Counters attributed to one level (index 0 is the memory buffer)."""

    read_pages: int = 0
    query_read_pages: int = 0
    write_pages: int = 0
    probes: int = 0
    compactions: int = 0
    lookups: int = 0        # lookups that probed this level
    entries_in: int = 0     # entries admitted into this level
    time: float = 0.0       # simulated charge booked against this level

    def copy(self) -> "LevelTotals":
        return replace(self)


_ZERO = LevelTotals()


@dataclass(frozen=True)
class MissionStats:
    """Snapshot of one mission's counters."""

    index: int
    ops: int
    lookups: int
    updates: int
    gamma_observed: float
    t_prime: float          # total simulated time over the mission
    read_time: float        # simulated time spent on the lookup path
    write_time: float
    wall_seconds: float
    read_pages: int
    write_pages: int
    levels: tuple[LevelTotals, ...]

    def level(self, index: int) -> LevelTotals:
        """Counters for 1-based level ``index`` (zeros if never touched)."""
        return self.levels[index] if index < len(self.levels) else _ZERO

    @property
    def level_count(self) -> int:
        return len(self.levels) - 1


class StatsCollector:
    """Accumulates engine events; ``finalize_mission`` snapshots and resets.

    The engine calls the typed hooks below on its hot paths. When
    ``record_events`` is set every hook also appends a tuple to ``events`` so
    tests can replay and recount them.
    """

    def __init__(self, record_events: bool = False):
        self._levels: list[LevelTotals] = [LevelTotals()]
        self._mission_index = 0
        self._ops = 0
        self._lookups = 0
        self._updates = 0
        self._reads = 0
        self._writes = 0
        self._time = 0.0
        self._query_time = 0.0
        self.events: list[tuple] | None = [] if record_events else None

    def ensure_levels(self, max_index: int):
        while len(self._levels) <= max_index:
            self._levels.append(LevelTotals())

    def _level(self, index) -> LevelTotals:
        if not isinstance(index, int) or index < 0:
            raise StatsError(f"unknown level tag {index!r}")
        if index >= len(self._levels):
            self.ensure_levels(index)
        return self._levels[index]

    # -- engine hooks -------------------------------------------------------

    def pages_read(self, level: int, n: int, dt: float, query: bool):
        lt = self._levels[level]
        lt.read_pages += n
        lt.time += dt
        self._reads += n
        self._time += dt
        if query:
            lt.query_read_pages += n
            self._query_time += dt
        if self.events is not None:
            self.events.append(("read", level, n, dt, query))

    def pages_written(self, level: int, n: int, dt: float):
        lt = self._levels[level]
        lt.write_pages += n
        lt.time += dt
        self._writes += n
        self._time += dt
        if self.events is not None:
            self.events.append(("write", level, n, dt))

    def run_probe(self, level: int, dt: float):
        lt = self._levels[level]
        lt.probes += 1
        lt.time += dt
        self._time += dt
        self._query_time += dt
        if self.events is not None:
            self.events.append(("probe", level, 1, dt))

    def merge_cpu(self, level: int, n: int, dt: float):
        lt = self._levels[level]
        lt.time += dt
        self._time += dt
        if self.events is not None:
            self.events.append(("merge", level, n, dt))

    def compaction(self, level: int):
        self._levels[level].compactions += 1
        if self.events is not None:
            self.events.append(("compaction", level, 1, 0.0))

    def entries_admitted(self, level: int, n: int):
        self._levels[level].entries_in += n
        if self.events is not None:
            self.events.append(("admit", level, n, 0.0))

    def lookup_touched(self, level: int):
        self._levels[level].lookups += 1
        if self.events is not None:
            self.events.append(("touch", level, 1, 0.0))

    def op_lookup(self):
        self._ops += 1
        self._lookups += 1

    def op_update(self):
        self._ops += 1
        self._updates += 1

    # -- generic event entry point ------------------------------------------

    def record_event(self, event: tuple):
        """Dispatch a typed event tuple; unknown kinds or level tags raise."""
        kind = event[0]
        if kind == "read":
            _, level, n, dt, query = event
            self._level(level)
            self.pages_read(level, n, dt, query)
        elif kind == "write":
            _, level, n, dt = event
            self._level(level)
            self.pages_written(level, n, dt)
        elif kind == "probe":
            _, level, _, dt = event
            self._level(level)
            self.run_probe(level, dt)
        elif kind == "merge":
            _, level, n, dt = event
            self._level(level)
            self.merge_cpu(level, n, dt)
        elif kind == "compaction":
            self._level(event[1])
            self.compaction(event[1])
        elif kind == "admit":
            _, level, n, _ = event
            self._level(level)
            self.entries_admitted(level, n)
        elif kind == "touch":
            self._level(event[1])
            self.lookup_touched(event[1])
        else:
            raise StatsError(f"unknown event kind {kind!r}")

    # -- mission boundary ----------------------------------------------------

    def finalize_mission(self, wall_seconds: float = 0.0) -> MissionStats:
        """Snapshot the mission's counters and reset them for the next one."""
        ops = self._ops
        gamma = self._lookups / ops if ops else 0.0
        stats = MissionStats(
            index=self._mission_index,
            ops=ops,
            lookups=self._lookups,
            updates=self._updates,
            gamma_observed=gamma,
            t_prime=self._time,
            read_time=self._query_time,
            write_time=self._time - self._query_time,
            wall_seconds=wall_seconds,
            read_pages=self._reads,
            write_pages=self._writes,
            levels=tuple(lt.copy() for lt in self._levels),
        )
        self._mission_index += 1
        self._levels = [LevelTotals() for _ in self._levels]
        self._ops = self._lookups = self._updates = 0
        self._reads = self._writes = 0
        self._time = 0.0
        self._query_time = 0.0
        if self.events is not None:
            self.events = []
        return stats
