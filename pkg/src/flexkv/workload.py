"""Deterministic workload generation: sessions of missions mixing lookups and
updates over a configurable key distribution."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .config import ConfigError

UPDATE = 0
LOOKUP = 1

# multiplicative scramble for zipfian rank -> key mapping; odd prime, so the
# map is a bijection whenever key_space is not a multiple of it
_SCRAMBLE = 2654435761


@dataclass(frozen=True)
class SessionSpec:
    """One workload phase with a fixed operation mix."""

    op_count: int
    lookup_fraction: float
    distribution: str = "uniform"    # "uniform" | "zipfian"
    zipf_theta: float = 0.99

    def __post_init__(self):
        if self.op_count < 1:
            raise ConfigError("op_count must be positive")
        if not 0.0 <= self.lookup_fraction <= 1.0:
            raise ConfigError("lookup_fraction must lie in [0, 1]")
        if self.distribution not in ("uniform", "zipfian"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if self.zipf_theta <= 0:
            raise ConfigError("zipf_theta must be positive")


@dataclass(frozen=True)
class WorkloadSpec:
    sessions: tuple[SessionSpec, ...]
    mission_size: int = 10_000
    key_space: int = 1_000_000
    zero_result_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "sessions", tuple(self.sessions))
        if not self.sessions:
            raise ConfigError("need at least one session")
        if self.mission_size < 1:
            raise ConfigError("mission_size must be positive")
        if self.key_space < 1:
            raise ConfigError("key_space must be >= 1")
        if not 0.0 <= self.zero_result_fraction <= 1.0:
            raise ConfigError("zero_result_fraction must lie in [0, 1]")
        for s in self.sessions:
            if s.op_count % self.mission_size:
                raise ConfigError("session op_count must be a multiple of mission_size")

    @property
    def total_ops(self) -> int:
        return sum(s.op_count for s in self.sessions)

    @property
    def mission_count(self) -> int:
        return self.total_ops // self.mission_size

    def to_dict(self) -> dict:
        return {
            "mission_size": self.mission_size,
            "key_space": self.key_space,
            "zero_result_fraction": self.zero_result_fraction,
            "sessions": [
                {
                    "op_count": s.op_count,
                    "lookup_fraction": s.lookup_fraction,
                    "distribution": s.distribution,
                    "zipf_theta": s.zipf_theta,
                }
                for s in self.sessions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorkloadSpec":
        try:
            sessions = tuple(
                SessionSpec(
                    op_count=int(s["op_count"]),
                    lookup_fraction=float(s["lookup_fraction"]),
                    distribution=s.get("distribution", "uniform"),
                    zipf_theta=float(s.get("zipf_theta", 0.99)),
                )
                for s in d["sessions"]
            )
            return cls(
                sessions=sessions,
                mission_size=int(d.get("mission_size", 10_000)),
                key_space=int(d.get("key_space", 1_000_000)),
                zero_result_fraction=float(d.get("zero_result_fraction", 0.5)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad workload document: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "WorkloadSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class Mission:
    """A fixed-size batch of operations; the tuning epoch."""

    index: int
    session: int
    lookup_fraction: float
    kinds: list[int]     # LOOKUP / UPDATE per op
    keys: list[int]

    def __len__(self) -> int:
        return len(self.kinds)


class _Zipf:
    """Bounded zipfian sampler over ranks [0, n) with skew theta."""

    def __init__(self, n: int, theta: float):
        weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** theta
        self._cdf = np.cumsum(weights)
        self._cdf /= self._cdf[-1]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.searchsorted(self._cdf, rng.random(size)).astype(np.int64)


class WorkloadStream:
    """Iterator of missions, byte-identical for identical (spec, seed).

    Lookups target resident keys (preloaded plus already-generated updates)
    except for a configurable zero-result fraction drawn from the disjoint
    range [key_space, 2*key_space).
    """

    def __init__(self, spec: WorkloadSpec, seed: int, preload_count: int = 0):
        if preload_count > spec.key_space:
            raise ConfigError("preload_count exceeds key_space")
        self.spec = spec
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        if preload_count:
            self.preload_keys = self._rng.choice(
                spec.key_space, size=preload_count, replace=False).astype(np.int64)
        else:
            self.preload_keys = np.empty(0, np.int64)
        self._resident = self.preload_keys
        self._zipf: _Zipf | None = None

    def _update_keys(self, sess: SessionSpec, n: int) -> np.ndarray:
        ks = self.spec.key_space
        if sess.distribution == "uniform":
            return self._rng.integers(0, ks, n, dtype=np.int64)
        if self._zipf is None:
            self._zipf = _Zipf(ks, sess.zipf_theta)
        ranks = self._zipf.sample(self._rng, n)
        return (ranks * _SCRAMBLE) % ks

    def _make_mission(self, index: int, session: int, sess: SessionSpec) -> Mission:
        n = self.spec.mission_size
        rng = self._rng
        is_lookup = rng.random(n) < sess.lookup_fraction
        n_look = int(is_lookup.sum())
        upd_keys = self._update_keys(sess, n - n_look)
        keys = np.empty(n, np.int64)
        keys[~is_lookup] = upd_keys
        if n_look:
            zero = rng.random(n_look) < self.spec.zero_result_fraction
            if len(self._resident) == 0:
                zero[:] = True
            lk = np.empty(n_look, np.int64)
            n_zero = int(zero.sum())
            if n_zero:
                lk[zero] = self.spec.key_space + rng.integers(
                    0, self.spec.key_space, n_zero, dtype=np.int64)
            n_res = n_look - n_zero
            if n_res:
                idx = rng.integers(0, len(self._resident), n_res)
                lk[~zero] = self._resident[idx]
            keys[is_lookup] = lk
        if len(upd_keys):
            self._resident = np.concatenate([self._resident, upd_keys])
        return Mission(index, session, sess.lookup_fraction,
                       is_lookup.astype(np.int8).tolist(), keys.tolist())

    def __iter__(self) -> Iterator[Mission]:
        index = 0
        for s_i, sess in enumerate(self.spec.sessions):
            for _ in range(sess.op_count // self.spec.mission_size):
                yield self._make_mission(index, s_i, sess)
                index += 1


def static_workload(gamma: float, op_count: int, mission_size: int = 10_000,
                    key_space: int = 1_000_000,
                    zero_result_fraction: float = 0.5,
                    distribution: str = "uniform") -> WorkloadSpec:
    return WorkloadSpec(
        sessions=(SessionSpec(op_count, gamma, distribution),),
        mission_size=mission_size,
        key_space=key_space,
        zero_result_fraction=zero_result_fraction,
    )


DYNAMIC_GAMMAS = (0.9, 0.5, 0.1, 0.3, 0.7)


def dynamic_5session(ops_per_session: int = 100_000, mission_size: int = 10_000,
                     key_space: int = 1_000_000,
                     zero_result_fraction: float = 0.5) -> WorkloadSpec:
    """Read-heavy, balanced, write-heavy, write-inclined, read-inclined."""
    return WorkloadSpec(
        sessions=tuple(SessionSpec(ops_per_session, g) for g in DYNAMIC_GAMMAS),
        mission_size=mission_size,
        key_space=key_space,
        zero_result_fraction=zero_result_fraction,
    )


BUILTIN_WORKLOADS = {
    "read_heavy": lambda **kw: static_workload(0.9, **kw) if kw else static_workload(0.9, 300_000),
    "write_heavy": lambda **kw: static_workload(0.1, **kw) if kw else static_workload(0.1, 300_000),
    "balanced": lambda **kw: static_workload(0.5, **kw) if kw else static_workload(0.5, 300_000),
    "dynamic5": lambda **kw: dynamic_5session(**kw),
}


def builtin_workload(name: str) -> WorkloadSpec:
    try:
        return BUILTIN_WORKLOADS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown workload {name!r}; builtins: {sorted(BUILTIN_WORKLOADS)}") from None
