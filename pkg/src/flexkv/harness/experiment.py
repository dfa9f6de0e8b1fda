"""Benchmark harness: wires workload, engine, transitions, tuner, and stats
into reproducible experiments with CSV (and figure) output."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analysis import TransitionCostInput, additional_cost_flexible
from ..config import ConfigError, CostModelParams, EngineConfig, Monkey, Uniform
from ..engine import FlsmTree
from ..stats import MissionStats, StatsCollector
from ..transitions import (TransitionKind, apply_flexible, apply_greedy,
                           apply_lazy)
from ..tuner import HeuristicTuner, LerpTuner, TunerConfig
from ..workload import (Mission, WorkloadSpec, WorkloadStream,
                        builtin_workload)

_VALUE_MIX = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


# -- policy modes ---------------------------------------------------------------

@dataclass(frozen=True)
class Fixed:
    k: int


@dataclass(frozen=True)
class PropagatedFixed:
    vector: tuple[int, ...]


@dataclass(frozen=True)
class RlMode:
    tuner: TunerConfig = field(default_factory=TunerConfig)


@dataclass(frozen=True)
class HeuristicMode:
    h_bottom: float
    h_top: float


PolicyMode = Fixed | PropagatedFixed | RlMode | HeuristicMode


@dataclass(frozen=True)
class ExperimentConfig:
    engine: EngineConfig
    workload: WorkloadSpec
    preload_count: int = 200_000
    seed: int = 0
    mode: PolicyMode = Fixed(1)

    def initial_policy(self) -> tuple[int, ...]:
        if isinstance(self.mode, Fixed):
            return (self.mode.k,)
        if isinstance(self.mode, PropagatedFixed):
            return self.mode.vector
        return (1,)


@dataclass
class MissionRow:
    mission: int
    session: int
    gamma: float
    ops: int
    t_prime: float
    read_time: float
    write_time: float
    wall_seconds: float
    policies: tuple[int, ...]
    fills: tuple[float, ...]
    reads: int
    writes: int
    reward: float | None
    action: str


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[MissionRow]
    session_mean_latency: tuple[float, ...]   # simulated time per op
    final_policies: tuple[int, ...]
    total_sim_time: float
    converged_at: int | None = None
    csv_path: Path | None = None
    figure_paths: list[Path] = field(default_factory=list)

    @property
    def mean_latency(self) -> float:
        ops = sum(r.ops for r in self.rows)
        return self.total_sim_time / ops if ops else 0.0


def make_value(key: int, width: int) -> bytes:
    """Deterministic fixed-width value for a key."""
    word = ((key * _VALUE_MIX) & _MASK64).to_bytes(8, "little")
    return (word * (-(-width // 8)))[:width]


def encode_key(key: int, width: int) -> bytes:
    return key.to_bytes(width, "big")


def preload_tree(tree: FlsmTree, keys: np.ndarray):
    """Bulk-load distinct keys through the normal write path, then reset
    the collector so mission counters start clean."""
    kw = tree.config.key_width
    vw = tree.config.value_width
    put = tree.put
    for key in keys.tolist():
        put(key.to_bytes(kw, "big"), make_value(key, vw))
    tree.flush_buffer()
    tree.collector.finalize_mission()
    tree.collector._mission_index = 0


def run_mission_ops(tree: FlsmTree, mission: Mission):
    kw = tree.config.key_width
    vw = tree.config.value_width
    put = tree.put
    get = tree.get
    mix = _VALUE_MIX
    reps = -(-vw // 8)
    for kind, key in zip(mission.kinds, mission.keys):
        kb = key.to_bytes(kw, "big")
        if kind:
            get(kb)
        else:
            put(kb, (((key * mix) & _MASK64).to_bytes(8, "little") * reps)[:vw])


def _snapshot_row(tree: FlsmTree, cfg: ExperimentConfig, mission: Mission,
                  stats: MissionStats, reward, action) -> MissionRow:
    max_l = cfg.engine.max_levels
    init = cfg.initial_policy()
    policies = []
    fills = []
    for i in range(1, max_l + 1):
        if i <= len(tree.levels):
            lvl = tree.level(i)
            policies.append(lvl.policy)
            fills.append(lvl.fill_ratio)
        else:
            policies.append(init[i - 1] if i <= len(init) else init[-1])
            fills.append(0.0)
    return MissionRow(
        mission=mission.index,
        session=mission.session,
        gamma=stats.gamma_observed,
        ops=stats.ops,
        t_prime=stats.t_prime,
        read_time=stats.read_time,
        write_time=stats.write_time,
        wall_seconds=stats.wall_seconds,
        policies=tuple(policies),
        fills=tuple(fills),
        reads=stats.read_pages,
        writes=stats.write_pages,
        reward=reward,
        action=action,
    )


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None,
                   plot: bool = True, mission_hook=None,
                   stop_when=None) -> ExperimentResult:
    """Preload, stream missions, and emit per-mission metrics.

    ``mission_hook(tree, mission_index)`` runs before each mission's
    operations (used by the transition micro-benchmark). ``stop_when(result
    stats, tuner)`` may end the run early.
    """
    collector = StatsCollector()
    tree = FlsmTree(cfg.engine, initial_policy=cfg.initial_policy(), collector=collector)
    stream = WorkloadStream(cfg.workload, cfg.seed, cfg.preload_count)
    preload_tree(tree, stream.preload_keys)

    tuner = None
    if isinstance(cfg.mode, RlMode):
        tuner = LerpTuner(tree, cfg.mode.tuner, seed=cfg.seed)
    elif isinstance(cfg.mode, HeuristicMode):
        tuner = HeuristicTuner(tree, cfg.mode.h_bottom, cfg.mode.h_top)

    rows: list[MissionRow] = []
    for mission in stream:
        if mission_hook is not None:
            mission_hook(tree, mission.index)
        wall0 = time.perf_counter()
        run_mission_ops(tree, mission)
        wall = time.perf_counter() - wall0
        stats = collector.finalize_mission(wall)
        reward = None
        action = ""
        if tuner is not None:
            tuner.end_of_mission(stats)
            reward = tuner.last_reward
            action = tuner.last_action
        rows.append(_snapshot_row(tree, cfg, mission, stats, reward, action))
        if stop_when is not None and stop_when(stats, tuner):
            break

    n_sessions = len(cfg.workload.sessions)
    session_means = []
    for s in range(n_sessions):
        sess_rows = [r for r in rows if r.session == s]
        ops = sum(r.ops for r in sess_rows)
        session_means.append(sum(r.t_prime for r in sess_rows) / ops if ops else 0.0)

    result = ExperimentResult(
        config=cfg,
        rows=rows,
        session_mean_latency=tuple(session_means),
        final_policies=tree.policies(),
        total_sim_time=sum(r.t_prime for r in rows),
        converged_at=getattr(tuner, "converged_at", None),
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.csv_path = write_metrics_csv(out_dir / "metrics.csv", rows,
                                            cfg.engine.max_levels)
        if plot:
            from .plots import save_latency_figure
            result.figure_paths.append(
                save_latency_figure(rows, out_dir / "latency.png"))
    return result


# -- CSV ------------------------------------------------------------------------

def csv_header(max_levels: int) -> list[str]:
    cols = ["mission", "session", "gamma", "t_prime_sim", "wall_ms"]
    cols += [f"K{i}" for i in range(1, max_levels + 1)]
    cols += [f"fill{i}" for i in range(1, max_levels + 1)]
    cols += ["reads", "writes", "reward", "action"]
    return cols


def write_metrics_csv(path: str | Path, rows: list[MissionRow],
                      max_levels: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(max_levels))
        for r in rows:
            writer.writerow([
                r.mission, r.session, f"{r.gamma:.6f}", repr(r.t_prime),
                f"{r.wall_seconds * 1e3:.3f}",
                *r.policies,
                *(f"{f:.6f}" for f in r.fills),
                r.reads, r.writes,
                "" if r.reward is None else repr(r.reward),
                r.action,
            ])
    return path


# -- fixed-policy sweep -----------------------------------------------------------

@dataclass
class SweepEntry:
    k: int
    mean_latency: float
    session_means: tuple[float, ...]


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    best_k: int

    def best_k_for_session(self, session: int) -> int:
        return min(self.entries, key=lambda e: e.session_means[session]).k


def sweep_fixed_k(cfg: ExperimentConfig, ks=None,
                  keep_results: bool = False) -> SweepResult:
    """Run Fixed(K) over the identical workload for each K; argmin wins."""
    ks = list(ks) if ks is not None else list(range(1, cfg.engine.size_ratio + 1))
    entries = []
    results = []
    for k in ks:
        r = run_experiment(
            ExperimentConfig(cfg.engine, cfg.workload, cfg.preload_count,
                             cfg.seed, mode=Fixed(k)),
            out_dir=None, plot=False)
        entries.append(SweepEntry(k, r.mean_latency, r.session_mean_latency))
        if keep_results:
            results.append(r)
    best = min(entries, key=lambda e: e.mean_latency).k
    out = SweepResult(entries, best)
    if keep_results:
        out.results = results
    return out


# -- transition micro-benchmark ----------------------------------------------------

_APPLY_KIND = {
    TransitionKind.GREEDY: apply_greedy,
    TransitionKind.LAZY: apply_lazy,
    TransitionKind.FLEXIBLE: apply_flexible,
}


@dataclass
class MicrobenchResult:
    kind: TransitionKind
    transition_mission: int
    rows: list[MissionRow]
    total_sim_time: float
    write_spike_ratio: float    # write time at the transition mission / trailing mean
    read_series: list[float]
    write_series: list[float]


def transition_microbench(kind: TransitionKind, cfg: ExperimentConfig,
                          transition_mission: int | None = None,
                          from_policy: int = 1, to_policy: int | None = None,
                          trailing_window: int = 10,
                          out_dir: str | Path | None = None,
                          plot: bool = True) -> MicrobenchResult:
    """Switch every level's policy midway through the workload and record
    per-mission read/write simulated latencies."""
    to_policy = to_policy if to_policy is not None else cfg.engine.size_ratio
    mid = (transition_mission if transition_mission is not None
           else cfg.workload.mission_count // 2)
    apply = _APPLY_KIND[kind]

    def hook(tree: FlsmTree, mission_index: int):
        if mission_index == mid:
            for lvl in list(tree.levels):
                apply(tree, lvl.index, to_policy)

    base = ExperimentConfig(cfg.engine, cfg.workload, cfg.preload_count,
                            cfg.seed, mode=Fixed(from_policy))
    result = run_experiment(base, out_dir=None, plot=False, mission_hook=hook)
    rows = result.rows
    write_series = [r.write_time / r.ops for r in rows]
    read_series = [r.read_time / r.ops for r in rows]
    lo = max(0, mid - trailing_window)
    trailing = write_series[lo:mid]
    trailing_mean = sum(trailing) / len(trailing) if trailing else 0.0
    spike = write_series[mid] / trailing_mean if trailing_mean else 0.0
    out = MicrobenchResult(kind, mid, rows, result.total_sim_time, spike,
                           read_series, write_series)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out_dir / f"microbench_{kind.value}.csv", rows,
                          cfg.engine.max_levels)
    return out


# -- flexible-transition extra-read probe -------------------------------------------

@dataclass
class FlexProbeResult:
    fill: float
    measured_extra_reads: float
    predicted_extra_reads: float


def _fill_level1_and_count(engine_cfg: EngineConfig, start_policy: int,
                           switch_to: int | None, fill: float, gamma: float,
                           seed: int) -> int:
    """Fill level 1 to ``fill``, optionally switch policy, then drive updates
    until the level is full, counting lookup page reads in the level."""
    collector = StatsCollector()
    tree = FlsmTree(engine_cfg, initial_policy=start_policy, collector=collector)
    rng = np.random.default_rng(seed)
    kw, vw = engine_cfg.key_width, engine_cfg.value_width
    cap_entries = engine_cfg.level_capacity(1) // engine_cfg.entry_size
    n_fill = int(round(fill * cap_entries))
    n_rest = cap_entries - n_fill

    keys = rng.permutation(4 * cap_entries)[:cap_entries]
    for key in keys[:n_fill].tolist():
        tree.put(encode_key(key, kw), make_value(key, vw))
    tree.flush_buffer()

    if switch_to is not None:
        apply_flexible(tree, 1, switch_to)

    collector.finalize_mission()
    probe_base = 10 * cap_entries   # disjoint range: all lookups miss
    glut = gamma / (1.0 - gamma)
    budget = 0.0
    for key in keys[n_fill:n_fill + n_rest].tolist():
        budget += glut
        while budget >= 1.0:
            budget -= 1.0
            miss = probe_base + int(rng.integers(0, cap_entries))
            tree.get(encode_key(miss, kw))
        tree.put(encode_key(key, kw), make_value(key, vw))
    stats = collector.finalize_mission()
    return stats.level(1).query_read_pages


def flexible_extra_read_probe(engine_cfg: EngineConfig, fill: float,
                              old_policy: int, new_policy: int, gamma: float,
                              n_seeds: int = 20, seed0: int = 0) -> FlexProbeResult:
    """Measured extra lookup reads of a flexible transition at the given fill,
    against a tree born with the new policy, averaged over seeds."""
    extras = []
    for s in range(n_seeds):
        measured = _fill_level1_and_count(
            engine_cfg, old_policy, new_policy, fill, gamma, seed0 + s)
        born = _fill_level1_and_count(
            engine_cfg, new_policy, None, fill, gamma, seed0 + s)
        extras.append(measured - born)
    tree = FlsmTree(engine_cfg)
    predicted = additional_cost_flexible(TransitionCostInput(
        size_ratio=engine_cfg.size_ratio,
        level_capacity=engine_cfg.level_capacity(1),
        page_size=engine_cfg.page_size,
        entry_size=engine_cfg.entry_size,
        old_policy=old_policy,
        new_policy=new_policy,
        fill=fill,
        fpr=tree.schedule.level_fpr(1),
        lookup_fraction=gamma,
    ))
    return FlexProbeResult(fill, float(np.mean(extras)), predicted)


# -- JSON experiment config ----------------------------------------------------------

def engine_config_from_dict(d: dict) -> EngineConfig:
    bloom_d = d.get("bloom", {"scheme": "uniform"})
    scheme = bloom_d.get("scheme", "uniform")
    if scheme == "uniform":
        bloom = Uniform(float(bloom_d.get("bits_per_key", 8.0)))
    elif scheme == "monkey":
        bloom = Monkey(float(bloom_d.get("bits_per_key_level1", 32.0)))
    else:
        raise ConfigError(f"unknown bloom scheme {scheme!r}")
    costs_d = d.get("costs", {})
    costs = CostModelParams(
        read_io=float(costs_d.get("read_io", 1.0)),
        write_io=float(costs_d.get("write_io", 1.0)),
        probe_cpu=float(costs_d.get("probe_cpu", 0.02)),
        merge_cpu=float(costs_d.get("merge_cpu", 0.005)),
    )
    return EngineConfig(
        size_ratio=int(d.get("size_ratio", 10)),
        buffer_capacity=int(d.get("buffer_capacity", 16384)),
        key_width=int(d.get("key_width", 16)),
        value_width=int(d.get("value_width", 104)),
        page_size=int(d.get("page_size", 4096)),
        max_levels=int(d.get("max_levels", 7)),
        bloom=bloom,
        costs=costs,
    )


def mode_from_dict(d: dict) -> PolicyMode:
    kind = d.get("kind", "fixed")
    if kind == "fixed":
        return Fixed(int(d.get("k", 1)))
    if kind == "propagated_fixed":
        return PropagatedFixed(tuple(int(k) for k in d["vector"]))
    if kind == "rl":
        fields = {k: v for k, v in d.items() if k != "kind"}
        return RlMode(TunerConfig(**fields))
    if kind == "heuristic":
        return HeuristicMode(float(d["h_bottom"]), float(d["h_top"]))
    raise ConfigError(f"unknown policy mode {kind!r}")


def experiment_config_from_file(path: str | Path, seed: int | None = None,
                                workload_path: str | Path | None = None) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read experiment config {path}: {exc}") from exc
    if workload_path is not None:
        workload = WorkloadSpec.from_file(workload_path)
    else:
        w = doc.get("workload", "balanced")
        if isinstance(w, str):
            workload = (WorkloadSpec.from_file(w) if w.endswith(".json")
                        else builtin_workload(w))
        else:
            workload = WorkloadSpec.from_dict(w)
    return ExperimentConfig(
        engine=engine_config_from_dict(doc.get("engine", {})),
        workload=workload,
        preload_count=int(doc.get("preload", 200_000)),
        seed=int(doc.get("seed", 0)) if seed is None else seed,
        mode=mode_from_dict(doc.get("mode", {"kind": "fixed", "k": 1})),
    )
