"""flexkv: an LSM-tree key-value engine with per-level compaction policies,
flexible policy transitions, and an online RL tuner."""

from .analysis import (LevelCostInput, TransitionCostInput,
                       additional_cost_flexible, additional_cost_greedy,
                       additional_cost_lazy, level_cost, optimal_policy,
                       propagate_all, propagate_policy,
                       transition_cost_and_delay)
from .bloom import (BloomFilter, FencePointers, FprSchedule, bloom_params,
                    build_bloom)
from .config import (ConfigError, CostModelParams, EngineConfig, Monkey,
                     Uniform, bits_for_fpr, fpr_for_bits, monkey_level1_bits)
from .engine import (EngineError, EngineSnapshot, Entry, FlsmTree, InputError,
                     Level, Run)
from .stats import MissionStats, StatsCollector, StatsError
from .transitions import (TransitionKind, TransitionRequest, apply_flexible,
                          apply_greedy, apply_lazy, apply_transition)
from .workload import (Mission, SessionSpec, WorkloadSpec, WorkloadStream,
                       builtin_workload, dynamic_5session, static_workload)

__version__ = "0.1.0"

__all__ = [
    "BloomFilter", "ConfigError", "CostModelParams", "EngineConfig",
    "EngineError", "EngineSnapshot", "Entry", "FencePointers", "FlsmTree",
    "FprSchedule", "InputError", "Level", "LevelCostInput", "Mission",
    "MissionStats", "Monkey", "Run", "SessionSpec", "StatsCollector",
    "StatsError", "TransitionCostInput", "TransitionKind",
    "TransitionRequest", "Uniform", "WorkloadSpec", "WorkloadStream",
    "additional_cost_flexible", "additional_cost_greedy",
    "additional_cost_lazy", "apply_flexible", "apply_greedy", "apply_lazy",
    "apply_transition", "bits_for_fpr", "bloom_params", "build_bloom",
    "builtin_workload", "dynamic_5session", "fpr_for_bits", "level_cost",
    "monkey_level1_bits", "optimal_policy", "propagate_all",
    "propagate_policy", "static_workload", "transition_cost_and_delay",
]
