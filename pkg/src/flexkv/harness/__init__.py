from .experiment import (ExperimentConfig, ExperimentResult, Fixed,
                         FlexProbeResult, HeuristicMode, MicrobenchResult,
                         MissionRow, PropagatedFixed, RlMode, SweepResult,
                         flexible_extra_read_probe, run_experiment,
                         sweep_fixed_k, transition_microbench,
                         write_metrics_csv)

__all__ = [
    "ExperimentConfig", "ExperimentResult", "Fixed", "FlexProbeResult",
    "HeuristicMode", "MicrobenchResult", "MissionRow", "PropagatedFixed",
    "RlMode", "SweepResult", "flexible_extra_read_probe", "run_experiment",
    "sweep_fixed_k", "transition_microbench", "write_metrics_csv",
]
