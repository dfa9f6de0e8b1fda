from .ddpg import (Action, DdpgAgent, ExperienceSample, ReplayBuffer,
                   TunerConfig, discretize)
from .lerp import (HeuristicTuner, LerpTuner, heuristic_deltas, level_state,
                   reward)
from .networks import Adam, Mlp, soft_update

__all__ = [
    "Action", "Adam", "DdpgAgent", "ExperienceSample", "HeuristicTuner",
    "LerpTuner", "Mlp", "ReplayBuffer", "TunerConfig", "discretize",
    "heuristic_deltas", "level_state", "reward", "soft_update",
]
