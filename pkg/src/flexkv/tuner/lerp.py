"""Level-based tuning loop: state extraction, reward, convergence detection,
cross-level policy propagation, and the threshold-heuristic baseline."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..analysis import propagate_all
from ..engine import FlsmTree
from ..stats import MissionStats
from ..transitions import TransitionKind, TransitionRequest, apply_flexible
from .ddpg import Action, DdpgAgent, ExperienceSample, TunerConfig

STATE_DIM = 7

_EMA_BLEND = 0.1


def reward(level_latency: float, total_latency: float, alpha: float,
           scale: float = 1.0) -> float:
    """Negated mix of per-level and end-to-end latency; higher is better."""
    return -(alpha * level_latency + (1.0 - alpha) * total_latency) / scale


def _squash(x: float) -> float:
    return x / (1.0 + x)


def level_state(tree: FlsmTree, stats: MissionStats, level_index: int,
                latency_scale: float) -> np.ndarray:
    """Feature vector for one level, every component in [0, 1]."""
    t = tree.config.size_ratio
    lvl = tree.level(level_index)
    lt = stats.level(level_index)
    ops = max(1, stats.ops)
    t_i = lt.time / ops
    return np.array([
        lvl.policy / t,
        min(1.0, lvl.fill_ratio),
        min(1.0, lvl.run_count() / (2.0 * t)),
        _squash(lt.read_pages / ops),
        _squash(lt.write_pages / ops),
        stats.gamma_observed,
        t_i / (t_i + latency_scale) if latency_scale > 0 else 0.0,
    ])


class _LevelTrainer:
    """Per-level agent plus its convergence bookkeeping."""

    def __init__(self, level_index: int, config: TunerConfig, seed: int):
        self.level_index = level_index
        self.agent = DdpgAgent(STATE_DIM, config, seed)
        self.prev_state: np.ndarray | None = None
        self.prev_action: Action | None = None
        self.raw_history: deque[float] = deque(maxlen=config.converge_window)
        self.last_policy: int | None = None
        self.policy_streak = 0
        self.converged = False

    def reset(self):
        self.agent.reset_noise()
        self.agent.buffer.clear()
        self.prev_state = None
        self.prev_action = None
        self.raw_history.clear()
        self.last_policy = None
        self.policy_streak = 0
        self.converged = False

    def note_policy(self, policy: int):
        if policy == self.last_policy:
            self.policy_streak += 1
        else:
            self.policy_streak = 1
            self.last_policy = policy

    def is_converged(self, window: int, var_tol: float) -> bool:
        if self.policy_streak < window or len(self.raw_history) < window:
            return False
        return float(np.var(self.raw_history)) < var_tol


class LerpTuner:
    """Online tuner driving one tree at mission boundaries.

    Under the uniform Bloom scheme only level 1 is trained and its converged
    policy is copied to every level. Under the geometric scheme levels 1 and 2
    are trained in succession and deeper policies come from propagation.
    """

    def __init__(self, tree: FlsmTree, config: TunerConfig | None = None,
                 seed: int = 0):
        self.tree = tree
        self.config = config or TunerConfig()
        trained = [1] if tree.schedule.scheme == "uniform" else [1, 2]
        seeds = np.random.SeedSequence(seed).spawn(len(trained))
        self.trainers = [_LevelTrainer(li, self.config, s)
                         for li, s in zip(trained, seeds)]
        self.phase = 0
        self.done = False
        self.target_vector: tuple[int, ...] | None = None
        self.gamma_ema: float | None = None
        self.combined_ema: float | None = None
        self.last_reward: float | None = None
        self.last_action: str = ""
        self.converged_at: int | None = None
        self.missions_seen = 0

    # -- internals -------------------------------------------------------------

    def _reset_training(self):
        for tr in self.trainers:
            tr.reset()
        self.phase = 0
        self.done = False
        self.target_vector = None
        self.converged_at = None

    def _combined(self, stats: MissionStats, level_index: int) -> tuple[float, float, float]:
        ops = max(1, stats.ops)
        t_i = stats.level(level_index).time / ops
        t_prime = stats.t_prime / ops
        a = self.config.alpha
        return t_i, t_prime, a * t_i + (1.0 - a) * t_prime

    def _ensure_levels(self) -> int:
        # propagation targets every level the tree has materialized so far
        return max(len(self.tree.levels), max(tr.level_index for tr in self.trainers))

    def _propagate(self) -> list[TransitionRequest]:
        t = self.tree.config.size_ratio
        count = self._ensure_levels()
        if len(self.trainers) == 1:
            k1 = self.trainers[0].last_policy or self.tree.level(1).policy
            vector = tuple([k1] * count)
        else:
            k1 = self.trainers[0].last_policy or self.tree.level(1).policy
            k2 = self.trainers[1].last_policy or self.tree.level(2).policy
            k2 = min(k2, k1)   # learned pair may be noisy; propagation needs k2 <= k1
            vector = propagate_all(k1, k2, t, count)
        self.target_vector = vector
        return self._apply_vector()

    def _apply_vector(self) -> list[TransitionRequest]:
        applied = []
        vector = self.target_vector
        for lvl in list(self.tree.levels):
            want = vector[lvl.index - 1] if lvl.index <= len(vector) else vector[-1]
            if lvl.policy != want:
                apply_flexible(self.tree, lvl.index, want)
                applied.append(TransitionRequest(lvl.index, want, TransitionKind.FLEXIBLE))
        return applied

    # -- the mission boundary hook ----------------------------------------------

    def end_of_mission(self, stats: MissionStats) -> list[TransitionRequest]:
        """Learn from the finished mission and apply the next policy change."""
        cfg = self.config
        self.missions_seen += 1
        g = stats.gamma_observed
        if self.gamma_ema is None:
            self.gamma_ema = g
        elif abs(g - self.gamma_ema) > cfg.gamma_shift_tolerance:
            self._reset_training()
            self.gamma_ema = g
        else:
            self.gamma_ema += 0.2 * (g - self.gamma_ema)

        self.last_reward = None
        self.last_action = ""

        if self.done:
            return self._apply_vector()

        trainer = self.trainers[self.phase]
        agent = trainer.agent
        level_index = trainer.level_index
        while len(self.tree.levels) < level_index:
            self.tree.materialize_level(len(self.tree.levels) + 1)

        t_i, t_prime, combined = self._combined(stats, level_index)
        scale = self.combined_ema if self.combined_ema else combined or 1.0
        state = level_state(self.tree, stats, level_index, scale)

        if trainer.prev_state is not None:
            r = reward(t_i, t_prime, cfg.alpha, scale)
            self.last_reward = r
            agent.buffer.push(ExperienceSample(
                trainer.prev_state, trainer.prev_action, r, state))
            for _ in range(cfg.train_steps):
                if agent.train_step() is None:
                    break

        self.combined_ema = (combined if self.combined_ema is None
                             else self.combined_ema + _EMA_BLEND * (combined - self.combined_ema))

        trainer.raw_history.append(agent.policy_output(state))
        trainer.note_policy(self.tree.level(level_index).policy)

        if trainer.is_converged(cfg.converge_window, cfg.converge_output_var):
            trainer.converged = True
            trainer.prev_state = None
            trainer.prev_action = None
            if self.phase + 1 < len(self.trainers):
                self.phase += 1
                return []
            self.done = True
            self.converged_at = self.missions_seen
            return self._propagate()

        action = agent.select_action(state)
        agent.decay_noise()
        t = self.tree.config.size_ratio
        cur = self.tree.level(level_index).policy
        new = min(t, max(1, cur + action.delta))
        applied = []
        if new != cur:
            apply_flexible(self.tree, level_index, new)
            applied.append(TransitionRequest(level_index, new, TransitionKind.FLEXIBLE))
        self.last_action = f"{level_index}:{action.delta:+d}"
        trainer.prev_state = state
        trainer.prev_action = action
        # streak tracks the policy actually in force for the coming mission
        trainer.note_policy(new)
        return applied


def heuristic_deltas(stats: MissionStats, h_bottom: float, h_top: float,
                     level_count: int) -> list[tuple[int, int]]:
    """Threshold detector: one (level, delta) per level.

    A level whose observed lookup share is below ``h_bottom`` turns lazier
    (delta +1); above ``h_top`` it turns more aggressive (delta -1).
    """
    if not 0.0 <= h_bottom <= h_top <= 1.0:
        raise ValueError("need 0 <= h_bottom <= h_top <= 1")
    out = []
    for i in range(1, level_count + 1):
        lt = stats.level(i)
        denom = lt.lookups + lt.entries_in
        if denom == 0:
            out.append((i, 0))
            continue
        frac = lt.lookups / denom
        if frac < h_bottom:
            out.append((i, 1))
        elif frac > h_top:
            out.append((i, -1))
        else:
            out.append((i, 0))
    return out


class HeuristicTuner:
    """Applies the threshold detector through flexible transitions."""

    def __init__(self, tree: FlsmTree, h_bottom: float, h_top: float):
        if not 0.0 <= h_bottom <= h_top <= 1.0:
            raise ValueError("need 0 <= h_bottom <= h_top <= 1")
        self.tree = tree
        self.h_bottom = h_bottom
        self.h_top = h_top
        self.last_reward: float | None = None
        self.last_action: str = ""

    def end_of_mission(self, stats: MissionStats) -> list[TransitionRequest]:
        tree = self.tree
        t = tree.config.size_ratio
        applied = []
        parts = []
        for i, delta in heuristic_deltas(stats, self.h_bottom, self.h_top,
                                         len(tree.levels)):
            parts.append(f"{i}:{delta:+d}")
            cur = tree.level(i).policy
            new = min(t, max(1, cur + delta))
            if new != cur:
                apply_flexible(tree, i, new)
                applied.append(TransitionRequest(i, new, TransitionKind.FLEXIBLE))
        self.last_action = "|".join(parts)
        return applied
