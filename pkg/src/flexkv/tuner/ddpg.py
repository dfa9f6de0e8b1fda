"""Deterministic policy gradient agent: replay buffer, actor-critic updates,
continuous-to-discrete action mapping, checkpointing."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .networks import Adam, Mlp, soft_update

HIDDEN = (128, 128, 128)
ACTION_THRESHOLD = 1.0 / 3.0


@dataclass(frozen=True)
class TunerConfig:
    """Hyperparameters of the per-level tuner."""

    alpha: float = 0.5               # weight of per-level vs end-to-end latency
    noise_start: float = 0.4
    noise_decay: float = 0.995
    noise_floor: float = 0.05
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    discount: float = 0.9
    tau: float = 0.005               # soft target-update coefficient
    batch_size: int = 32
    buffer_capacity: int = 1024
    train_steps: int = 8             # gradient updates per mission
    converge_window: int = 30        # missions with an unchanged policy
    converge_output_var: float = 0.02
    gamma_shift_tolerance: float = 0.15

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        for name in ("noise_start", "noise_decay", "noise_floor", "actor_lr",
                     "critic_lr", "discount", "tau", "batch_size",
                     "buffer_capacity", "train_steps", "converge_window",
                     "converge_output_var", "gamma_shift_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Action:
    """Policy change for one level: delta in {-1, 0, +1}.

    ``raw`` keeps the continuous pre-threshold value the critic trains on.
    """

    delta: int
    raw: float


@dataclass(frozen=True)
class ExperienceSample:
    state_before: np.ndarray
    action: Action
    reward: float
    state_after: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring; FIFO eviction, uniform sampling w/o replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[ExperienceSample] = []
        self._pos = 0

    def push(self, sample: ExperienceSample):
        if len(self._items) < self.capacity:
            self._items.append(sample)
        else:
            self._items[self._pos] = sample
            self._pos = (self._pos + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def contents(self) -> list[ExperienceSample]:
        """Samples ordered oldest to newest."""
        return self._items[self._pos:] + self._items[:self._pos]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[ExperienceSample]:
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def clear(self):
        self._items = []
        self._pos = 0


def discretize(raw: float) -> int:
    if raw > ACTION_THRESHOLD:
        return 1
    if raw < -ACTION_THRESHOLD:
        return -1
    return 0


class DdpgAgent:
    """One actor-critic pair tuning a single level's policy."""

    def __init__(self, state_dim: int, config: TunerConfig, seed: int = 0):
        self.config = config
        self.state_dim = state_dim
        seqs = np.random.SeedSequence(seed).spawn(3)
        self.actor = Mlp([state_dim, *HIDDEN, 1], "tanh", rng=seqs[0])
        self.critic = Mlp([state_dim + 1, *HIDDEN, 1], "linear", rng=seqs[1])
        self.actor_target = self.actor.clone()
        self.critic_target = self.critic.clone()
        self.actor_opt = Adam(self.actor.params(), config.actor_lr)
        self.critic_opt = Adam(self.critic.params(), config.critic_lr)
        self.rng = np.random.default_rng(seqs[2])
        self.noise_scale = config.noise_start
        self.buffer = ReplayBuffer(config.buffer_capacity)

    def policy_output(self, state: np.ndarray) -> float:
        """Pre-noise actor output in [-1, 1]."""
        y, _ = self.actor.forward(np.asarray(state, np.float64)[None, :])
        return float(y[0, 0])

    def select_action(self, state: np.ndarray) -> Action:
        raw = self.policy_output(state)
        noisy = raw + self.noise_scale * float(self.rng.normal())
        noisy = min(1.0, max(-1.0, noisy))
        return Action(discretize(noisy), noisy)

    def decay_noise(self):
        self.noise_scale = max(self.config.noise_floor,
                               self.noise_scale * self.config.noise_decay)

    def reset_noise(self):
        self.noise_scale = self.config.noise_start

    def train_step(self) -> tuple[float, float] | None:
        """One critic regression + actor ascent + soft target update.

        Returns (critic loss, mean critic value of the actor's actions), or
        None while the replay buffer is smaller than a batch.
        """
        cfg = self.config
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(cfg.batch_size, self.rng)
        s = np.stack([b.state_before for b in batch])
        a = np.array([[b.action.raw] for b in batch])
        r = np.array([b.reward for b in batch])
        s2 = np.stack([b.state_after for b in batch])

        # critic: regress toward r + discount * Q_target(s', actor_target(s'))
        a2, _ = self.actor_target.forward(s2)
        q2, _ = self.critic_target.forward(np.concatenate([s2, a2], axis=1))
        y = r[:, None] + cfg.discount * q2
        q, cache = self.critic.forward(np.concatenate([s, a], axis=1))
        err = q - y
        critic_loss = float(np.mean(err ** 2))
        dq = 2.0 * err / len(err)
        dws, dbs, _ = self.critic.backward(cache, dq)
        self.critic_opt.step(self.critic.params(), _interleave(dws, dbs))

        # actor: ascend mean Q(s, actor(s)) through the frozen critic
        a_pred, a_cache = self.actor.forward(s)
        q_a, c_cache = self.critic.forward(np.concatenate([s, a_pred], axis=1))
        actor_value = float(np.mean(q_a))
        dq_a = np.full_like(q_a, 1.0 / len(q_a))
        _, _, dinp = self.critic.backward(c_cache, dq_a)
        da = dinp[:, self.state_dim:]
        adws, adbs, _ = self.actor.backward(a_cache, da)
        self.actor_opt.step(self.actor.params(),
                            [-g for g in _interleave(adws, adbs)])

        self.soft_update(cfg.tau)
        return critic_loss, actor_value

    def soft_update(self, tau: float):
        soft_update(self.actor_target, self.actor, tau)
        soft_update(self.critic_target, self.critic, tau)

    # -- checkpointing ---------------------------------------------------------

    def _checkpoint_arrays(self) -> list[np.ndarray]:
        arrays = []
        for net in (self.actor, self.critic, self.actor_target, self.critic_target):
            arrays.extend(net.params())
        for opt in (self.actor_opt, self.critic_opt):
            arrays.extend(opt.m)
            arrays.extend(opt.v)
        arrays.append(np.array([self.actor_opt.t, self.critic_opt.t,
                                self.noise_scale], dtype=np.float64))
        return arrays

    def save_checkpoint(self, path: str | Path):
        """Flat little-endian f32 arrays, each preceded by a shape header."""
        arrays = self._checkpoint_arrays()
        out = bytearray(struct.pack("<I", len(arrays)))
        for arr in arrays:
            out += struct.pack("<I", arr.ndim)
            for dim in arr.shape:
                out += struct.pack("<I", dim)
            out += arr.astype("<f4").tobytes()
        Path(path).write_bytes(bytes(out))

    def load_checkpoint(self, path: str | Path):
        blob = Path(path).read_bytes()
        count, = struct.unpack_from("<I", blob, 0)
        off = 4
        arrays = []
        for _ in range(count):
            ndim, = struct.unpack_from("<I", blob, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}I", blob, off)
            off += 4 * ndim
            n = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(blob, "<f4", count=n, offset=off).reshape(shape)
            off += 4 * n
            arrays.append(arr.astype(np.float64))
        targets = self._checkpoint_arrays()
        if len(arrays) != len(targets):
            raise ValueError("checkpoint does not match the agent's layout")
        for dst, src in zip(targets[:-1], arrays[:-1]):
            if dst.shape != src.shape:
                raise ValueError("checkpoint shape mismatch")
            dst[...] = src
        t_actor, t_critic, noise = arrays[-1]
        self.actor_opt.t = int(round(t_actor))
        self.critic_opt.t = int(round(t_critic))
        self.noise_scale = float(noise)


def _interleave(dws, dbs):
    out = []
    for w, b in zip(dws, dbs):
        out.append(w)
        out.append(b)
    return out
