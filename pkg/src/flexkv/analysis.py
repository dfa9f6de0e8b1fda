"""Closed-form cost model: transition costs and delays, per-level operation
cost, the optimal-policy solver, and cross-level policy propagation."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .config import CostModelParams
from .transitions import TransitionKind


@dataclass(frozen=True)
class TransitionCostInput:
    """Parameters of one level at the moment a policy transition is applied."""

    size_ratio: int            # T
    level_capacity: float      # C, bytes
    page_size: float           # B, bytes
    entry_size: float          # E, bytes
    old_policy: int            # K
    new_policy: int            # K'
    fill: float                # x, fraction of C stored at transition time
    fpr: float                 # f, Bloom FPR at this level
    lookup_fraction: float     # gamma
    updates_per_sec: float | None = None   # N_u, needed only for the lazy delay

    def __post_init__(self):
        t = self.size_ratio
        if t < 2:
            raise ValueError("size_ratio must be >= 2")
        if not (1 <= self.old_policy <= t and 1 <= self.new_policy <= t):
            raise ValueError(f"policies must lie in [1, {t}]")
        if not 0.0 <= self.fill <= 1.0:
            raise ValueError("fill must lie in [0, 1]")
        if not 0.0 <= self.lookup_fraction < 1.0:
            raise ValueError(
                "lookup_fraction must lie in [0, 1); on a read-only workload "
                "a flexible transition degenerates into a lazy one")
        if not 0.0 <= self.fpr <= 1.0:
            raise ValueError("fpr must lie in [0, 1]")
        for name in ("level_capacity", "page_size", "entry_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def additional_cost_greedy(inp: TransitionCostInput) -> float:
    """Extra write I/O from force-merging a partially filled level.

    The forced merge moves x*C bytes but pays the same active-run rewrite in
    the next level as a full-level merge would, inflating write amplification
    by T/(2Kx) - T/(2K).
    """
    return (inp.size_ratio * inp.level_capacity * (1.0 - inp.fill)
            / (2.0 * inp.page_size * inp.old_policy))


def additional_cost_lazy(inp: TransitionCostInput) -> float:
    """Extra I/O of deferring the switch until the level next fills.

    Lazier-to-aggressive (K > K') pays extra false-positive reads while the
    level keeps growing at the old run granularity; aggressive-to-lazier
    (K < K') pays extra rewrites at the old write amplification.
    """
    k, kp = inp.old_policy, inp.new_policy
    if k > kp:
        g = inp.lookup_fraction
        return (inp.fpr * inp.level_capacity * (1.0 - inp.fill ** 2) * (k - kp) * g
                / (2.0 * inp.entry_size * (1.0 - g)))
    if k < kp:
        return (inp.size_ratio * inp.level_capacity * (1.0 - inp.fill) * (kp - k)
                / (2.0 * inp.page_size * k * kp))
    return 0.0


def additional_cost_flexible(inp: TransitionCostInput, text_variant: bool = False) -> float:
    """Extra read I/O of a flexible transition; zero whenever K <= K'.

    Only the x*C bytes resident before the switch keep the old run
    granularity, so the read-amplification excess is f*x*(K-K') until the
    level fills. ``text_variant`` selects an alternative (1-x) shape kept for
    comparison; the (x - x^2) form is canonical.
    """
    k, kp = inp.old_policy, inp.new_policy
    if k <= kp:
        return 0.0
    g = inp.lookup_fraction
    x = inp.fill
    shape = (1.0 - x) if text_variant else (x - x * x)
    return (inp.fpr * inp.level_capacity * shape * (k - kp) * g
            / (inp.entry_size * (1.0 - g)))


def transition_cost_and_delay(kind: TransitionKind, inp: TransitionCostInput) -> tuple[float, float]:
    """(immediate I/O cost, seconds until the new policy takes effect),
    both amortized over the fill level at transition time."""
    if kind is TransitionKind.GREEDY:
        return inp.level_capacity / (2.0 * inp.page_size), 0.0
    if kind is TransitionKind.LAZY:
        nu = inp.updates_per_sec
        if not nu or nu <= 0:
            raise ValueError("updates_per_sec must be positive for the lazy delay")
        return 0.0, inp.level_capacity / (2.0 * nu * inp.entry_size)
    return 0.0, 0.0


@dataclass(frozen=True)
class LevelCostInput:
    """Per-level steady-state operation cost parameters."""

    policy: int                # K_i
    lookup_fraction: float     # gamma
    size_ratio: int            # T
    entry_size: float          # E
    page_size: float           # B
    fpr: float                 # f_i
    costs: CostModelParams

    def __post_init__(self):
        if not 1 <= self.policy <= self.size_ratio:
            raise ValueError(f"policy must lie in [1, {self.size_ratio}]")
        if not 0.0 <= self.lookup_fraction <= 1.0:
            raise ValueError("lookup_fraction must lie in [0, 1]")
        if not 0.0 <= self.fpr <= 1.0:
            raise ValueError("fpr must lie in [0, 1]")


def level_cost(inp: LevelCostInput) -> float:
    """Expected simulated time one operation spends in this level.

    Lookups pay f*I_r per run in false-positive page reads plus a probe each;
    updates amortize T/K merges, each moving E/B pages both ways plus merge
    CPU per entry.
    """
    k = inp.policy
    g = inp.lookup_fraction
    c = inp.costs
    query = (inp.fpr * c.read_io + c.probe_cpu) * k * g
    update = ((inp.size_ratio * inp.entry_size / (inp.page_size * k))
              * (c.read_io + c.write_io) * (1.0 - g)
              + (inp.size_ratio / k) * c.merge_cpu * (1.0 - g))
    return query + update


def optimal_policy(level_index: int, lookup_fraction: float, size_ratio: int,
                   entry_size: float, page_size: float, level1_fpr: float,
                   costs: CostModelParams) -> float:
    """Real-valued policy minimizing :func:`level_cost` under the geometric
    FPR schedule f_i = T^(i-1) * f_1. Unbounded (inf) for update-only loads."""
    g = lookup_fraction
    if g <= 0.0:
        return math.inf
    if g >= 1.0:
        raise ValueError("lookup_fraction must be < 1")
    fpr_i = level1_fpr * size_ratio ** (level_index - 1)
    num = size_ratio * (entry_size * (costs.read_io + costs.write_io)
                        + page_size * costs.merge_cpu) * (1.0 - g)
    den = page_size * g * (fpr_i * costs.read_io + costs.probe_cpu)
    return math.sqrt(num / den)


def propagate_policy(prev_policy: float, cur_policy: float, size_ratio: int) -> float:
    """Optimal policy of the next deeper level from two consecutive optima.

    Returns the real-valued solution; callers round to the nearest valid
    integer policy. Requires cur <= prev: under the geometric FPR schedule
    optimal policies never increase with depth.
    """
    if cur_policy > prev_policy:
        raise ValueError("requires cur_policy <= prev_policy")
    if cur_policy < 1 or prev_policy < 1:
        raise ValueError("policies must be >= 1")
    inv_cur = 1.0 / (cur_policy * cur_policy)
    inv_prev = 1.0 / (prev_policy * prev_policy)
    radicand = inv_cur + size_ratio * (inv_cur - inv_prev)
    return 1.0 / math.sqrt(radicand)


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def propagate_all(k1: int, k2: int, size_ratio: int, level_count: int) -> tuple[int, ...]:
    """Fill the policies of levels 3..L from the tuned (K1, K2) pair.

    Each entry is rounded half-up and clamped to [1, T]; once a level reaches
    1 every deeper level stays at 1. The result is non-increasing.
    """
    if level_count < 1:
        raise ValueError("level_count must be >= 1")
    if not (1 <= k2 <= size_ratio and 1 <= k1 <= size_ratio):
        raise ValueError(f"policies must lie in [1, {size_ratio}]")
    if k2 > k1:
        raise ValueError("requires k2 <= k1")
    out = [k1, k2]
    while len(out) < level_count:
        prev, cur = out[-2], out[-1]
        if cur == 1:
            out.append(1)
            continue
        nxt = round_half_up(propagate_policy(prev, cur, size_ratio))
        out.append(min(size_ratio, max(1, nxt)))
    return tuple(out[:level_count])
