"""Compaction-policy transition mechanisms: greedy, lazy, and flexible."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .engine import FlsmTree, InputError


class TransitionKind(enum.Enum):
    GREEDY = "greedy"
    LAZY = "lazy"
    FLEXIBLE = "flexible"


@dataclass(frozen=True)
class TransitionRequest:
    level_index: int
    new_policy: int
    kind: TransitionKind


def _checked_level(tree: FlsmTree, level_index: int, new_policy: int):
    t = tree.config.size_ratio
    if not 1 <= new_policy <= t:
        raise InputError(f"policy {new_policy} outside [1, {t}]")
    if not 1 <= level_index <= tree.config.max_levels:
        raise InputError(f"level index {level_index} outside [1, {tree.config.max_levels}]")
    while len(tree.levels) < level_index:
        tree.materialize_level(len(tree.levels) + 1)
    return tree.levels[level_index - 1]


def apply_flexible(tree: FlsmTree, level_index: int, new_policy: int):
    """Switch a level's policy by resizing only its active run.

    Sealed runs are untouched, no pages move, and the very next admission
    already honors the new active-run capacity. If shrinking the active run
    below its current size, it is sealed on the spot and a fresh one opens.
    """
    level = _checked_level(tree, level_index, new_policy)
    level.policy = new_policy
    active = level.active
    if active is not None:
        active.capacity = level.active_capacity()
        if active.num_entries and active.data_size >= active.capacity:
            tree.seal_active(level)
        else:
            active.ensure_filter_capacity()


def apply_lazy(tree: FlsmTree, level_index: int, new_policy: int):
    """Record the policy switch; it takes effect at the level's next
    full-level compaction. Repeated requests coalesce to the latest."""
    level = _checked_level(tree, level_index, new_policy)
    level.pending_policy = new_policy


def apply_greedy(tree: FlsmTree, level_index: int, new_policy: int):
    """Force-compact the level into the next one now, then rebuild it empty
    under the new policy. Charges the full merge I/O immediately."""
    level = _checked_level(tree, level_index, new_policy)
    if level.bytes > 0:
        tree.compact_level(level_index)
    level.policy = new_policy
    level.pending_policy = None


_APPLY = {
    TransitionKind.GREEDY: apply_greedy,
    TransitionKind.LAZY: apply_lazy,
    TransitionKind.FLEXIBLE: apply_flexible,
}


def apply_transition(tree: FlsmTree, request: TransitionRequest):
    _APPLY[request.kind](tree, request.level_index, request.new_policy)
