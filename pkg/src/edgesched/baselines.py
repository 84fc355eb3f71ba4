"""Heuristic schedulers in the style of common container-orchestrator plugins.

Each selector takes the current feasible set and returns one node id.
Score-based selectors break ties by lowest node id, so every policy except
the random one is fully deterministic given the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterState
from .records import TaskRecord


@dataclass(frozen=True)
class ScoredNode:
    node_id: int
    score: float


def _best(scored: list[ScoredNode]) -> int:
    if not scored:
        raise ValueError("empty feasible set")
    return max(scored, key=lambda s: (s.score, -s.node_id)).node_id


def eq_select(feasible: set[int], rng: np.random.Generator) -> int:
    """Equal odds for every feasible node."""
    if not feasible:
        raise ValueError("empty feasible set")
    return int(rng.choice(sorted(feasible)))


def rb_scores(feasible: set[int], state: ClusterState, task: TaskRecord) -> list[ScoredNode]:
    """Resource balance: prefer nodes whose cpu and mem utilization would align."""
    out = []
    for i in sorted(feasible):
        node = state.nodes[i]
        u_cpu = (node.cpu_cores - node.cpu_free + task.cpu_cores) / node.cpu_cores
        u_mem = (node.mem_gb - node.mem_free + task.mem_gb) / node.mem_gb
        out.append(ScoredNode(i, 1.0 - abs(u_cpu - u_mem)))
    return out


def rb_select(feasible: set[int], state: ClusterState, task: TaskRecord) -> int:
    return _best(rb_scores(feasible, state, task))


def la_scores(feasible: set[int], state: ClusterState, task: TaskRecord) -> list[ScoredNode]:
    """Least allocated: prefer nodes left with the most free capacity."""
    out = []
    for i in sorted(feasible):
        node = state.nodes[i]
        free_cpu = (node.cpu_free - task.cpu_cores) / node.cpu_cores
        free_mem = (node.mem_free - task.mem_gb) / node.mem_gb
        out.append(ScoredNode(i, (free_cpu + free_mem) / 2.0))
    return out


def la_select(feasible: set[int], state: ClusterState, task: TaskRecord) -> int:
    return _best(la_scores(feasible, state, task))


def il_select(feasible: set[int], state: ClusterState, task: TaskRecord) -> int:
    """Image locality: restrict to nodes already holding the image, if any."""
    cached = {i for i in feasible if task.image_id in state.nodes[i].cached_images}
    return la_select(cached or feasible, state, task)
