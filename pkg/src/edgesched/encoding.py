"""Observation encoding, feasibility mask, and the per-decision reward.

The observation is a flat float64 vector of 8N+5 entries: eight per-node
blocks laid out one after the other, then five fields describing the task
being placed. ``layout`` is the single source of truth for the order.
"""

from __future__ import annotations

import numpy as np

from .cluster import ClusterState, feasible_nodes
from .latency import LatencyBreakdown, download_latency
from .records import ScenarioConfig, TaskRecord, kilobytes_to_megabits

TAIL_FIELDS = 5
BLOCKS = (
    "cpu_free",
    "mem_free",
    "storage_free",
    "freq",
    "bandwidth",
    "phase",
    "cached",
    "download_s",
)


def state_dim(node_count: int) -> int:
    return len(BLOCKS) * node_count + TAIL_FIELDS


def layout(node_count: int) -> dict[str, slice]:
    out = {}
    for i, name in enumerate(BLOCKS):
        out[name] = slice(i * node_count, (i + 1) * node_count)
    out["task"] = slice(len(BLOCKS) * node_count, state_dim(node_count))
    return out


def encode(state: ClusterState, task: TaskRecord) -> np.ndarray:
    """Raw (unnormalized) observation for placing ``task`` now."""
    n = len(state.nodes)
    vec = np.empty(state_dim(n), dtype=np.float64)
    at = layout(n)
    image = state.images[task.image_id]
    for i, node in enumerate(state.nodes):
        vec[at["cpu_free"]][i] = node.cpu_free
        vec[at["mem_free"]][i] = node.mem_free
        vec[at["storage_free"]][i] = node.storage_free
        vec[at["freq"]][i] = node.freq_ghz
        vec[at["bandwidth"]][i] = node.bandwidth_mbps
        vec[at["phase"]][i] = float(node.phase)
        vec[at["cached"]][i] = 1.0 if image.id in node.cached_images else 0.0
        vec[at["download_s"]][i] = download_latency(node, image)
    vec[at["task"]] = (
        task.cpu_cores,
        task.mem_gb,
        task.work_gcycles,
        task.data_mbit,
        float(task.image_id),
    )
    return vec


def mask(state: ClusterState, task: TaskRecord) -> np.ndarray:
    """Boolean feasibility per node id; the policy may only pick a True entry."""
    ok = feasible_nodes(state, task)
    return np.array([i in ok for i in range(len(state.nodes))], dtype=bool)


def reward(task: TaskRecord, breakdown: LatencyBreakdown, min_freq_ghz: float) -> float:
    """Latency saved against serving the task on the slowest node's CPU alone."""
    return task.work_gcycles / min_freq_ghz - breakdown.total_s


def normalize(raw: np.ndarray, cfg: ScenarioConfig, download_max: float | None = None) -> np.ndarray:
    """Stateless max-scaling of one raw vector; see ``Normalizer`` for episodes."""
    scaler = Normalizer(cfg)
    if download_max is not None:
        scaler._download_max = max(1.0, download_max)
    return scaler(raw)


class Normalizer:
    """Scale raw observations into roughly [0, 1] using config-level maxima.

    Download estimates have no a-priori bound (queues grow), so that block
    is scaled by the largest value seen so far in the episode; call
    ``reset`` between episodes.
    """

    def __init__(self, cfg: ScenarioConfig):
        n = cfg.node_count
        self._at = layout(n)
        scale = np.ones(state_dim(n), dtype=np.float64)
        scale[self._at["cpu_free"]] = cfg.node_cpu_cores[1]
        scale[self._at["mem_free"]] = cfg.node_mem_gb[1]
        scale[self._at["storage_free"]] = cfg.node_storage_gbit[1]
        scale[self._at["freq"]] = cfg.node_freq_ghz[1]
        scale[self._at["bandwidth"]] = cfg.node_bandwidth_mbps[1]
        scale[self._at["phase"]] = 2.0
        scale[self._at["task"]] = (
            cfg.task_cpu_cores[1],
            cfg.task_mem_gb[1],
            cfg.task_work_gcycles[1],
            kilobytes_to_megabits(cfg.task_data_kb[1]),
            float(cfg.image_count),
        )
        self._scale = scale
        self._download_max = 1.0

    def reset(self):
        self._download_max = 1.0

    def __call__(self, raw: np.ndarray) -> np.ndarray:
        down = self._at["download_s"]
        peak = float(raw[down].max()) if raw[down].size else 0.0
        self._download_max = max(self._download_max, peak)
        out = raw / self._scale
        out[down] = raw[down] / self._download_max
        return out
