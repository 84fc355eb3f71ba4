"""Shared test utilities: numeric gradients and hand-built cluster states."""

from __future__ import annotations

from collections import deque

import numpy as np

from edgesched.cluster import ClusterState
from edgesched.net import flatten, set_flat
from edgesched.records import DownloadJob, ImageRecord, NodeRecord, TaskRecord


def numeric_grad(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of a flat vector."""
    g = np.zeros_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] = x[i] + h
        hi = fn(bumped)
        bumped[i] = x[i] - h
        lo = fn(bumped)
        g[i] = (hi - lo) / (2 * h)
    return g


def layer_grad_numeric(loss_of_layers, layers, h: float = 1e-6) -> np.ndarray:
    """Numeric gradient w.r.t. a flattened layer list, restoring it afterwards."""
    x0 = flatten(layers)

    def fn(vec):
        set_flat(layers, vec)
        return loss_of_layers()

    try:
        return numeric_grad(fn, x0, h)
    finally:
        set_flat(layers, x0)


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def make_node(
    node_id: int = 0,
    cpu: float = 16.0,
    mem: float = 32.0,
    storage: float = 50.0,
    freq: float = 20.0,
    bandwidth: float = 100.0,
    position: tuple[float, float] = (0.0, 0.0),
    cached: set[int] | None = None,
    queue: list[DownloadJob] | None = None,
) -> NodeRecord:
    node = NodeRecord(
        id=node_id,
        cpu_cores=cpu,
        mem_gb=mem,
        storage_gbit=storage,
        freq_ghz=freq,
        bandwidth_mbps=bandwidth,
        position=position,
    )
    for img in cached or set():
        node.cached_images.add(img)
    for job in queue or []:
        node.download_queue.append(job)
    return node


def make_task(
    task_id: int = 0,
    cpu: float = 2.0,
    mem: float = 4.0,
    work: float = 30.0,
    data: float = 50.0,
    image_id: int = 1,
    position: tuple[float, float] = (30.0, 40.0),
    arrival: float = 0.0,
    tx_power_w: float = 0.19952623149688797,
) -> TaskRecord:
    return TaskRecord(
        id=task_id,
        cpu_cores=cpu,
        mem_gb=mem,
        work_gcycles=work,
        data_mbit=data,
        image_id=image_id,
        position=position,
        arrival_s=arrival,
        tx_power_w=tx_power_w,
    )


def make_state(
    nodes: list[NodeRecord],
    images: dict[int, ImageRecord],
    pending: list[TaskRecord] = (),
    arrivals: list[TaskRecord] = (),
    upgrade_duration: float = 60.0,
    slot: float = 1.0,
) -> ClusterState:
    return ClusterState(
        nodes=nodes,
        images=images,
        upgrade_duration_s=upgrade_duration,
        slot_s=slot,
        pending=deque(pending),
        arrivals=deque(arrivals),
    )
