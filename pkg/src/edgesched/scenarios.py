"""Seeded scenario generation.

One ``generate_scenario`` call produces the whole episode input: an image
catalog, a heterogeneous node fleet with warm caches, and a timed task
stream. The draw order (images, then nodes, then tasks) is part of the
contract; changing it changes every seeded run.

CPU demands are whole cores and memory demands quarter-GB, so free-resource
accounting stays exact in binary floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .latency import dbm_to_watts
from .records import (
    ImageRecord,
    NodeRecord,
    ScenarioConfig,
    TaskRecord,
    kilobytes_to_megabits,
    validate_scenario,
)


@dataclass
class Scenario:
    nodes: list[NodeRecord]
    tasks: list[TaskRecord]
    images: dict[int, ImageRecord]
    cfg: ScenarioConfig
    seed: int


def draw_image_id(rng: np.random.Generator, cfg: ScenarioConfig) -> int:
    """Popularity-weighted image pick: rounded normal, clamped to the catalog."""
    mean = cfg.image_mean_frac * cfg.image_count
    std = cfg.image_std_frac * cfg.image_count
    raw = int(round(rng.normal(mean, std)))
    return min(max(raw, 1), cfg.image_count)


def _quarter_steps(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    return rng.integers(round(lo * 4), round(hi * 4) + 1, size=size) / 4.0


def generate_scenario(cfg: ScenarioConfig, seed: int | None = None) -> Scenario:
    bad = validate_scenario(cfg)
    if bad:
        raise ValueError("invalid scenario config: " + "; ".join(bad))
    if seed is None:
        seed = cfg.seed
    rng = np.random.default_rng(seed)
    side = cfg.area_side()

    images = {
        i + 1: ImageRecord(id=i + 1, size_gbit=float(s))
        for i, s in enumerate(rng.uniform(*cfg.image_size_gbit, size=cfg.image_count))
    }

    nodes = []
    for n in range(cfg.node_count):
        node = NodeRecord(
            id=n,
            cpu_cores=float(rng.integers(round(cfg.node_cpu_cores[0]), round(cfg.node_cpu_cores[1]) + 1)),
            mem_gb=float(rng.integers(round(cfg.node_mem_gb[0]), round(cfg.node_mem_gb[1]) + 1)),
            storage_gbit=float(rng.uniform(*cfg.node_storage_gbit)),
            freq_ghz=float(rng.uniform(*cfg.node_freq_ghz)),
            bandwidth_mbps=float(rng.uniform(*cfg.node_bandwidth_mbps)),
            position=(float(rng.uniform(0, side)), float(rng.uniform(0, side))),
        )
        # warm cache: distinct images, skipping any that would overflow storage
        for img_id in rng.choice(cfg.image_count, size=cfg.images_per_node, replace=False):
            img = images[int(img_id) + 1]
            if img.size_gbit <= node.storage_free:
                node.cached_images.add(img.id)
                node.storage_free -= img.size_gbit
        nodes.append(node)

    tx_power_w = dbm_to_watts(cfg.tx_power_dbm)
    interval = cfg.arrival_interval_s()
    cpu = rng.integers(round(cfg.task_cpu_cores[0]), round(cfg.task_cpu_cores[1]) + 1, size=cfg.task_count)
    mem = _quarter_steps(rng, *cfg.task_mem_gb, size=cfg.task_count)
    work = rng.uniform(*cfg.task_work_gcycles, size=cfg.task_count)
    data_kb = rng.uniform(*cfg.task_data_kb, size=cfg.task_count)
    pos = rng.uniform(0, side, size=(cfg.task_count, 2))
    tasks = [
        TaskRecord(
            id=k,
            cpu_cores=float(cpu[k]),
            mem_gb=float(mem[k]),
            work_gcycles=float(work[k]),
            data_mbit=kilobytes_to_megabits(float(data_kb[k])),
            image_id=draw_image_id(rng, cfg),
            position=(float(pos[k, 0]), float(pos[k, 1])),
            arrival_s=k * interval,
            tx_power_w=tx_power_w,
        )
        for k in range(cfg.task_count)
    ]
    return Scenario(nodes=nodes, tasks=tasks, images=images, cfg=cfg, seed=seed)
