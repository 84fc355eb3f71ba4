"""Core records for the edge-cluster upgrade scheduler.

Units are fixed once here and never converted implicitly elsewhere:
CPU in cores, memory in GB, storage and image sizes in gigabits,
CPU frequency in GHz (= gigacycles/s), bandwidth in Mb/s, task input
data in megabits, distances in meters, time in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import IntEnum
from pathlib import Path


BITS_PER_BYTE = 8


def kilobytes_to_megabits(kb: float) -> float:
    return kb * BITS_PER_BYTE * 1e3 / 1e6


def megabytes_to_megabits(mb: float) -> float:
    return mb * BITS_PER_BYTE


class UpgradePhase(IntEnum):
    """Where a node stands in the rolling upgrade."""

    NOT_UPGRADED = 0
    UPGRADING = 1
    UPGRADED = 2


@dataclass
class DownloadJob:
    """One queued image pull. ``remaining_gbit`` shrinks as the queue drains."""

    image_id: int
    remaining_gbit: float
    size_gbit: float


@dataclass
class NodeRecord:
    """A worker node. Capacities are fixed; the ``*_free`` fields track headroom."""

    id: int
    cpu_cores: float
    mem_gb: float
    storage_gbit: float
    freq_ghz: float
    bandwidth_mbps: float
    position: tuple[float, float]
    cpu_free: float = -1.0
    mem_free: float = -1.0
    storage_free: float = -1.0
    cached_images: set[int] = field(default_factory=set)
    download_queue: list[DownloadJob] = field(default_factory=list)
    phase: UpgradePhase = UpgradePhase.NOT_UPGRADED
    running: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.cpu_free < 0:
            self.cpu_free = self.cpu_cores
        if self.mem_free < 0:
            self.mem_free = self.mem_gb
        if self.storage_free < 0:
            self.storage_free = self.storage_gbit


@dataclass(frozen=True)
class TaskRecord:
    """One container task: resource demands plus the image it must run from."""

    id: int
    cpu_cores: float
    mem_gb: float
    work_gcycles: float
    data_mbit: float
    image_id: int
    position: tuple[float, float]
    arrival_s: float
    tx_power_w: float

    def __post_init__(self):
        for name in ("cpu_cores", "mem_gb", "work_gcycles", "data_mbit", "tx_power_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"task {self.id}: {name} must be > 0")


@dataclass(frozen=True)
class ImageRecord:
    """A container image in the registry."""

    id: int
    size_gbit: float

    def __post_init__(self):
        if self.size_gbit <= 0:
            raise ValueError(f"image {self.id}: size must be > 0")


@dataclass(frozen=True)
class Hyperparams:
    """Knobs for the policy-gradient trainer."""

    actor_lr: float = 1e-4
    critic_lr: float = 3e-4
    gamma: float = 0.98
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    batch_size: int = 32
    epochs: int = 10
    hidden: tuple[int, ...] = (128, 64)
    entropy_coef: float = 0.0
    episodes: int = 500

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be > 0")


_RANGE_FIELDS = {
    "node_cpu_cores",
    "node_freq_ghz",
    "node_mem_gb",
    "node_storage_gbit",
    "node_bandwidth_mbps",
    "task_cpu_cores",
    "task_mem_gb",
    "task_work_gcycles",
    "task_data_kb",
    "image_size_gbit",
}


@dataclass
class ScenarioConfig:
    """Everything needed to generate one reproducible scenario.

    ``area_side_m=None`` means "scale with the cluster": side = 100*sqrt(N/15),
    so node density stays constant as the cluster grows.
    """

    node_count: int = 15
    task_count: int = 200
    image_count: int = 20
    area_side_m: float | None = None
    node_cpu_cores: tuple[float, float] = (80.0, 120.0)
    node_freq_ghz: tuple[float, float] = (15.0, 35.0)
    node_mem_gb: tuple[float, float] = (70.0, 130.0)
    node_storage_gbit: tuple[float, float] = (40.0, 80.0)
    node_bandwidth_mbps: tuple[float, float] = (100.0, 200.0)
    task_cpu_cores: tuple[float, float] = (1.0, 8.0)
    task_mem_gb: tuple[float, float] = (0.5, 8.0)
    task_work_gcycles: tuple[float, float] = (5.0, 50.0)
    task_data_kb: tuple[float, float] = (10.0, 10000.0)
    image_size_gbit: tuple[float, float] = (0.4, 4.0)
    images_per_node: int = 3
    image_mean_frac: float = 0.5
    image_std_frac: float = 1.0 / 6.0
    tx_power_dbm: float = 23.0
    noise_dbm_per_hz: float = -174.0
    path_loss_exponent: float = 4.0
    upgrade_duration_s: float = 60.0
    slot_s: float = 1.0
    seed: int = 0

    def area_side(self) -> float:
        if self.area_side_m is not None:
            return self.area_side_m
        return 100.0 * math.sqrt(self.node_count / 15.0)

    def arrival_interval_s(self) -> float:
        """Arrival spacing that stretches the task stream over the whole upgrade."""
        return self.node_count * self.upgrade_duration_s / self.task_count

    def to_file(self, path: str | Path):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                text = "auto"
            elif f.name in _RANGE_FIELDS:
                text = f"{value[0]!r},{value[1]!r}"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name}={text}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in known:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            if key in kwargs:
                raise ValueError(f"line {lineno}: duplicate key {key!r}")
            kwargs[key] = _parse_value(key, text, lineno)
        return cls(**kwargs)


def _parse_value(key: str, text: str, lineno: int):
    try:
        if key in _RANGE_FIELDS:
            lo, _, hi = text.partition(",")
            return (float(lo), float(hi))
        if key == "area_side_m":
            return None if text == "auto" else float(text)
        if key in ("node_count", "task_count", "image_count", "images_per_node", "seed"):
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ValueError(f"line {lineno}: bad value for {key!r}: {text!r}") from exc


def validate_scenario(cfg: ScenarioConfig) -> list[str]:
    """Return human-readable invariant violations; empty list means valid."""
    bad = []
    if cfg.node_count < 1:
        bad.append("node_count >= 1")
    if cfg.task_count < 1:
        bad.append("task_count >= 1")
    if cfg.image_count < 1:
        bad.append("image_count >= 1")
    if not 0 <= cfg.images_per_node <= cfg.image_count:
        bad.append("0 <= images_per_node <= image_count")
    for f in fields(cfg):
        if f.name not in _RANGE_FIELDS:
            continue
        lo, hi = getattr(cfg, f.name)
        if lo > hi:
            bad.append(f"{f.name}: min <= max")
        if lo <= 0:
            bad.append(f"{f.name}: min > 0")
    if cfg.area_side_m is not None and cfg.area_side_m <= 0:
        bad.append("area_side_m > 0")
    if cfg.upgrade_duration_s <= 0:
        bad.append("upgrade_duration_s > 0")
    if cfg.slot_s <= 0:
        bad.append("slot_s > 0")
    if cfg.path_loss_exponent <= 0:
        bad.append("path_loss_exponent > 0")
    if cfg.image_std_frac <= 0:
        bad.append("image_std_frac > 0")
    return bad


def min_frequency(nodes: list[NodeRecord]) -> float:
    """Frequency of the slowest node; the reward baseline divides by this."""
    if not nodes:
        raise ValueError("no nodes")
    return min(n.freq_ghz for n in nodes)
