"""Latency model: wireless uplink, queued image pulls, computation.

Every function is pure; the simulator owns all mutation. A placement's
total latency is comm + download + compute, each term computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .records import ImageRecord, NodeRecord

GBIT_TO_MBIT = 1000.0
MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class ChannelParams:
    """Uplink channel between one task source and one node."""

    tx_power_w: float
    noise_w: float
    path_loss_exponent: float

    def __post_init__(self):
        if self.noise_w <= 0:
            raise ValueError("noise power must be > 0")
        if self.path_loss_exponent <= 0:
            raise ValueError("path loss exponent must be > 0")


@dataclass(frozen=True)
class LatencyBreakdown:
    comm_s: float
    download_s: float
    compute_s: float
    total_s: float


def total_latency(comm_s: float, download_s: float, compute_s: float) -> LatencyBreakdown:
    for name, v in (("comm", comm_s), ("download", download_s), ("compute", compute_s)):
        if v < 0 or not math.isfinite(v):
            raise ValueError(f"{name} latency must be finite and >= 0, got {v}")
    return LatencyBreakdown(comm_s, download_s, compute_s, comm_s + download_s + compute_s)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def noise_power_w(density_dbm_per_hz: float, bandwidth_mbps: float) -> float:
    """Thermal noise over the node's allocated band (bandwidth read in MHz)."""
    return dbm_to_watts(density_dbm_per_hz) * bandwidth_mbps * 1e6


def channel_gain(distance_m: float, path_loss_exponent: float) -> float:
    """Distance-power-law gain d^-alpha, clamped below one meter."""
    if distance_m <= 0:
        raise ValueError(f"distance must be > 0, got {distance_m}")
    return max(distance_m, MIN_DISTANCE_M) ** -path_loss_exponent


def snr(tx_power_w: float, gain: float, noise_w: float) -> float:
    if noise_w <= 0:
        raise ValueError("noise power must be > 0")
    return tx_power_w * gain / noise_w

def uplink_rate(bandwidth_mbps: float, concurrent: int, snr_value: float) -> float:
    """Shannon rate of one upload when the node splits its band ``concurrent`` ways."""
    if concurrent < 1:
        raise ValueError(f"concurrent uploads must be >= 1, got {concurrent}")
    if snr_value < 0:
        raise ValueError("snr must be >= 0")
    return bandwidth_mbps / concurrent * math.log2(1.0 + snr_value)


def comm_latency(data_mbit: float, rate_mbps: float) -> float:
    if rate_mbps <= 0:
        raise ValueError("uplink rate must be > 0")
    if data_mbit < 0:
        raise ValueError("data size must be >= 0")
    return data_mbit / rate_mbps


def queue_delay(node: NodeRecord) -> float:
    """Seconds until the node's download queue is empty, FIFO at full bandwidth."""
    backlog_gbit = sum(job.remaining_gbit for job in node.download_queue)
    return backlog_gbit * GBIT_TO_MBIT / node.bandwidth_mbps


def download_latency(node: NodeRecord, image: ImageRecord) -> float:
    """Wait until ``image`` is locally available, without mutating the queue.

    Cached images cost nothing. An image already in the queue costs the time
    for the queue to reach and finish that entry. A fresh pull waits out the
    whole backlog, then its own transfer.
    """
    if image.id in node.cached_images:
        return 0.0
    ahead_gbit = 0.0
    for job in node.download_queue:
        ahead_gbit += job.remaining_gbit
        if job.image_id == image.id:
            return ahead_gbit * GBIT_TO_MBIT / node.bandwidth_mbps
    return image.size_gbit * GBIT_TO_MBIT / node.bandwidth_mbps + queue_delay(node)


def comp_latency(work_gcycles: float, freq_ghz: float) -> float:
    if freq_ghz <= 0:
        raise ValueError("frequency must be > 0")
    if work_gcycles < 0:
        raise ValueError("work must be >= 0")
    return work_gcycles / freq_ghz
