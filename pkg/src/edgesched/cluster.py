"""Cluster state machine: placements, download queues, one-at-a-time upgrade.

Time is continuous but decisions happen at discrete instants: whenever the
head of the pending queue has at least one feasible node. Between decisions
the clock jumps event to event (task finish, upgrade completion, arrival),
draining download queues along the way. A task whose head position is
infeasible everywhere waits, rechecked every slot; if nothing in flight can
ever free capacity the episode is declared stuck rather than spun forever.

The rolling upgrade walks nodes in id order. Starting a node drains it:
running tasks are evicted back to the pending queue (flagged, so their
re-placement skips the already-paid upload) and the node is excluded from
feasibility until its upgrade completes. The next node may only start once
no evicted task is still waiting.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .latency import (
    GBIT_TO_MBIT,
    LatencyBreakdown,
    channel_gain,
    comm_latency,
    comp_latency,
    download_latency,
    snr,
    total_latency,
    uplink_rate,
)
from .records import DownloadJob, ImageRecord, NodeRecord, TaskRecord, UpgradePhase
from .scenarios import Scenario


class SchedulingDeadlock(RuntimeError):
    """No feasible node for the head task and no event can change that."""


class InfeasibleAction(ValueError):
    """A placement targeted a node that fails the admission checks."""


@dataclass
class InFlight:
    """A placed task counting down to its finish instant."""

    task: TaskRecord
    node_id: int
    start_s: float
    finish_s: float
    breakdown: LatencyBreakdown


@dataclass
class CompletedTask:
    task_id: int
    node_id: int
    breakdown: LatencyBreakdown


@dataclass
class ClusterState:
    nodes: list[NodeRecord]
    images: dict[int, ImageRecord]
    upgrade_duration_s: float
    slot_s: float
    clock: float = 0.0
    pending: deque[TaskRecord] = field(default_factory=deque)
    arrivals: deque[TaskRecord] = field(default_factory=deque)
    in_flight: dict[int, InFlight] = field(default_factory=dict)
    upgrade_cursor: int = 0
    upgrade_finish_s: float | None = None
    evicted_ids: set[int] = field(default_factory=set)
    completed: list[CompletedTask] = field(default_factory=list)
    invariant_hook: object = None

    def _check(self):
        if self.invariant_hook is not None:
            self.invariant_hook(self)


def initial_state(scenario: Scenario) -> ClusterState:
    cfg = scenario.cfg
    state = ClusterState(
        nodes=scenario.nodes,
        images=scenario.images,
        upgrade_duration_s=cfg.upgrade_duration_s,
        slot_s=cfg.slot_s,
        arrivals=deque(sorted(scenario.tasks, key=lambda t: (t.arrival_s, t.id))),
    )
    return state


def upgrading_node(state: ClusterState) -> NodeRecord | None:
    for node in state.nodes:
        if node.phase is UpgradePhase.UPGRADING:
            return node
    return None


def feasible_nodes(state: ClusterState, task: TaskRecord) -> set[int]:
    """Nodes that pass every admission check for ``task`` right now."""
    image = state.images[task.image_id]
    out = set()
    for node in state.nodes:
        if node.phase is UpgradePhase.UPGRADING:
            continue
        if node.cpu_free < task.cpu_cores or node.mem_free < task.mem_gb:
            continue
        if not _image_available(node, image):
            continue
        out.add(node.id)
    return out


def _image_available(node: NodeRecord, image: ImageRecord) -> bool:
    if image.id in node.cached_images:
        return True
    if any(job.image_id == image.id for job in node.download_queue):
        return True
    return node.storage_free >= image.size_gbit


def concurrent_uploads(state: ClusterState, node_id: int) -> int:
    """Uploads sharing the node's band at this instant, counting the newcomer."""
    busy = sum(
        1
        for fl in state.in_flight.values()
        if fl.node_id == node_id
        and fl.breakdown.comm_s > 0
        and fl.start_s <= state.clock < fl.start_s + fl.breakdown.comm_s
    )
    return 1 + busy


def place_head_task(
    state: ClusterState, node_id: int, noise_w: list[float], path_loss_exponent: float
) -> tuple[TaskRecord, LatencyBreakdown, bool]:
    """Commit the head pending task to ``node_id`` and start its countdown.

    Returns the task, its latency breakdown, and whether this was a
    re-placement of an evicted task (those skip the upload: the input data
    already reached the cluster the first time).
    """
    if not state.pending:
        raise InfeasibleAction("no pending task to place")
    task = state.pending[0]
    if node_id not in feasible_nodes(state, task):
        raise InfeasibleAction(f"node {node_id} infeasible for task {task.id}")
    state.pending.popleft()
    node = state.nodes[node_id]
    image = state.images[task.image_id]
    was_evicted = task.id in state.evicted_ids

    if was_evicted:
        comm = 0.0
    else:
        gain = channel_gain(math.dist(task.position, node.position), path_loss_exponent)
        rate = uplink_rate(
            node.bandwidth_mbps,
            concurrent_uploads(state, node_id),
            snr(task.tx_power_w, gain, noise_w[node_id]),
        )
        comm = comm_latency(task.data_mbit, rate)

    down = download_latency(node, image)
    if image.id not in node.cached_images and not any(
        job.image_id == image.id for job in node.download_queue
    ):
        node.download_queue.append(DownloadJob(image.id, image.size_gbit, image.size_gbit))
        node.storage_free -= image.size_gbit

    breakdown = total_latency(comm, down, comp_latency(task.work_gcycles, node.freq_ghz))
    node.cpu_free -= task.cpu_cores
    node.mem_free -= task.mem_gb
    node.running.add(task.id)
    state.in_flight[task.id] = InFlight(
        task, node_id, state.clock, state.clock + breakdown.total_s, breakdown
    )
    state.evicted_ids.discard(task.id)
    state._check()
    return task, breakdown, was_evicted


def begin_upgrade(state: ClusterState):
    """Drain and take down the next node in id order."""
    if upgrading_node(state) is not None:
        raise RuntimeError("an upgrade is already in progress")
    if state.upgrade_cursor >= len(state.nodes):
        raise RuntimeError("all nodes already upgraded")
    node = state.nodes[state.upgrade_cursor]
    for tid in sorted(node.running):
        fl = state.in_flight.pop(tid)
        node.cpu_free += fl.task.cpu_cores
        node.mem_free += fl.task.mem_gb
        state.evicted_ids.add(tid)
        state.pending.append(fl.task)
    node.running.clear()
    node.phase = UpgradePhase.UPGRADING
    state.upgrade_finish_s = state.clock + state.upgrade_duration_s
    state._check()


def finish_upgrade(state: ClusterState):
    node = state.nodes[state.upgrade_cursor]
    if node.phase is not UpgradePhase.UPGRADING:
        raise RuntimeError(f"node {node.id} is not upgrading")
    node.phase = UpgradePhase.UPGRADED
    state.upgrade_cursor += 1
    state.upgrade_finish_s = None
    state._check()


def maybe_begin_next_upgrade(state: ClusterState):
    """Start the next node unless one is mid-upgrade or evictees still wait."""
    if state.upgrade_finish_s is not None:
        return
    if state.upgrade_cursor >= len(state.nodes):
        return
    if state.evicted_ids & {t.id for t in state.pending}:
        return
    begin_upgrade(state)


def is_done(state: ClusterState) -> bool:
    return (
        state.upgrade_cursor == len(state.nodes)
        and not state.pending
        and not state.arrivals
        and not state.in_flight
    )


def _next_event_s(state: ClusterState) -> float:
    t = math.inf
    if state.in_flight:
        t = min(t, min(fl.finish_s for fl in state.in_flight.values()))
    if state.upgrade_finish_s is not None:
        t = min(t, state.upgrade_finish_s)
    if state.arrivals:
        t = min(t, state.arrivals[0].arrival_s)
    return t


def _drain_queues(state: ClusterState, until_s: float):
    """Advance FIFO image pulls; completed pulls become cached."""
    dt = until_s - state.clock
    for node in state.nodes:
        left = dt
        while node.download_queue and left > 0:
            job = node.download_queue[0]
            need = job.remaining_gbit * GBIT_TO_MBIT / node.bandwidth_mbps
            if need <= left:
                left -= need
                node.download_queue.pop(0)
                node.cached_images.add(job.image_id)
            else:
                job.remaining_gbit -= left * node.bandwidth_mbps / GBIT_TO_MBIT
                left = 0.0


def _complete_task(state: ClusterState, task_id: int):
    fl = state.in_flight.pop(task_id)
    node = state.nodes[fl.node_id]
    node.cpu_free += fl.task.cpu_cores
    node.mem_free += fl.task.mem_gb
    node.running.discard(task_id)
    state.completed.append(CompletedTask(task_id, fl.node_id, fl.breakdown))


def _fire_events_at(state: ClusterState, now_s: float):
    for tid in sorted(t for t, fl in state.in_flight.items() if fl.finish_s <= now_s):
        _complete_task(state, tid)
    if state.upgrade_finish_s is not None and state.upgrade_finish_s <= now_s:
        finish_upgrade(state)
    while state.arrivals and state.arrivals[0].arrival_s <= now_s:
        state.pending.append(state.arrivals.popleft())
    maybe_begin_next_upgrade(state)
    state._check()


def advance_to_decision(state: ClusterState):
    """Run the clock until the head task is placeable or the episode ends."""
    while True:
        if state.pending:
            task = state.pending[0]
            if feasible_nodes(state, task):
                return
            if state.upgrade_finish_s is None and not state.in_flight:
                maybe_begin_next_upgrade(state)
                if state.upgrade_finish_s is None:
                    raise SchedulingDeadlock(
                        f"task {task.id} fits no node and nothing in flight can free one"
                    )
            # deferred: wait out one slot, but never skip over an event
            step_to = min(state.clock + state.slot_s, _next_event_s(state))
            _drain_queues(state, step_to)
            state.clock = step_to
            _fire_events_at(state, step_to)
            continue
        if is_done(state):
            return
        event_s = _next_event_s(state)
        if not math.isfinite(event_s):
            maybe_begin_next_upgrade(state)
            if state.upgrade_finish_s is None:
                raise RuntimeError("episode stalled with no future event")
            continue
        _drain_queues(state, event_s)
        state.clock = event_s
        _fire_events_at(state, event_s)


def check_invariants(state: ClusterState):
    """Assert conservation and upgrade invariants; cpu/mem must match exactly."""
    upgrading = [n for n in state.nodes if n.phase is UpgradePhase.UPGRADING]
    assert len(upgrading) <= 1, "more than one node upgrading"
    running_union = set()
    for node in state.nodes:
        used_cpu = sum(state.in_flight[t].task.cpu_cores for t in node.running)
        used_mem = sum(state.in_flight[t].task.mem_gb for t in node.running)
        assert node.cpu_free == node.cpu_cores - used_cpu, f"node {node.id} cpu drift"
        assert node.mem_free == node.mem_gb - used_mem, f"node {node.id} mem drift"
        assert 0 <= node.cpu_free <= node.cpu_cores, f"node {node.id} cpu out of range"
        assert 0 <= node.mem_free <= node.mem_gb, f"node {node.id} mem out of range"
        held = sum(state.images[i].size_gbit for i in node.cached_images)
        held += sum(job.size_gbit for job in node.download_queue)
        assert abs(node.storage_free - (node.storage_gbit - held)) < 1e-9, (
            f"node {node.id} storage drift"
        )
        assert node.storage_free >= -1e-9, f"node {node.id} storage oversubscribed"
        if node.phase is UpgradePhase.UPGRADING:
            assert not node.running, f"upgrading node {node.id} still runs tasks"
        assert running_union.isdisjoint(node.running)
        running_union |= node.running
    assert running_union == set(state.in_flight), "running sets disagree with in-flight"
    done_ids = [c.task_id for c in state.completed]
    assert len(done_ids) == len(set(done_ids)), "task completed twice"
    assert set(done_ids).isdisjoint(state.in_flight), "completed task still in flight"
