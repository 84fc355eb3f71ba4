import math
from collections import deque

import pytest

from edgesched import cluster
from edgesched.cluster import (
    InFlight,
    InfeasibleAction,
    SchedulingDeadlock,
    advance_to_decision,
    begin_upgrade,
    check_invariants,
    concurrent_uploads,
    feasible_nodes,
    finish_upgrade,
    is_done,
    maybe_begin_next_upgrade,
    place_head_task,
)
from edgesched.latency import total_latency
from edgesched.records import DownloadJob, ImageRecord, UpgradePhase

from helpers import make_node, make_state, make_task

IMAGES = {1: ImageRecord(1, 2.0), 2: ImageRecord(2, 0.5), 3: ImageRecord(3, 4.0)}

# channel constants for node bw=100 Mb/s, task at 50 m, 23 dBm, alpha 4
NOISE_100 = 3.981071705534986e-13
COMM_50MB = 0.030691506762808775
COMM_50MB_SHARED = 0.06138301352561755


def two_node_state(pending=(), **kwargs):
    nodes = [make_node(0), make_node(1, position=(10.0, 0.0))]
    return make_state(nodes, IMAGES, pending=pending, **kwargs)


def test_feasible_filters_cpu_mem():
    state = two_node_state()
    state.nodes[0].cpu_free = 1.0
    assert feasible_nodes(state, make_task(cpu=2.0)) == {1}
    state.nodes[1].mem_free = 3.0
    assert feasible_nodes(state, make_task(cpu=2.0, mem=4.0)) == set()


def test_feasible_excludes_upgrading():
    state = two_node_state()
    state.nodes[0].phase = UpgradePhase.UPGRADING
    assert feasible_nodes(state, make_task()) == {1}


def test_feasible_storage_rule():
    state = two_node_state()
    state.nodes[0].storage_free = 1.0  # image 1 needs 2.0 Gb
    assert feasible_nodes(state, make_task(image_id=1)) == {1}
    # cached: no storage needed
    state.nodes[0].cached_images.add(1)
    assert feasible_nodes(state, make_task(image_id=1)) == {0, 1}


def test_feasible_admits_queued_image():
    # storage already debited when the pull was enqueued; no second charge
    state = two_node_state()
    state.nodes[0].download_queue.append(DownloadJob(1, 1.5, 2.0))
    state.nodes[0].storage_free = 0.0
    assert 0 in feasible_nodes(state, make_task(image_id=1))


def test_place_head_task_breakdown_and_debits():
    task = make_task(cpu=2.0, mem=4.0, work=30.0, data=50.0, image_id=1)
    state = two_node_state(pending=[task])
    placed, bd, evicted = place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    assert placed is task and not evicted
    assert bd.comm_s == pytest.approx(COMM_50MB, rel=1e-12)
    assert bd.download_s == pytest.approx(20.0)  # 2 Gb at 100 Mb/s
    assert bd.compute_s == pytest.approx(1.5)  # 30 gcycles at 20 GHz
    assert bd.total_s == bd.comm_s + bd.download_s + bd.compute_s
    node = state.nodes[0]
    assert node.cpu_free == 14.0 and node.mem_free == 28.0
    assert node.storage_free == 48.0
    assert [j.image_id for j in node.download_queue] == [1]
    assert state.in_flight[task.id].finish_s == bd.total_s
    check_invariants(state)


def test_place_infeasible_raises():
    task = make_task(cpu=99.0)
    state = two_node_state(pending=[task])
    with pytest.raises(InfeasibleAction):
        place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    state2 = two_node_state()
    with pytest.raises(InfeasibleAction, match="no pending task"):
        place_head_task(state2, 0, [NOISE_100, NOISE_100], 4.0)


def test_second_task_reuses_queued_pull():
    t1 = make_task(0, image_id=1)
    t2 = make_task(1, image_id=1)
    state = two_node_state(pending=[t1, t2])
    _, bd1, _ = place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    _, bd2, _ = place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    node = state.nodes[0]
    assert len(node.download_queue) == 1  # no duplicate entry
    assert node.storage_free == 48.0  # debited once
    assert bd2.download_s == pytest.approx(20.0)  # waits for the same pull
    # the second upload shares the band with the first, still in comm phase
    assert bd2.comm_s == pytest.approx(COMM_50MB_SHARED, rel=1e-12)


def test_concurrent_uploads_window():
    state = two_node_state()
    task = make_task(0)
    bd = total_latency(2.0, 0.0, 3.0)
    state.in_flight[0] = InFlight(task, 0, 0.0, 5.0, bd)
    assert concurrent_uploads(state, 0) == 2  # newcomer + one mid-upload
    assert concurrent_uploads(state, 1) == 1
    state.clock = 2.0  # comm phase [0, 2) is over
    assert concurrent_uploads(state, 0) == 1


def test_begin_upgrade_drains_to_pending():
    t1, t2 = make_task(0, cpu=2.0, mem=4.0), make_task(1, cpu=3.0, mem=5.0)
    state = two_node_state(pending=[t1, t2])
    place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    begin_upgrade(state)
    node = state.nodes[0]
    assert node.phase is UpgradePhase.UPGRADING
    assert node.running == set() and not state.in_flight
    assert node.cpu_free == 16.0 and node.mem_free == 32.0
    assert [t.id for t in state.pending] == [0, 1]
    assert state.evicted_ids == {0, 1}
    assert state.upgrade_finish_s == 60.0
    with pytest.raises(RuntimeError, match="already in progress"):
        begin_upgrade(state)
    check_invariants(state)


def test_evicted_replacement_skips_comm():
    t1 = make_task(0, image_id=2)
    state = two_node_state(pending=[t1])
    place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    begin_upgrade(state)
    _, bd, evicted = place_head_task(state, 1, [NOISE_100, NOISE_100], 4.0)
    assert evicted
    assert bd.comm_s == 0.0
    assert bd.compute_s == pytest.approx(1.5)  # full work restarts
    assert state.evicted_ids == set()


def test_finish_upgrade_advances_cursor():
    state = two_node_state()
    begin_upgrade(state)
    state.clock = 60.0
    finish_upgrade(state)
    assert state.nodes[0].phase is UpgradePhase.UPGRADED
    assert state.upgrade_cursor == 1
    assert state.upgrade_finish_s is None
    with pytest.raises(RuntimeError, match="not upgrading"):
        finish_upgrade(state)


def test_upgrade_preserves_cache():
    state = two_node_state()
    state.nodes[0].cached_images |= {1, 2}
    before = set(state.nodes[0].cached_images)
    begin_upgrade(state)
    state.clock = 60.0
    finish_upgrade(state)
    assert state.nodes[0].cached_images == before


def test_maybe_begin_waits_for_evicted_pending():
    t1 = make_task(0)
    state = two_node_state(pending=[t1])
    place_head_task(state, 0, [NOISE_100, NOISE_100], 4.0)
    begin_upgrade(state)  # evicts task 0 back to pending
    state.clock = 60.0
    finish_upgrade(state)
    maybe_begin_next_upgrade(state)  # blocked: evicted task not yet re-decided
    assert state.nodes[1].phase is UpgradePhase.NOT_UPGRADED
    place_head_task(state, 1, [NOISE_100, NOISE_100], 4.0)
    maybe_begin_next_upgrade(state)
    assert state.nodes[1].phase is UpgradePhase.UPGRADING


def test_queue_drains_with_clock():
    state = two_node_state()
    node = state.nodes[0]
    node.download_queue.append(DownloadJob(1, 2.0, 2.0))  # 20 s at 100 Mb/s
    node.download_queue.append(DownloadJob(2, 0.5, 0.5))  # then 5 s
    begin_upgrade(state)  # creates a future event so the clock can move
    cluster._drain_queues(state, 12.0)
    state.clock = 12.0
    assert node.download_queue[0].remaining_gbit == pytest.approx(0.8)
    cluster._drain_queues(state, 26.0)
    state.clock = 26.0
    assert node.cached_images == {1, 2}
    assert node.download_queue == []


def test_advance_waits_for_capacity():
    big = make_task(0, cpu=16.0, mem=4.0)
    blocked = make_task(1, cpu=1.0, mem=1.0)
    nodes = [make_node(0, cpu=16.0)]
    state = make_state(nodes, IMAGES, pending=[big, blocked])
    state.upgrade_cursor = 1  # upgrades already over, isolate the capacity wait
    place_head_task(state, 0, [NOISE_100], 4.0)
    finish = state.in_flight[0].finish_s
    advance_to_decision(state)
    assert state.clock == pytest.approx(finish)
    assert state.pending[0] is blocked
    assert feasible_nodes(state, blocked) == {0}


def test_advance_deadlock():
    impossible = make_task(0, cpu=99.0)
    state = make_state([make_node(0)], IMAGES, pending=[impossible])
    state.upgrade_cursor = 1
    with pytest.raises(SchedulingDeadlock):
        advance_to_decision(state)


def test_deadlock_waits_out_upgrades_first():
    # infeasible now, but a running upgrade might change things: not a deadlock yet
    impossible = make_task(0, cpu=99.0)
    state = make_state([make_node(0), make_node(1)], IMAGES, pending=[impossible])
    begin_upgrade(state)
    with pytest.raises(SchedulingDeadlock):
        advance_to_decision(state)  # both upgrades complete, task still stuck
    assert state.upgrade_cursor == 2
    assert all(n.phase is UpgradePhase.UPGRADED for n in state.nodes)


def test_is_done():
    state = two_node_state()
    assert not is_done(state)
    state.upgrade_cursor = 2
    assert is_done(state)
    state.pending.append(make_task(7))
    assert not is_done(state)
