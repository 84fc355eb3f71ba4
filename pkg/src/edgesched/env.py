"""Episode driver tying the cluster state machine to observations and rewards.

``UpgradeEnv`` looks like a tiny gym: ``reset`` builds a seeded scenario and
rolls the clock to the first decision, ``step`` places the head task on the
chosen node and rolls to the next one. Every decision is appended to an
event log whose CSV form is byte-stable across identical runs (floats are
written with ``repr``, so equal runs produce equal bytes).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cluster
from .cluster import ClusterState, CompletedTask
from .encoding import Normalizer, encode, mask, reward
from .latency import noise_power_w
from .records import ScenarioConfig, TaskRecord, min_frequency
from .scenarios import generate_scenario

EVENT_LOG_HEADER = (
    "episode,step,clock_s,task_id,node_id,"
    "t_comm_s,t_down_s,t_comp_s,t_total_s,reward,evicted_flag"
)
METRICS_HEADER = "task_id,node_id,t_comm_s,t_down_s,t_comp_s,t_total_s"


@dataclass(frozen=True)
class StepOutcome:
    observation: np.ndarray | None
    reward: float
    done: bool
    info: dict


@dataclass(frozen=True)
class EventRow:
    episode: int
    step: int
    clock_s: float
    task_id: int
    node_id: int
    t_comm_s: float
    t_down_s: float
    t_comp_s: float
    t_total_s: float
    reward: float
    evicted_flag: int

    def csv(self) -> str:
        return (
            f"{self.episode},{self.step},{self.clock_s!r},{self.task_id},{self.node_id},"
            f"{self.t_comm_s!r},{self.t_down_s!r},{self.t_comp_s!r},{self.t_total_s!r},"
            f"{self.reward!r},{self.evicted_flag}"
        )


@dataclass(frozen=True)
class EpisodeMetrics:
    task_count: int
    decision_count: int
    evicted_decisions: int
    makespan_s: float
    mean_reward: float
    mean_comm_s: float
    mean_down_s: float
    mean_comp_s: float
    mean_total_s: float
    per_task: list[CompletedTask]


class UpgradeEnv:
    """One rolling-upgrade episode at a time, driven by placement actions."""

    def __init__(self, cfg: ScenarioConfig, check_invariants: bool = False):
        self.cfg = cfg
        self.check_invariants = check_invariants
        self.normalizer = Normalizer(cfg)
        self.state: ClusterState | None = None
        self.event_rows: list[EventRow] = []
        self.episode = -1
        self._step = 0
        self._noise_w: list[float] = []
        self.min_freq = 0.0

    @property
    def node_count(self) -> int:
        return self.cfg.node_count

    def reset(self, seed: int | None = None) -> np.ndarray:
        scenario = generate_scenario(self.cfg, seed)
        self.state = cluster.initial_state(scenario)
        if self.check_invariants:
            self.state.invariant_hook = cluster.check_invariants
        self._noise_w = [
            noise_power_w(self.cfg.noise_dbm_per_hz, n.bandwidth_mbps) for n in scenario.nodes
        ]
        self.min_freq = min_frequency(scenario.nodes)
        self.normalizer.reset()
        self.episode += 1
        self._step = 0
        self.event_rows = []
        cluster.maybe_begin_next_upgrade(self.state)
        cluster.advance_to_decision(self.state)
        if cluster.is_done(self.state):
            raise RuntimeError("scenario produced an episode with no decisions")
        return self._observe()

    def current_task(self) -> TaskRecord:
        if self.state is None or not self.state.pending:
            raise RuntimeError("no decision is pending")
        return self.state.pending[0]

    def action_mask(self) -> np.ndarray:
        return mask(self.state, self.current_task())

    def feasible(self) -> set[int]:
        return cluster.feasible_nodes(self.state, self.current_task())

    def _observe(self) -> np.ndarray:
        return self.normalizer(encode(self.state, self.current_task()))

    def step(self, action: int) -> StepOutcome:
        """Place the head task on node ``action``; infeasible choices raise."""
        if self.state is None:
            raise RuntimeError("reset the environment first")
        if cluster.is_done(self.state):
            raise RuntimeError("episode is over")
        clock = self.state.clock
        task, breakdown, was_evicted = cluster.place_head_task(
            self.state, int(action), self._noise_w, self.cfg.path_loss_exponent
        )
        r = reward(task, breakdown, self.min_freq)
        self.event_rows.append(
            EventRow(
                episode=self.episode,
                step=self._step,
                clock_s=clock,
                task_id=task.id,
                node_id=int(action),
                t_comm_s=breakdown.comm_s,
                t_down_s=breakdown.download_s,
                t_comp_s=breakdown.compute_s,
                t_total_s=breakdown.total_s,
                reward=r,
                evicted_flag=int(was_evicted),
            )
        )
        self._step += 1
        cluster.maybe_begin_next_upgrade(self.state)
        cluster.advance_to_decision(self.state)
        done = cluster.is_done(self.state)
        obs = None if done else self._observe()
        info = {"task_id": task.id, "node_id": int(action), "breakdown": breakdown}
        return StepOutcome(obs, r, done, info)

    def metrics(self) -> EpisodeMetrics:
        if self.state is None or not cluster.is_done(self.state):
            raise RuntimeError("episode still running")
        rows = sorted(self.state.completed, key=lambda c: c.task_id)
        comm = [c.breakdown.comm_s for c in rows]
        down = [c.breakdown.download_s for c in rows]
        comp = [c.breakdown.compute_s for c in rows]
        tot = [c.breakdown.total_s for c in rows]
        rewards = [e.reward for e in self.event_rows]
        return EpisodeMetrics(
            task_count=len(rows),
            decision_count=len(self.event_rows),
            evicted_decisions=sum(e.evicted_flag for e in self.event_rows),
            makespan_s=self.state.clock,
            mean_reward=float(np.mean(rewards)) if rewards else 0.0,
            mean_comm_s=float(np.mean(comm)) if comm else 0.0,
            mean_down_s=float(np.mean(down)) if down else 0.0,
            mean_comp_s=float(np.mean(comp)) if comp else 0.0,
            mean_total_s=float(np.mean(tot)) if tot else 0.0,
            per_task=rows,
        )

    def write_event_log(self, path: str | Path, append: bool = False):
        lines = [] if append else [EVENT_LOG_HEADER]
        lines += [row.csv() for row in self.event_rows]
        mode = "a" if append else "w"
        with open(path, mode) as fh:
            fh.write("\n".join(lines) + "\n")


def write_metrics_csv(metrics: EpisodeMetrics, path: str | Path):
    lines = [METRICS_HEADER]
    for c in metrics.per_task:
        b = c.breakdown
        lines.append(
            f"{c.task_id},{c.node_id},{b.comm_s!r},{b.download_s!r},{b.compute_s!r},{b.total_s!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
