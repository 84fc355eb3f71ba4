"""Experiment orchestration: single episodes, policy sweeps, summary plots.

``run_compare`` runs a grid of (swept value, policy, seed) episodes and
writes one long-form CSV of all runs plus one seed-averaged table per
latency component. ``emit_plots`` turns those tables into line charts.
File names are pure functions of the sweep, so re-running overwrites the
previous output instead of accumulating variants.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import greedy_action
from .baselines import eq_select, il_select, la_select, rb_select
from .env import EpisodeMetrics, UpgradeEnv
from .net import PolicyParams, load_checkpoint
from .records import ScenarioConfig

POLICIES = ("eq", "rb", "la", "il", "ocs")
COMPONENTS = ("comm", "download", "compute", "total")
RUNS_HEADER = "sweep_var,value,policy,seed,mean_comm_s,mean_down_s,mean_comp_s,mean_total_s"
PANEL_HEADER = "value,policy,mean_s"


def make_policy(
    name: str,
    rng: np.random.Generator | None = None,
    params: PolicyParams | None = None,
):
    """Uniform signature for all five schedulers: env -> node id."""
    if name == "eq":
        if rng is None:
            raise ValueError("eq policy needs an rng")
        return lambda env: eq_select(env.feasible(), rng)
    if name == "rb":
        return lambda env: rb_select(env.feasible(), env.state, env.current_task())
    if name == "la":
        return lambda env: la_select(env.feasible(), env.state, env.current_task())
    if name == "il":
        return lambda env: il_select(env.feasible(), env.state, env.current_task())
    if name == "ocs":
        if params is None:
            raise ValueError("ocs policy needs trained parameters")
        return lambda env: greedy_action(params, env._observe(), env.action_mask())
    raise ValueError(f"unknown policy {name!r}, expected one of {POLICIES}")


def run_episode(
    cfg: ScenarioConfig,
    seed: int,
    policy: str,
    policy_rng: np.random.Generator | None = None,
    params: PolicyParams | None = None,
    check_invariants: bool = False,
) -> tuple[EpisodeMetrics, UpgradeEnv]:
    """Play one full episode under ``policy`` and return its metrics."""
    env = UpgradeEnv(cfg, check_invariants=check_invariants)
    act = make_policy(policy, rng=policy_rng, params=params)
    env.reset(seed)
    while True:
        if env.step(act(env)).done:
            break
    return env.metrics(), env


@dataclass(frozen=True)
class SweepSpec:
    """A grid of episodes: one swept scenario variable times policies times seeds."""

    variable: str  # "node_count" or "task_count"
    values: tuple[int, ...]
    policies: tuple[str, ...]
    seeds: tuple[int, ...]

    def __post_init__(self):
        if self.variable not in ("node_count", "task_count"):
            raise ValueError(f"cannot sweep {self.variable!r}")
        unknown = set(self.policies) - set(POLICIES)
        if unknown:
            raise ValueError(f"unknown policies {sorted(unknown)}")


def _checkpoint_for(checkpoint_dir: str | Path, node_count: int) -> Path:
    return Path(checkpoint_dir) / f"checkpoint_n{node_count}.bin"


def run_compare(
    sweep: SweepSpec,
    base_cfg: ScenarioConfig,
    out_dir: str | Path,
    checkpoint_dir: str | Path | None = None,
) -> dict[str, dict[tuple[int, str], float]]:
    """Run the whole grid; write runs.csv and per-component panel tables.

    The learned policy needs one checkpoint per distinct node count, named
    ``checkpoint_n{N}.bin`` inside ``checkpoint_dir``; a missing file fails
    fast before any episode runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    params_by_nodes: dict[int, PolicyParams] = {}
    if "ocs" in sweep.policies:
        if checkpoint_dir is None:
            raise ValueError("sweep includes ocs but no checkpoint_dir was given")
        node_counts = (
            sweep.values if sweep.variable == "node_count" else (base_cfg.node_count,)
        )
        for n in node_counts:
            path = _checkpoint_for(checkpoint_dir, n)
            if not path.exists():
                raise FileNotFoundError(f"missing checkpoint for node_count={n}: {path}")
            params_by_nodes[n] = load_checkpoint(path)

    run_lines = [RUNS_HEADER]
    panels: dict[str, dict[tuple[int, str], list[float]]] = {c: {} for c in COMPONENTS}
    for value in sweep.values:
        cfg = dataclasses.replace(base_cfg, **{sweep.variable: value})
        for policy in sweep.policies:
            cell: list[EpisodeMetrics] = []
            for seed in sweep.seeds:
                rng = np.random.default_rng(seed) if policy == "eq" else None
                params = params_by_nodes.get(cfg.node_count)
                metrics, _ = run_episode(cfg, seed, policy, policy_rng=rng, params=params)
                cell.append(metrics)
                run_lines.append(
                    f"{sweep.variable},{value},{policy},{seed},"
                    f"{metrics.mean_comm_s!r},{metrics.mean_down_s!r},"
                    f"{metrics.mean_comp_s!r},{metrics.mean_total_s!r}"
                )
            panels["comm"][(value, policy)] = [m.mean_comm_s for m in cell]
            panels["download"][(value, policy)] = [m.mean_down_s for m in cell]
            panels["compute"][(value, policy)] = [m.mean_comp_s for m in cell]
            panels["total"][(value, policy)] = [m.mean_total_s for m in cell]

    (out / "runs.csv").write_text("\n".join(run_lines) + "\n")
    averaged: dict[str, dict[tuple[int, str], float]] = {}
    for component, cells in panels.items():
        averaged[component] = {key: float(np.mean(v)) for key, v in cells.items()}
        lines = [PANEL_HEADER]
        for (value, policy), mean_s in averaged[component].items():
            lines.append(f"{value},{policy},{mean_s!r}")
        (out / f"{sweep.variable}_{component}.csv").write_text("\n".join(lines) + "\n")
    return averaged


def read_panel(path: str | Path) -> dict[tuple[int, str], float]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != PANEL_HEADER:
        raise ValueError(f"{path}: not a panel table")
    out = {}
    for line in lines[1:]:
        value, policy, mean_s = line.split(",")
        out[(int(value), policy)] = float(mean_s)
    return out


def emit_plots(tables_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render one line chart per component table found in ``tables_dir``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tables_dir = Path(tables_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for table in sorted(tables_dir.glob("*_*.csv")):
        stem = table.stem
        variable, _, component = stem.rpartition("_")
        if component not in COMPONENTS or not variable:
            continue
        panel = read_panel(table)
        values = sorted({v for v, _ in panel})
        fig, ax = plt.subplots(figsize=(5.5, 3.8))
        for policy in POLICIES:
            ys = [panel[(v, policy)] for v in values if (v, policy) in panel]
            if len(ys) != len(values):
                continue
            ax.plot(values, ys, marker="o", label=policy)
        ax.set_xlabel(variable)
        ax.set_ylabel(f"mean {component} latency (s)")
        ax.set_xticks(values)
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        target = out / f"{stem}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    if not written:
        raise ValueError(f"no panel tables found in {tables_dir}")
    return written
