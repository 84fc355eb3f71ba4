"""Command-line front end.

Five subcommands: gen-scenario, train, eval, compare, plot. Success exits 0;
any failure exits 2 after a single JSON error line on stderr, so wrappers
can parse outcomes without scraping tracebacks.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .agent import train
from .env import write_metrics_csv
from .experiments import POLICIES, SweepSpec, emit_plots, run_compare, run_episode
from .net import load_checkpoint, save_checkpoint
from .records import Hyperparams, ScenarioConfig, validate_scenario


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line errors instead of usage dumps
        raise CliError(message)


def _load_cfg(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "nodes", None) is not None:
        overrides["node_count"] = args.nodes
    if getattr(args, "tasks", None) is not None:
        overrides["task_count"] = args.tasks
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    bad = validate_scenario(cfg)
    if bad:
        raise CliError("invalid scenario config: " + "; ".join(bad))
    return cfg


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="scenario config file (key=value lines)")
    p.add_argument("--nodes", type=int, help="override node_count")
    p.add_argument("--tasks", type=int, help="override task_count")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, help="output directory")


def _cmd_gen_scenario(args) -> int:
    from .scenarios import generate_scenario

    cfg = _load_cfg(args)
    scenario = generate_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.to_file(out / "scenario.cfg")

    lines = ["id,cpu_cores,mem_gb,storage_gbit,freq_ghz,bandwidth_mbps,x_m,y_m,cached_images"]
    for n in scenario.nodes:
        cached = ";".join(map(str, sorted(n.cached_images)))
        lines.append(
            f"{n.id},{n.cpu_cores!r},{n.mem_gb!r},{n.storage_gbit!r},"
            f"{n.freq_ghz!r},{n.bandwidth_mbps!r},{n.position[0]!r},{n.position[1]!r},{cached}"
        )
    (out / "nodes.csv").write_text("\n".join(lines) + "\n")

    lines = ["id,cpu_cores,mem_gb,work_gcycles,data_mbit,image_id,x_m,y_m,arrival_s"]
    for t in scenario.tasks:
        lines.append(
            f"{t.id},{t.cpu_cores!r},{t.mem_gb!r},{t.work_gcycles!r},{t.data_mbit!r},"
            f"{t.image_id},{t.position[0]!r},{t.position[1]!r},{t.arrival_s!r}"
        )
    (out / "tasks.csv").write_text("\n".join(lines) + "\n")

    lines = ["id,size_gbit"]
    for img in scenario.images.values():
        lines.append(f"{img.id},{img.size_gbit!r}")
    (out / "images.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote scenario.cfg, nodes.csv, tasks.csv, images.csv to {out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_cfg(args)
    hp = Hyperparams()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, report = train(
        cfg,
        hp,
        episodes=args.episodes,
        seed=cfg.seed,
        out_dir=None,
        progress_every=args.progress_every,
    )
    save_checkpoint(out / "checkpoint.bin", params)
    save_checkpoint(out / f"checkpoint_n{cfg.node_count}.bin", params)
    report.write_csv(out / "train_report.csv")
    last = report.rows[-1]
    print(
        f"trained {args.episodes} updates; final mean reward {last.mean_reward:.3f}, "
        f"mean total latency {last.mean_total_latency_s:.3f}s; wrote checkpoint.bin"
    )
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    seed = cfg.seed
    params = None
    if args.policy == "ocs":
        if not args.checkpoint:
            raise CliError("--checkpoint is required for --policy ocs")
        params = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(seed) if args.policy == "eq" else None
    metrics, env = run_episode(cfg, seed, args.policy, policy_rng=rng, params=params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env.write_event_log(out / f"events_{args.policy}_seed{seed}.csv")
    write_metrics_csv(metrics, out / f"metrics_{args.policy}_seed{seed}.csv")
    print(
        f"policy={args.policy} seed={seed} tasks={metrics.task_count} "
        f"mean_total_s={metrics.mean_total_s:.4f} mean_reward={metrics.mean_reward:.4f} "
        f"evicted={metrics.evicted_decisions}"
    )
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    values = tuple(int(v) for v in args.values.split(","))
    policies = tuple(args.policies.split(","))
    base_seed = cfg.seed
    sweep = SweepSpec(
        variable=args.sweep,
        values=values,
        policies=policies,
        seeds=tuple(range(base_seed, base_seed + args.repeats)),
    )
    run_compare(sweep, cfg, args.out, checkpoint_dir=args.checkpoint_dir)
    print(f"compared {policies} over {args.sweep}={values}, {args.repeats} seeds -> {args.out}")
    return 0


def _cmd_plot(args) -> int:
    tables = args.tables or args.out
    written = emit_plots(tables, args.out)
    print("wrote " + ", ".join(p.name for p in written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edgesched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenario", help="generate and dump one seeded scenario")
    _add_common(p)
    p.set_defaults(fn=_cmd_gen_scenario)

    p = sub.add_parser("train", help="train the scheduling policy")
    _add_common(p)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--progress-every", type=int, default=0, help="print every k updates")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="run one episode under a policy")
    _add_common(p)
    p.add_argument("--policy", required=True, choices=POLICIES)
    p.add_argument("--checkpoint", help="trained checkpoint (required for ocs)")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("compare", help="sweep a scenario variable across policies")
    _add_common(p)
    p.add_argument("--sweep", default="node_count", choices=("node_count", "task_count"))
    p.add_argument("--values", default="10,15,20", help="comma-separated sweep values")
    p.add_argument("--policies", default="eq,rb,la,il", help="comma-separated policy names")
    p.add_argument("--repeats", type=int, default=5, help="seeds per grid cell")
    p.add_argument("--checkpoint-dir", help="directory with checkpoint_n{N}.bin files")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("plot", help="render line charts from compare tables")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tables", help="table directory (defaults to --out)")
    p.set_defaults(fn=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the contract is a JSON line + exit 2
        print(json.dumps({"error": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
