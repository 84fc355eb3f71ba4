"""
Training the scheduler and checking it on unseen scenarios
==========================================================

A short training run (a few hundred episodes, well under a minute), then a
head-to-head against the strongest heuristic on seeds the agent never saw.
Longer runs widen the margin; the point here is the mechanics end to end.
"""

import numpy as np

from edgesched.agent import train
from edgesched.experiments import run_episode
from edgesched.net import save_checkpoint
from edgesched.records import Hyperparams, ScenarioConfig

cfg = ScenarioConfig(node_count=8, task_count=80)
hp = Hyperparams()

params, report = train(cfg, hp, episodes=300, seed=0, progress_every=100)

rewards = report.column("mean_reward")
vloss = report.column("value_loss")
k = len(rewards) // 10
print(f"\nreward:     first 10% {rewards[:k].mean():8.3f} -> "
      f"final 10% {rewards[-k:].mean():8.3f}")
print(f"value loss: first 10% {vloss[:k].mean():8.1f} -> "
      f"final 10% {vloss[-k:].mean():8.1f}")

save_checkpoint("trained_scheduler.bin", params)
print("saved trained_scheduler.bin")

held_out = [900, 901, 902]
for policy in ("il", "ocs"):
    totals = [
        run_episode(cfg, s, policy,
                    params=params if policy == "ocs" else None)[0].mean_total_s
        for s in held_out
    ]
    print(f"{policy}: held-out mean total latency {np.mean(totals):.3f} s "
          f"({[round(t, 3) for t in totals]})")
