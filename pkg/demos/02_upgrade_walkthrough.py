"""
Watching a rolling upgrade drain the cluster
============================================

Runs one small episode with the image-locality heuristic and prints every
scheduling decision. Node 0 starts upgrading at time zero, so early tasks
crowd onto the remaining nodes; evicted tasks reappear with their upload
already paid for (the data never left the node).
"""

from edgesched.baselines import il_select
from edgesched.env import UpgradeEnv
from edgesched.records import ScenarioConfig, UpgradePhase

cfg = ScenarioConfig(node_count=4, task_count=12, seed=7,
                     task_work_gcycles=(300.0, 600.0))
env = UpgradeEnv(cfg, check_invariants=True)
env.reset(cfg.seed)

print(f"{'clock':>7}  {'task':>4}  {'node':>4}  {'comm':>8}  {'down':>8}  "
      f"{'comp':>8}  {'total':>8}  evicted")
while True:
    task = env.current_task()
    node = il_select(env.feasible(), env.state, task)
    out = env.step(node)
    row = env.event_rows[-1]
    print(f"{row.clock_s:7.1f}  {row.task_id:4d}  {row.node_id:4d}  "
          f"{row.t_comm_s:8.4f}  {row.t_down_s:8.2f}  {row.t_comp_s:8.2f}  "
          f"{row.t_total_s:8.2f}  {'yes' if row.evicted_flag else ''}")
    if out.done:
        break

assert all(n.phase == UpgradePhase.UPGRADED for n in env.state.nodes)
metrics = env.metrics()
print(f"\nall {cfg.node_count} nodes upgraded by t={env.state.clock:.0f} s")
print(f"{metrics.task_count} tasks placed over {metrics.decision_count} decisions "
      f"({metrics.evicted_decisions} evictions), "
      f"mean latency {metrics.mean_total_s:.2f} s")
