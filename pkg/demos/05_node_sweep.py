"""
Sweeping cluster size and plotting the latency curves
=====================================================

Runs every heuristic across three cluster sizes, averages over seeds, and
renders one line chart per latency component. More nodes means more spare
capacity during the rolling upgrade, so every curve should slope down.
"""

from pathlib import Path

from edgesched.experiments import SweepSpec, emit_plots, run_compare
from edgesched.records import ScenarioConfig

out = Path("sweep_output")
sweep = SweepSpec(
    variable="node_count",
    values=(10, 15, 20),
    policies=("eq", "rb", "la", "il"),
    seeds=tuple(range(5)),
)
averaged = run_compare(sweep, ScenarioConfig(task_count=100), out)

print(f"{'nodes':>6}  " + "  ".join(f"{p:>8}" for p in sweep.policies))
for value in sweep.values:
    cells = "  ".join(f"{averaged['total'][(value, p)]:8.3f}" for p in sweep.policies)
    print(f"{value:>6}  {cells}")

plots = emit_plots(out, out)
print("\nwrote " + ", ".join(p.name for p in plots))
