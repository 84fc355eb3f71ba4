"""Edge-cluster rolling-upgrade scheduling: simulator, heuristics, learned policy."""

from .agent import ReplayMemory, Transition, clipped_objective, collect_rollout, gae, train, update
from .baselines import ScoredNode, eq_select, il_select, la_select, rb_select
from .cluster import (
    ClusterState,
    SchedulingDeadlock,
    begin_upgrade,
    feasible_nodes,
    finish_upgrade,
)
from .encoding import Normalizer, encode, layout, mask, normalize, reward, state_dim
from .env import EpisodeMetrics, StepOutcome, UpgradeEnv
from .experiments import SweepSpec, emit_plots, run_compare, run_episode
from .latency import (
    ChannelParams,
    LatencyBreakdown,
    channel_gain,
    comm_latency,
    comp_latency,
    download_latency,
    queue_delay,
    total_latency,
    uplink_rate,
)
from .net import PolicyParams, actor_forward, critic_forward, load_checkpoint, save_checkpoint
from .records import (
    Hyperparams,
    ImageRecord,
    NodeRecord,
    ScenarioConfig,
    TaskRecord,
    UpgradePhase,
    min_frequency,
    validate_scenario,
)
from .scenarios import Scenario, generate_scenario

__version__ = "0.1.0"
