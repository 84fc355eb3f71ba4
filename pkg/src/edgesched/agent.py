"""Policy-gradient trainer: rollouts, advantage estimation, clipped updates.

One training iteration is one full episode collected into a replay memory,
followed by several epochs of shuffled minibatch updates on that memory.
Advantages come from generalized advantage estimation over the episode;
the policy step maximizes the clipped surrogate and the critic regresses
onto the advantage targets with squared error. A non-finite loss aborts
the update and rolls the parameters back to their pre-update snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoding import state_dim
from .env import UpgradeEnv
from .net import (
    AdamState,
    PolicyParams,
    actor_forward,
    adam_step,
    critic_forward,
    init_policy,
    masked_softmax,
    mlp_backward,
    mlp_forward,
    sample,
    save_checkpoint,
)
from .records import Hyperparams

TRAIN_REPORT_HEADER = "update_idx,policy_loss,value_loss,mean_reward,mean_total_latency_s"


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray | None
    log_prob: float
    value: float
    done: bool
    mask: np.ndarray


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    masks: np.ndarray


class ReplayMemory:
    """Transitions of one episode, in decision order."""

    def __init__(self):
        self._items: list[Transition] = []

    def append(self, tr: Transition):
        self._items.append(tr)

    def clear(self):
        self._items.clear()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def arrays(self) -> Batch:
        return Batch(
            states=np.stack([t.state for t in self._items]),
            actions=np.array([t.action for t in self._items], dtype=np.int64),
            rewards=np.array([t.reward for t in self._items]),
            log_probs=np.array([t.log_prob for t in self._items]),
            values=np.array([t.value for t in self._items]),
            dones=np.array([t.done for t in self._items], dtype=np.float64),
            masks=np.stack([t.mask for t in self._items]),
        )


def gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over one trajectory.

    ``values`` has one more entry than ``rewards`` (the bootstrap value of
    the state after the last transition). Returns (advantages, value
    targets); targets are advantages plus the value baseline.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    steps = rewards.shape[0]
    if values.shape[0] != steps + 1:
        raise ValueError("values must have one more entry than rewards")
    adv = np.zeros(steps)
    carry = 0.0
    for t in reversed(range(steps)):
        cont = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * cont - values[t]
        carry = delta + gamma * lam * cont * carry
        adv[t] = carry
    return adv, adv + values[:-1]


def clipped_objective(
    logp_new: np.ndarray, logp_old: np.ndarray, adv: np.ndarray, eps: float
) -> np.ndarray:
    """Per-sample clipped surrogate (the quantity to maximize)."""
    rho = np.exp(np.asarray(logp_new) - np.asarray(logp_old))
    return np.minimum(rho * adv, np.clip(rho, 1.0 - eps, 1.0 + eps) * adv)


def value_loss(values: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((np.asarray(values) - np.asarray(targets)) ** 2))


def policy_loss_and_grad(
    actor, states, actions, logp_old, adv, masks, eps, entropy_coef=0.0
):
    """Loss (to minimize) and actor gradients for one minibatch."""
    batch = states.shape[0]
    logits, acts = mlp_forward(actor, states)
    probs, logp = masked_softmax(logits, masks)
    rows = np.arange(batch)
    lp_new = logp[rows, actions]
    rho = np.exp(lp_new - logp_old)
    surr_raw = rho * adv
    surr_clip = np.clip(rho, 1.0 - eps, 1.0 + eps) * adv
    loss = -float(np.mean(np.minimum(surr_raw, surr_clip)))
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite policy loss {loss}")

    # d(-objective)/d lp_new is zero wherever the clipped branch is active
    dlp = np.where(surr_raw <= surr_clip, -adv * rho, 0.0) / batch
    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    dlogits = dlp[:, None] * (onehot - probs)

    if entropy_coef:
        safe_logp = np.where(probs > 0, logp, 0.0)
        entropy = -(probs * safe_logp).sum(axis=1)
        loss -= entropy_coef * float(np.mean(entropy))
        dlogits += entropy_coef / batch * probs * (safe_logp + entropy[:, None])

    grads, _ = mlp_backward(actor, acts, dlogits)
    return loss, grads


def value_loss_and_grad(critic, states, targets):
    batch = states.shape[0]
    out, acts = mlp_forward(critic, states)
    err = out[:, 0] - targets
    loss = float(np.mean(err**2))
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite value loss {loss}")
    grads, _ = mlp_backward(critic, acts, (2.0 / batch) * err[:, None])
    return loss, grads


def collect_rollout(
    env: UpgradeEnv, params: PolicyParams, rng: np.random.Generator, seed: int | None = None
) -> ReplayMemory:
    """Play one full episode with the stochastic policy."""
    memory = ReplayMemory()
    obs = env.reset(seed)
    while True:
        m = env.action_mask()
        probs, _ = actor_forward(params.actor, obs, m)
        action, logp = sample(probs, rng)
        value = critic_forward(params.critic, obs)
        out = env.step(action)
        memory.append(
            Transition(obs, action, out.reward, out.observation, logp, value, out.done, m)
        )
        if out.done:
            return memory
        obs = out.observation


def _snapshot(params: PolicyParams):
    clone = lambda ls: [(w.copy(), b.copy()) for w, b in ls]
    return (
        clone(params.actor),
        clone(params.critic),
        AdamState(clone(params.adam_actor.m), clone(params.adam_actor.v), params.adam_actor.step),
        AdamState(clone(params.adam_critic.m), clone(params.adam_critic.v), params.adam_critic.step),
    )


def _restore(params: PolicyParams, snap):
    params.actor, params.critic, params.adam_actor, params.adam_critic = snap


def update(
    memory: ReplayMemory, params: PolicyParams, hp: Hyperparams, rng: np.random.Generator
) -> dict:
    """Several epochs of clipped-surrogate minibatch steps on one episode."""
    b = memory.arrays()
    steps = len(memory)
    values_ext = np.append(b.values, 0.0)
    adv, targets = gae(b.rewards, values_ext, b.dones, hp.gamma, hp.gae_lambda)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    snap = _snapshot(params)
    p_losses, v_losses = [], []
    for _ in range(hp.epochs):
        perm = rng.permutation(steps)
        for lo in range(0, steps, hp.batch_size):
            idx = perm[lo : lo + hp.batch_size]
            try:
                ploss, pgrads = policy_loss_and_grad(
                    params.actor,
                    b.states[idx],
                    b.actions[idx],
                    b.log_probs[idx],
                    adv[idx],
                    b.masks[idx],
                    hp.clip_eps,
                    hp.entropy_coef,
                )
                vloss, vgrads = value_loss_and_grad(params.critic, b.states[idx], targets[idx])
            except FloatingPointError:
                _restore(params, snap)
                return {"policy_loss": float("nan"), "value_loss": float("nan"), "aborted": True}
            adam_step(params.actor, pgrads, params.adam_actor, hp.actor_lr)
            adam_step(params.critic, vgrads, params.adam_critic, hp.critic_lr)
            p_losses.append(ploss)
            v_losses.append(vloss)
    return {
        "policy_loss": float(np.mean(p_losses)),
        "value_loss": float(np.mean(v_losses)),
        "aborted": False,
    }


@dataclass(frozen=True)
class TrainRow:
    update_idx: int
    policy_loss: float
    value_loss: float
    mean_reward: float
    mean_total_latency_s: float

    def csv(self) -> str:
        return (
            f"{self.update_idx},{self.policy_loss!r},{self.value_loss!r},"
            f"{self.mean_reward!r},{self.mean_total_latency_s!r}"
        )


@dataclass
class TrainReport:
    rows: list[TrainRow] = field(default_factory=list)

    def write_csv(self, path: str | Path):
        lines = [TRAIN_REPORT_HEADER] + [r.csv() for r in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def train(
    cfg,
    hp: Hyperparams,
    episodes: int | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    progress_every: int = 0,
) -> tuple[PolicyParams, TrainReport]:
    """Train a policy from scratch; fully reproducible given ``seed``."""
    if episodes is None:
        episodes = hp.episodes
    ss = np.random.SeedSequence(seed)
    init_ss, sample_ss, perm_ss, scen_ss = ss.spawn(4)
    rng_sample = np.random.default_rng(sample_ss)
    rng_perm = np.random.default_rng(perm_ss)
    episode_seeds = np.random.default_rng(scen_ss).integers(2**63, size=episodes)

    env = UpgradeEnv(cfg)
    params = init_policy_for(cfg, hp, np.random.default_rng(init_ss))
    report = TrainReport()
    for ep in range(episodes):
        memory = collect_rollout(env, params, rng_sample, seed=int(episode_seeds[ep]))
        stats = update(memory, params, hp, rng_perm)
        metrics = env.metrics()
        report.rows.append(
            TrainRow(ep, stats["policy_loss"], stats["value_loss"], metrics.mean_reward, metrics.mean_total_s)
        )
        if progress_every and (ep + 1) % progress_every == 0:
            print(
                f"update {ep + 1}/{episodes} "
                f"reward {metrics.mean_reward:.3f} vloss {stats['value_loss']:.4f}"
            )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "checkpoint.bin", params)
        report.write_csv(out / "train_report.csv")
    return params, report


def init_policy_for(cfg, hp: Hyperparams, rng: np.random.Generator) -> PolicyParams:
    return init_policy(cfg.node_count, state_dim(cfg.node_count), hp.hidden, rng)


def greedy_action(params: PolicyParams, obs: np.ndarray, mask: np.ndarray) -> int:
    """Deterministic evaluation-time action: highest-probability feasible node."""
    probs, _ = actor_forward(params.actor, obs, mask)
    return int(np.argmax(probs))
