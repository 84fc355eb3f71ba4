"""Dense actor and critic networks in plain numpy, gradients by hand.

Both networks are tanh MLPs in float64. The actor head is masked before the
softmax: infeasible nodes get probability exactly zero and the distribution
renormalizes over the rest. Parameters live in ``PolicyParams`` together
with their Adam accumulators, and round-trip bit-exactly through the binary
checkpoint format below (magic, layout header, little-endian float64 blocks).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Layers = list[tuple[np.ndarray, np.ndarray]]

CHECKPOINT_MAGIC = b"ESCHED01"


def orthogonal(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_layers(
    dims: list[int], final_gain: float, rng: np.random.Generator
) -> Layers:
    layers = []
    for i in range(len(dims) - 1):
        gain = final_gain if i == len(dims) - 2 else np.sqrt(2.0)
        w = orthogonal(dims[i + 1], dims[i], gain, rng)
        layers.append((w, np.zeros(dims[i + 1])))
    return layers


@dataclass
class AdamState:
    m: Layers
    v: Layers
    step: int = 0

    @classmethod
    def zeros_like(cls, layers: Layers) -> "AdamState":
        zero = lambda ls: [(np.zeros_like(w), np.zeros_like(b)) for w, b in ls]
        return cls(m=zero(layers), v=zero(layers))


@dataclass
class PolicyParams:
    node_count: int
    input_dim: int
    hidden: tuple[int, ...]
    actor: Layers
    critic: Layers
    adam_actor: AdamState
    adam_critic: AdamState


def init_policy(
    node_count: int, input_dim: int, hidden: tuple[int, ...], rng: np.random.Generator
) -> PolicyParams:
    actor = init_layers([input_dim, *hidden, node_count], 0.01, rng)
    critic = init_layers([input_dim, *hidden, 1], 1.0, rng)
    return PolicyParams(
        node_count=node_count,
        input_dim=input_dim,
        hidden=tuple(hidden),
        actor=actor,
        critic=critic,
        adam_actor=AdamState.zeros_like(actor),
        adam_critic=AdamState.zeros_like(critic),
    )


def mlp_forward(layers: Layers, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Tanh MLP, linear last layer. Returns output and per-layer activations."""
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    acts = [a]
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        a = z if i == len(layers) - 1 else np.tanh(z)
        acts.append(a)
    return a, acts


def mlp_backward(
    layers: Layers, acts: list[np.ndarray], dout: np.ndarray
) -> tuple[Layers, np.ndarray]:
    """Reverse pass for ``mlp_forward``; returns grads and d(input)."""
    grads: list = [None] * len(layers)
    da = dout
    for i in reversed(range(len(layers))):
        w, _ = layers[i]
        dz = da if i == len(layers) - 1 else da * (1.0 - acts[i + 1] ** 2)
        grads[i] = (dz.T @ acts[i], dz.sum(axis=0))
        da = dz @ w
    return grads, da


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and log-probabilities over the unmasked entries.

    Masked-out entries come back with probability 0.0 and log-probability
    -inf. A row with nothing unmasked is an error, not a nan.
    """
    single = np.asarray(logits).ndim == 1
    logits = np.atleast_2d(logits)
    mask = np.atleast_2d(mask)
    if not mask.any(axis=1).all():
        raise ValueError("mask leaves no feasible action in some row")
    z = np.where(mask, logits, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    e = np.exp(z - zmax)
    total = e.sum(axis=1, keepdims=True)
    probs = e / total
    with np.errstate(divide="ignore"):
        logp = np.where(mask, z - zmax - np.log(total), -np.inf)
    if single:
        return probs[0], logp[0]
    return probs, logp


def actor_forward(
    actor: Layers, obs: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    single = np.asarray(obs).ndim == 1
    logits, _ = mlp_forward(actor, obs)
    probs, logp = masked_softmax(logits, mask)
    if single:
        return probs[0], logp[0]
    return probs, logp


def critic_forward(critic: Layers, obs: np.ndarray):
    single = np.asarray(obs).ndim == 1
    out, _ = mlp_forward(critic, obs)
    return float(out[0, 0]) if single else out[:, 0]


def sample(probs: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    """Draw one action; returns (action, log-probability of that action)."""
    c = np.cumsum(probs)
    action = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    action = min(action, len(probs) - 1)
    while probs[action] == 0.0:  # fp edge: never return a masked action
        action -= 1
    return action, float(np.log(probs[action]))


def adam_step(
    layers: Layers,
    grads: Layers,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for i, (w, b) in enumerate(layers):
        for j, (param, grad) in enumerate(((w, grads[i][0]), (b, grads[i][1]))):
            m, v = state.m[i][j], state.v[i][j]
            m += (1 - beta1) * (grad - m)
            v += (1 - beta2) * (grad * grad - v)
            mhat = m / (1 - beta1**t)
            vhat = v / (1 - beta2**t)
            param -= lr * mhat / (np.sqrt(vhat) + eps)


def flatten(layers: Layers) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in layers])


def set_flat(layers: Layers, vec: np.ndarray):
    at = 0
    for w, b in layers:
        w.flat[:] = vec[at : at + w.size]
        at += w.size
        b[:] = vec[at : at + b.size]
        at += b.size
    if at != vec.size:
        raise ValueError(f"flat vector has {vec.size} entries, layers take {at}")


def layout_digest(node_count: int, input_dim: int, hidden: tuple[int, ...]) -> int:
    text = f"{node_count}|{input_dim}|{','.join(map(str, hidden))}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def save_checkpoint(path: str | Path, params: PolicyParams):
    hidden = params.hidden
    head = struct.pack(
        f"<8sIII{len(hidden)}IQ",
        CHECKPOINT_MAGIC,
        params.node_count,
        params.input_dim,
        len(hidden),
        *hidden,
        layout_digest(params.node_count, params.input_dim, hidden),
    )
    actor = flatten(params.actor).astype("<f8")
    critic = flatten(params.critic).astype("<f8")
    body = struct.pack("<QQ", actor.size, critic.size) + actor.tobytes() + critic.tobytes()
    Path(path).write_bytes(head + body)


def load_checkpoint(path: str | Path) -> PolicyParams:
    blob = Path(path).read_bytes()
    magic, node_count, input_dim, n_hidden = struct.unpack_from("<8sIII", blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic {magic!r})")
    at = struct.calcsize("<8sIII")
    hidden = struct.unpack_from(f"<{n_hidden}I", blob, at)
    at += 4 * n_hidden
    (digest,) = struct.unpack_from("<Q", blob, at)
    at += 8
    if digest != layout_digest(node_count, input_dim, hidden):
        raise ValueError(f"{path}: layout digest mismatch")
    n_actor, n_critic = struct.unpack_from("<QQ", blob, at)
    at += 16
    flat_actor = np.frombuffer(blob, dtype="<f8", count=n_actor, offset=at).copy()
    at += 8 * n_actor
    flat_critic = np.frombuffer(blob, dtype="<f8", count=n_critic, offset=at).copy()
    params = init_policy(node_count, input_dim, hidden, np.random.default_rng(0))
    set_flat(params.actor, flat_actor)
    set_flat(params.critic, flat_critic)
    return params
