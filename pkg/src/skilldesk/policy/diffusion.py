"""Action-chunk denoising diffusion trained by behavioral cloning.

The model learns to predict the noise added to normalized action chunks
(epsilon prediction). Conditioning is plain concatenation: a sinusoidal
embedding of the diffusion step, the flattened observation history, and
the flattened noisy chunk all feed one dense network. Sampling runs the
standard ancestral reverse process from unit Gaussian noise.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import DimMismatch, DivergedLoss, EmptyDataset
from .mlp import MLP, Adam
from .normalize import Normalizer
from .windows import build_training_arrays


@dataclasses.dataclass(frozen=True)
class PolicyConfig:
    obs_dim: int
    action_dim: int
    obs_horizon: int = 2
    pred_horizon: int = 14
    act_horizon: int = 8
    control_dt: float = 0.1
    diffusion_steps: int = 50
    schedule_offset: float = 0.008
    hidden: tuple = (256, 256, 256)
    embed_dim: int = 32
    epochs: int = 600
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.act_horizon > self.pred_horizon:
            raise DimMismatch("act_horizon cannot exceed pred_horizon")
        if self.obs_horizon < 1 or self.pred_horizon < 1:
            raise DimMismatch("horizons must be positive")
        if self.embed_dim % 2:
            raise DimMismatch("embed_dim must be even")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def input_dim(self) -> int:
        return (self.embed_dim + self.obs_horizon * self.obs_dim
                + self.pred_horizon * self.action_dim)

    @property
    def chunk_dim(self) -> int:
        return self.pred_horizon * self.action_dim

    def to_document(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["hidden"] = list(self.hidden)
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "PolicyConfig":
        doc = dict(doc)
        doc["hidden"] = tuple(doc.get("hidden", (256, 256, 256)))
        return cls(**doc)


# ---- noise schedule ----

def cosine_alpha_bar(steps: int, offset: float = 0.008) -> np.ndarray:
    """Cumulative signal fraction for k = 0..steps; exactly 1 at k = 0."""
    k = np.arange(steps + 1, dtype=np.float64)
    f = np.cos(((k / steps + offset) / (1.0 + offset)) * (math.pi / 2)) ** 2
    alpha_bar = f / f[0]
    alpha_bar[0] = 1.0
    return alpha_bar


def beta_schedule(steps: int, offset: float = 0.008) -> tuple[np.ndarray, np.ndarray]:
    """Returns (alpha_bar[0..K], beta[0..K]); beta[0] is a placeholder 0.

    Per-step noise comes from ratios of the cosine curve, capped at 0.999;
    alpha_bar is then rebuilt from the capped betas so the corruption used
    in training and the chain walked in sampling agree exactly.
    """
    raw = cosine_alpha_bar(steps, offset)
    beta = np.zeros(steps + 1)
    beta[1:] = 1.0 - raw[1:] / raw[:-1]
    beta[1:] = np.clip(beta[1:], 1e-8, 0.999)
    alpha_bar = np.empty(steps + 1)
    alpha_bar[0] = 1.0
    alpha_bar[1:] = np.cumprod(1.0 - beta[1:])
    return alpha_bar, beta


def forward_corrupt(x0: np.ndarray, eps: np.ndarray,
                    alpha_bar_k) -> np.ndarray:
    """q(x_k | x_0): scale the clean chunk and mix in noise.

    With a signal coefficient of exactly 1 this is the identity.
    """
    ab = np.asarray(alpha_bar_k, dtype=np.float64)
    signal = np.sqrt(ab)
    noise = np.sqrt(1.0 - ab)
    if ab.ndim:  # per-row coefficients for a batch
        signal = signal[:, None]
        noise = noise[:, None]
    return signal * x0 + noise * eps


def sinusoidal_embedding(k, dim: int) -> np.ndarray:
    """Classic sin/cos positional features of the diffusion step index."""
    k = np.atleast_1d(np.asarray(k, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = k[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


# ---- the trained artifact ----

@dataclasses.dataclass(eq=False)
class TrainedPolicy:
    config: PolicyConfig
    obs_norm: Normalizer
    act_norm: Normalizer
    net: MLP
    loss_curve: np.ndarray

    def predict_noise(self, k: np.ndarray, obs_flat: np.ndarray,
                      noisy_chunk: np.ndarray) -> np.ndarray:
        inp = np.concatenate([
            sinusoidal_embedding(k, self.config.embed_dim),
            obs_flat,
            noisy_chunk,
        ], axis=1)
        return self.net(inp)


def _network_sizes(config: PolicyConfig) -> list[int]:
    return [config.input_dim, *config.hidden, config.chunk_dim]


def _flatten_windows(config: PolicyConfig, obs_norm: Normalizer,
                     act_norm: Normalizer, obs_w: np.ndarray,
                     act_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = obs_w.shape[0]
    obs_flat = obs_norm.normalize(obs_w).reshape(n, -1)
    act_flat = act_norm.normalize(act_w).reshape(n, -1)
    return obs_flat, act_flat


def train_policy(episodes, config: PolicyConfig,
                 progress: Optional[Callable[[int, float], None]] = None
                 ) -> TrainedPolicy:
    """Behavioral cloning by denoising score matching over action chunks.

    Fully deterministic for a given config and dataset: one seeded
    generator drives initialization, shuffling, step sampling, and noise.
    The recorded loss curve is an evaluation loss on a frozen probe set
    (fixed windows, steps, and noise), measured before training and after
    every epoch, so curve values are comparable across epochs.
    """
    obs_w, act_w = build_training_arrays(episodes, config.obs_horizon,
                                         config.pred_horizon)
    if not (np.isfinite(obs_w).all() and np.isfinite(act_w).all()):
        raise ValueError("training data contains non-finite values")
    if obs_w.shape[-1] != config.obs_dim:
        raise DimMismatch(
            f"episodes have obs dim {obs_w.shape[-1]}, config says {config.obs_dim}")
    if act_w.shape[-1] != config.action_dim:
        raise DimMismatch(
            f"episodes have action dim {act_w.shape[-1]}, config says {config.action_dim}")

    rng = np.random.default_rng(config.seed)
    net = MLP(_network_sizes(config), rng)
    obs_norm = Normalizer.fit(obs_w.reshape(-1, config.obs_dim))
    act_norm = Normalizer.fit(act_w.reshape(-1, config.action_dim))
    obs_flat, act_flat = _flatten_windows(config, obs_norm, act_norm,
                                          obs_w, act_w)
    n = obs_flat.shape[0]
    if n == 0:
        raise EmptyDataset("no training windows")

    alpha_bar, beta = beta_schedule(config.diffusion_steps,
                                    config.schedule_offset)
    steps = config.diffusion_steps

    # frozen probe set: loss on it depends only on the weights
    probe_n = min(n, 1024)
    probe_idx = rng.permutation(n)[:probe_n]
    probe_k = rng.integers(1, steps + 1, size=probe_n)
    probe_eps = rng.standard_normal((probe_n, config.chunk_dim))
    probe_obs = obs_flat[probe_idx]
    probe_x = forward_corrupt(act_flat[probe_idx], probe_eps,
                              alpha_bar[probe_k])
    probe_emb = sinusoidal_embedding(probe_k, config.embed_dim)
    probe_inp = np.concatenate([probe_emb, probe_obs, probe_x], axis=1)

    def probe_loss() -> float:
        pred = net(probe_inp)
        return float(np.mean((pred - probe_eps) ** 2))

    adam = Adam(net.parameters(), lr=config.learning_rate)
    first = probe_loss()
    if not math.isfinite(first):
        raise DivergedLoss(0, first)
    curve = [first]

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            x0 = act_flat[idx]
            k = rng.integers(1, steps + 1, size=len(idx))
            eps = rng.standard_normal(x0.shape)
            xk = forward_corrupt(x0, eps, alpha_bar[k])
            inp = np.concatenate([
                sinusoidal_embedding(k, config.embed_dim),
                obs_flat[idx],
                xk,
            ], axis=1)
            pred, cache = net.forward(inp)
            diff = pred - eps
            batch_loss = float(np.mean(diff ** 2))
            if not math.isfinite(batch_loss):
                raise DivergedLoss(epoch, batch_loss)
            grad = (2.0 / diff.size) * diff
            grad_w, grad_b, _ = net.backward(cache, grad)
            grads = []
            for gw, gb in zip(grad_w, grad_b):
                grads.append(gw)
                grads.append(gb)
            adam.step(net.parameters(), grads)
        epoch_loss = probe_loss()
        if not math.isfinite(epoch_loss):
            raise DivergedLoss(epoch, epoch_loss)
        curve.append(epoch_loss)
        if progress is not None:
            progress(epoch, epoch_loss)

    return TrainedPolicy(config=config, obs_norm=obs_norm, act_norm=act_norm,
                         net=net, loss_curve=np.asarray(curve))


def sample_chunk(policy: TrainedPolicy, obs_history,
                 rng: np.random.Generator) -> np.ndarray:
    """One denoised action chunk (pred_horizon, action_dim), denormalized.

    Ancestral sampling: start from unit Gaussian noise, walk the reverse
    chain with the posterior variance, then map the result back to action
    units. Each step reconstructs the clean-chunk estimate, clamps it to
    the unit box (normalized actions live there by construction), and
    takes the posterior mean of that clamped estimate; without the clamp,
    prediction error at high-noise steps gets amplified by the small
    signal coefficient and the chain leaves the trained distribution.
    """
    cfg = policy.config
    obs = np.asarray(obs_history, dtype=np.float64)
    if obs.shape != (cfg.obs_horizon, cfg.obs_dim):
        raise DimMismatch(
            f"expected obs history {(cfg.obs_horizon, cfg.obs_dim)}, got {obs.shape}")
    obs_flat = policy.obs_norm.normalize(obs).reshape(1, -1)

    alpha_bar, beta = beta_schedule(cfg.diffusion_steps, cfg.schedule_offset)
    x = rng.standard_normal((1, cfg.chunk_dim))
    for k in range(cfg.diffusion_steps, 0, -1):
        eps_hat = policy.predict_noise(np.array([k]), obs_flat, x)
        x0_hat = (x - math.sqrt(1.0 - alpha_bar[k]) * eps_hat) \
            / math.sqrt(alpha_bar[k])
        x0_hat = np.clip(x0_hat, -1.0, 1.0)
        if k > 1:
            alpha_k = 1.0 - beta[k]
            denom = 1.0 - alpha_bar[k]
            coef_x0 = math.sqrt(alpha_bar[k - 1]) * beta[k] / denom
            coef_xk = math.sqrt(alpha_k) * (1.0 - alpha_bar[k - 1]) / denom
            var = (1.0 - alpha_bar[k - 1]) / denom * beta[k]
            x = coef_x0 * x0_hat + coef_xk * x \
                + math.sqrt(var) * rng.standard_normal(x.shape)
        else:
            x = x0_hat
    x = x.reshape(cfg.pred_horizon, cfg.action_dim)
    return policy.act_norm.denormalize(x)
