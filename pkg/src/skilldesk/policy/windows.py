"""Sliding training windows over recorded episodes.

Every frame of an episode anchors one window (stride 1), so the window
count equals the frame count. The observation slice looks back
``obs_horizon`` frames and the action slice looks ahead
``pred_horizon`` frames; both are clamped to the episode, replicating
the first or last frame at the edges.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyDataset
from ..recorder import episode_arrays


def episode_windows(obs: np.ndarray, actions: np.ndarray, obs_horizon: int,
                    pred_horizon: int) -> tuple[np.ndarray, np.ndarray]:
    obs = np.asarray(obs, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    n = obs.shape[0]
    if n == 0:
        raise EmptyDataset("episode has no frames")
    if actions.shape[0] != n:
        raise EmptyDataset(
            f"obs/action row mismatch: {n} vs {actions.shape[0]}")
    anchors = np.arange(n)[:, None]
    obs_idx = np.clip(anchors + np.arange(-obs_horizon + 1, 1)[None, :], 0,
                      n - 1)
    act_idx = np.clip(anchors + np.arange(pred_horizon)[None, :], 0, n - 1)
    return obs[obs_idx], actions[act_idx]


def build_training_arrays(episodes, obs_horizon: int,
                          pred_horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows from all episodes: (N, obs_horizon, Do), (N, pred_horizon, Da)."""
    obs_parts, act_parts = [], []
    for episode in episodes:
        obs, actions = episode_arrays(episode)
        ow, aw = episode_windows(obs, actions, obs_horizon, pred_horizon)
        obs_parts.append(ow)
        act_parts.append(aw)
    if not obs_parts:
        raise EmptyDataset("no episodes supplied")
    return np.concatenate(obs_parts, axis=0), np.concatenate(act_parts, axis=0)
