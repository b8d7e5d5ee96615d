"""Bridges the simulator's scripted demonstrator to episode storage."""

from __future__ import annotations

from typing import Optional

from .recorder import Episode, RecordingSession, save_episode
from .sim.scripted import run_demonstration
from .sim.world import observation_vector, task_spec


def record_demonstration(task: str, seed: int, noise_scale: float = 0.0,
                         dt: float = 0.1, operator: str = "scripted",
                         skill: Optional[str] = None,
                         now=None) -> Episode:
    """Run one scripted demonstration and package it as an episode.

    Frame timestamps follow a logical clock at the control rate, so the
    cadence check always passes regardless of wall time. The episode id
    is derived from the task and seed to keep repeated generation stable.
    """
    spec = task_spec(task)
    trace, _final, success = run_demonstration(task, seed,
                                               noise_scale=noise_scale, dt=dt)
    session = RecordingSession(
        skill=skill or task,
        operator=operator,
        dt_nominal=dt,
        now=now,
        episode_id=f"{task}-{seed:05d}",
    )
    for k, (state, action) in enumerate(trace):
        x, y, theta = state.ee.pose
        session.add(
            t=k * dt, x=x, y=y, theta=theta,
            action=action.as_array().tolist(),
            extras={"obs": observation_vector(state, spec).tolist()},
        )
    return session.finish(success=success)


def generate_dataset(task: str, count: int, root: str,
                     noise_scale: float = 0.1, dt: float = 0.1,
                     skill: Optional[str] = None, seed0: int = 0,
                     now=None) -> list[str]:
    """Record ``count`` demonstrations (seeds seed0..seed0+count-1) to disk."""
    paths = []
    for seed in range(seed0, seed0 + count):
        episode = record_demonstration(task, seed, noise_scale=noise_scale,
                                       dt=dt, skill=skill, now=now)
        paths.append(save_episode(root, episode))
    return paths
