"""Receding-horizon execution of chunked policies with injectable latency.

The policy emits chunks of ``pred_horizon`` actions; only the first
``act_horizon`` of each chunk are ever executed. Inference latency is
modeled in whole control ticks:

* the first chunk is requested before the clock starts, blocking, so a
  rollout always begins with actions in hand;
* after a chunk is swapped in at tick ``t_swap``, the next request goes
  out at ``t_swap + max(1, act_horizon - latency)`` conditioned on the
  observation history at that tick, and its result becomes available
  ``latency`` ticks later.

With zero latency the request leaves exactly when the buffer drains and
is answered the same tick, so conditioning is maximally fresh and a full
rollout of T ticks samples ceil(T / act_horizon) chunks. Any latency
below the executed-chunk length still produces zero hold ticks, just
with staler conditioning. At or above it, the buffer runs dry and the
executor holds position (zero velocities, gripper kept) until the next
chunk lands. Chunks always apply in request order.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from typing import Callable, Optional, Union

import numpy as np

from .diffusion import TrainedPolicy, sample_chunk


@dataclasses.dataclass(frozen=True)
class TickLog:
    tick: int
    action: tuple
    source: Union[int, str]  # chunk index, or "hold"


@dataclasses.dataclass
class ChunkRecord:
    index: int
    issue_tick: int
    ready_tick: int
    actions: np.ndarray  # full sampled chunk (pred_horizon, action_dim)
    conditioned_obs: np.ndarray = None  # history snapshot at issue time
    swap_tick: Optional[int] = None


@dataclasses.dataclass
class RolloutResult:
    ticks: list
    chunks: list  # swapped-in chunks, in execution order
    hold_count: int
    success: bool
    final_state: object
    sampled_count: int = 0  # includes a request still in flight at the end

    @property
    def chunk_count(self) -> int:
        return len(self.chunks)

    def executed_actions(self) -> np.ndarray:
        return np.array([t.action for t in self.ticks])


def _default_hold(last_action: np.ndarray) -> np.ndarray:
    held = np.zeros_like(last_action)
    held[-1] = last_action[-1]  # keep the gripper where it was
    return held


def run_receding_horizon(policy: TrainedPolicy, initial_state,
                         step_fn: Callable, obs_fn: Callable,
                         max_ticks: int,
                         success_fn: Optional[Callable] = None,
                         latency_ticks: int = 0,
                         rng: Optional[np.random.Generator] = None,
                         hold_fn: Callable = _default_hold) -> RolloutResult:
    """Roll the policy out against an environment closure.

    ``step_fn(state, action_row) -> state`` advances one tick,
    ``obs_fn(state) -> vector`` reads the policy observation, and the
    optional ``success_fn(state) -> bool`` terminates the rollout early.
    """
    if latency_ticks < 0:
        raise ValueError("latency_ticks must be >= 0")
    rng = rng or np.random.default_rng(0)
    cfg = policy.config
    act_h = cfg.act_horizon

    history = deque([np.asarray(obs_fn(initial_state), dtype=np.float64)]
                    * cfg.obs_horizon, maxlen=cfg.obs_horizon)

    def request(issue_tick: int, ready_tick: int, index: int) -> ChunkRecord:
        snapshot = np.stack(history)
        chunk = sample_chunk(policy, snapshot, rng)
        return ChunkRecord(index=index, issue_tick=issue_tick,
                           ready_tick=ready_tick, actions=chunk,
                           conditioned_obs=snapshot)

    # bootstrap: block for the first chunk before the clock starts
    pending: Optional[ChunkRecord] = request(0, 0, 0)
    next_issue: Optional[int] = None
    buffer: list = []
    chunks: list = []
    ticks: list = []
    hold_count = 0
    current_chunk = -1
    last_action: Optional[np.ndarray] = None
    success = False
    state = initial_state

    for t in range(max_ticks):
        if t > 0:
            history.append(np.asarray(obs_fn(state), dtype=np.float64))
        if pending is None and next_issue is not None and t >= next_issue:
            pending = request(t, t + latency_ticks, len(chunks))
        if not buffer and pending is not None and pending.ready_tick <= t:
            pending.swap_tick = t
            buffer = [np.array(row) for row in pending.actions[:act_h]]
            current_chunk = pending.index
            chunks.append(pending)
            pending = None
            next_issue = t + max(1, act_h - latency_ticks)

        if buffer:
            action = buffer.pop(0)
            source: Union[int, str] = current_chunk
            last_action = action
        else:
            action = hold_fn(last_action)
            source = "hold"
            hold_count += 1

        state = step_fn(state, action)
        ticks.append(TickLog(tick=t, action=tuple(float(a) for a in action),
                             source=source))
        if success_fn is not None and success_fn(state):
            success = True
            break

    return RolloutResult(ticks=ticks, chunks=chunks, hold_count=hold_count,
                         success=success, final_state=state,
                         sampled_count=len(chunks) + (pending is not None))


def rollout_in_sim(policy: TrainedPolicy, task: str, seed: int,
                   latency_ticks: int = 0,
                   sample_seed: Optional[int] = None,
                   max_ticks: Optional[int] = None,
                   success_check: bool = True) -> RolloutResult:
    """Receding-horizon rollout in the tabletop simulator."""
    from ..sim.world import (Action, evaluate_success, observation_vector,
                             reset, step, task_spec)

    spec = task_spec(task)
    state = reset(task, seed)
    if max_ticks is None:
        max_ticks = int(round(spec.time_limit / policy.config.control_dt))
    rng = np.random.default_rng(
        sample_seed if sample_seed is not None else seed + 20_000_003)

    return run_receding_horizon(
        policy,
        state,
        step_fn=lambda s, row: step(s, Action.from_array(row),
                                    dt=policy.config.control_dt),
        obs_fn=lambda s: observation_vector(s, spec),
        max_ticks=max_ticks,
        success_fn=(lambda s: evaluate_success(task, s)) if success_check
        else None,
        latency_ticks=latency_ticks,
        rng=rng,
    )
