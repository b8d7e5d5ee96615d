"""Scripted demonstrators: deterministic waypoint controllers per task.

Each controller is a pure function of the current scene (no hidden phase
variable): approach, engage, transport, disengage are all derived from
object geometry, so replaying a state sequence reproduces the action
sequence. Optional Gaussian velocity noise emulates teleoperation jitter;
at zero noise every task succeeds from any valid reset within its time
limit, which is what makes these usable as demonstration oracles.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import UnknownTask
from . import geometry as geo
from .world import (
    Action,
    DEFAULT_PARAMS,
    SceneState,
    SimParams,
    evaluate_success,
    task_spec,
)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    if n < 1e-12:
        return (1.0, 0.0)
    return (dx / n, dy / n)


def _toward(ee, target, speed_cap, gain=2.5, floor=0.0):
    dx, dy = target[0] - ee[0], target[1] - ee[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        return 0.0, 0.0, 0.0
    v = min(speed_cap, max(gain * dist, floor))
    ux, uy = dx / dist, dy / dist
    return v * ux, v * uy, dist


def _orbit_or_approach(ee, target, center, ring, speed):
    """Head to `target`; if the straight segment passes too close to
    `center`, orbit tangentially at radius `ring` instead."""
    tx, ty = target[0] - ee[0], target[1] - ee[1]
    seg_len = math.hypot(tx, ty)
    if seg_len < 1e-9:
        return (0.0, 0.0)
    # distance from center to the segment ee->target
    cx, cy = center[0] - ee[0], center[1] - ee[1]
    t = max(0.0, min(1.0, (cx * tx + cy * ty) / (seg_len * seg_len)))
    px, py = ee[0] + t * tx - center[0], ee[1] + t * ty - center[1]
    clearance = math.hypot(px, py)
    r_now = math.hypot(ee[0] - center[0], ee[1] - center[1])
    if clearance >= ring or r_now < 1e-9:
        ux, uy = tx / seg_len, ty / seg_len
        return (ux * speed, uy * speed)
    # orbit: tangential direction that closes the azimuth gap to the target
    rx, ry = (ee[0] - center[0]) / r_now, (ee[1] - center[1]) / r_now
    gx, gy = _unit(target[0] - center[0], target[1] - center[1])
    side = 1.0 if (rx * gy - ry * gx) >= 0.0 else -1.0
    tangx, tangy = -side * ry, side * rx
    # radial correction to hold the ring radius
    corr = max(-0.6, min(1.6, 8.0 * (ring - r_now)))
    dirx, diry = _unit(tangx + rx * corr, tangy + ry * corr)
    return (dirx * speed, diry * speed)


def _square_angle_error(goal_theta: float, theta: float) -> float:
    # squares are invariant under quarter turns
    d = goal_theta - theta
    return (d + math.pi / 4) % (math.pi / 2) - math.pi / 4


def _pick_place_action(state: SceneState, params: SimParams) -> Action:
    sugar = state.get("sugar_box")
    crate = state.get("crate")
    ee = state.ee.pose
    if sugar.attached_to == "ee":
        # carry so the box itself lands on the crate center
        off_x = sugar.pose[0] - ee[0]
        off_y = sugar.pose[1] - ee[1]
        target = (crate.pose[0] - off_x, crate.pose[1] - off_y)
        vx, vy, dist = _toward(ee, target, 0.22)
        if dist < 0.012:
            return Action(0.0, 0.0, 0.0, 0.0)  # release
        return Action(vx, vy, 0.0, 1.0)
    if evaluate_success("pick_place", state):
        return Action(0.0, 0.0, 0.0, 0.0)
    target = (sugar.pose[0], sugar.pose[1])
    vx, vy, dist = _toward(ee, target, 0.22)
    grip = 1.0 if dist <= params.grasp_radius * 0.98 else 0.0
    return Action(vx, vy, 0.0, grip)


def _cap_removal_action(state: SceneState, params: SimParams) -> Action:
    lid = state.get("lid")
    crate = state.get("crate")
    ee = state.ee.pose
    lid_length = max(lid.shape[1], lid.shape[2])
    if lid.attached_to == "ee":
        dist_lc = math.hypot(lid.pose[0] - crate.pose[0],
                             lid.pose[1] - crate.pose[1])
        if dist_lc > 1.8 * lid_length:
            return Action(0.0, 0.0, 0.0, 0.0)  # set the lid down here
        # retreat toward the workspace corner farthest from the crate
        x0, y0, x1, y1 = state.bounds
        inset = 0.07
        corners = ((x0 + inset, y0 + inset), (x1 - inset, y0 + inset),
                   (x0 + inset, y1 - inset), (x1 - inset, y1 - inset))
        far = max(corners, key=lambda c: math.hypot(c[0] - crate.pose[0],
                                                    c[1] - crate.pose[1]))
        off_x = lid.pose[0] - ee[0]
        off_y = lid.pose[1] - ee[1]
        target = (far[0] - off_x, far[1] - off_y)
        vx, vy, _ = _toward(ee, target, 0.22)
        return Action(vx, vy, 0.0, 1.0)
    if evaluate_success("cap_removal", state):
        return Action(0.0, 0.0, 0.0, 0.0)
    target = (lid.pose[0], lid.pose[1])
    vx, vy, dist = _toward(ee, target, 0.22)
    grip = 1.0 if dist <= params.grasp_radius * 0.98 else 0.0
    return Action(vx, vy, 0.0, grip)


def _crate_pushing_action(state: SceneState, params: SimParams) -> Action:
    crate = state.get("crate")
    goal = state.get("goal")
    ee = state.ee.pose
    if geo.iou(crate.rect(), goal.rect()) > 0.85:
        return Action(0.0, 0.0, 0.0, 0.0)

    cx, cy, ctheta = crate.pose
    half = 0.5 * crate.shape[1]
    half_diag = 0.5 * math.hypot(crate.shape[1], crate.shape[2])
    ring = half_diag + params.ee_radius + 0.025

    pos_err_x, pos_err_y = goal.pose[0] - cx, goal.pose[1] - cy
    e_p = math.hypot(pos_err_x, pos_err_y)
    theta_err = _square_angle_error(goal.pose[2], ctheta)

    if e_p > 0.006:
        dx, dy = pos_err_x / e_p, pos_err_y / e_p
        rx, ry = ee[0] - cx, ee[1] - cy
        behind = (rx * dx + ry * dy) < 0.0
        lateral = abs(rx * dy - ry * dx)
        r_now = math.hypot(rx, ry)
        if behind and lateral < 0.03 and r_now < 0.30:
            # drive at the crate center: self-centering push toward the goal
            speed = min(0.18, max(2.5 * e_p, 0.015))
            ux, uy = _unit(cx - ee[0], cy - ee[1])
            return Action(ux * speed, uy * speed, 0.0, 0.0)
        approach = (cx - dx * (ring + 0.005), cy - dy * (ring + 0.005))
        vx, vy = _orbit_or_approach(ee, approach, (cx, cy), ring, 0.2)
        return Action(vx, vy, 0.0, 0.0)

    if abs(theta_err) > 0.04:
        # lever push: contact a face off-center so the separation response
        # rotates the crate toward the goal orientation
        lever = math.copysign(min(0.06, half * 0.75), theta_err)
        c, s = math.cos(ctheta), math.sin(ctheta)
        faces = ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0))
        best = None
        for nx_l, ny_l in faces:
            tx_l, ty_l = -ny_l, nx_l  # CCW perpendicular
            ax_l = nx_l * (half + params.ee_radius + 0.05) + tx_l * lever
            ay_l = ny_l * (half + params.ee_radius + 0.05) + ty_l * lever
            ax = cx + c * ax_l - s * ay_l
            ay = cy + s * ax_l + c * ay_l
            d = math.hypot(ax - ee[0], ay - ee[1])
            if best is None or d < best[0]:
                push_wx = -(c * nx_l - s * ny_l)
                push_wy = -(s * nx_l + c * ny_l)
                best = (d, ax, ay, push_wx, push_wy)
        d, ax, ay, push_wx, push_wy = best
        rx, ry = ee[0] - ax, ee[1] - ay
        along = rx * push_wx + ry * push_wy
        lat = abs(rx * push_wy - ry * push_wx)
        if d < 0.015 or (-0.08 <= along <= 0.12 and lat < 0.03):
            speed = min(0.08, max(0.8 * abs(theta_err), 0.03))
            return Action(push_wx * speed, push_wy * speed, 0.0, 0.0)
        vx, vy = _orbit_or_approach(ee, (ax, ay), (cx, cy), ring, 0.2)
        return Action(vx, vy, 0.0, 0.0)

    return Action(0.0, 0.0, 0.0, 0.0)


_CONTROLLERS = {
    "pick_place": _pick_place_action,
    "cap_removal": _cap_removal_action,
    "crate_pushing": _crate_pushing_action,
}


def scripted_demonstrator(task: str, state: SceneState,
                          noise_scale: float = 0.0,
                          rng: np.random.Generator | None = None,
                          params: SimParams = DEFAULT_PARAMS) -> Action:
    """Demonstration action for the current state.

    noise_scale is the std of Gaussian velocity jitter as a fraction of
    the EE speed limit; the caller owns the noise stream so episodes stay
    reproducible under a fixed seed.
    """
    if task not in _CONTROLLERS:
        raise UnknownTask(f"no scripted demonstrator for task {task!r}")
    action = _CONTROLLERS[task](state, params)
    if noise_scale > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        nx, ny = rng.normal(0.0, noise_scale * params.v_max, size=2)
        action = Action(action.vx + float(nx), action.vy + float(ny),
                        action.omega, action.gripper)
    return action


def run_demonstration(task: str, seed: int, noise_scale: float = 0.0,
                      dt: float = 0.1,
                      params: SimParams = DEFAULT_PARAMS):
    """Roll the demonstrator from a seeded reset until success or timeout.

    Returns (trace, final_state, success) where trace is a list of
    (state_before, action) pairs, one per tick.
    """
    from .world import reset, step

    spec = task_spec(task)
    state = reset(task, seed, params)
    rng = np.random.default_rng(seed + 10_000_019)
    trace = []
    max_ticks = int(round(spec.time_limit / dt))
    for _ in range(max_ticks):
        action = scripted_demonstrator(task, state, noise_scale, rng, params)
        trace.append((state, action))
        state = step(state, action, dt, params)
        if evaluate_success(task, state):
            return trace, state, True
    return trace, state, evaluate_success(task, state)
