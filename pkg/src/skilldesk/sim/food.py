"""Food-serving scene vocabulary.

The desk-scale analog of the kitchen tabletop: a beer bottle that may wear
a metal cap, a white bowl that may contain rice, a glass pan cover that is
either covering the bowl or set down on the table, a green plate holding
zero or more sausages, and a red bowl. Skill feasibility is derived from
these objects, and the four canonical food skills execute as scripted
waypoint programs whose semantic effects (cap off, rice served, ...) are
applied at well-defined milestones. Real cooking physics is out of scope;
the programs exist so the full prompt -> check -> execute loop runs end to
end in the simulator.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..errors import UnknownTask, VocabularyMismatch
from .world import (
    Action,
    EndEffector,
    SceneObject,
    SceneState,
    SimParams,
    DEFAULT_PARAMS,
    step,
)

FOOD_KINDS = ("bottle", "white_bowl", "pan_cover", "green_plate", "red_bowl")

CANONICAL_SKILLS = ("SERVE RICE", "OPEN BEER", "SERVE SAUSAGE", "REMOVE LID")


def make_food_scene(*, bottle: bool = True, capped: bool = True,
                    white_bowl: bool = True, rice: bool = True,
                    pan_cover: str | None = "on_bowl",
                    green_plate: bool = True, sausages: int = 3,
                    red_bowl: bool = True, seed: int = 0,
                    params: SimParams = DEFAULT_PARAMS) -> SceneState:
    """Build a food scene; pan_cover is "on_bowl", "on_table", or None."""
    rng = np.random.default_rng(seed)

    def jitter(x, y, r=0.012):
        return (x + float(rng.uniform(-r, r)), y + float(rng.uniform(-r, r)),
                float(rng.uniform(-0.2, 0.2)))

    objects: list[SceneObject] = []
    bowl_pose = jitter(0.32, 0.40)
    if white_bowl:
        objects.append(SceneObject(
            id="white_bowl", kind="white_bowl", pose=bowl_pose,
            shape=("disc", 0.06), extras={"contains_rice": bool(rice)}))
    if pan_cover is not None:
        if pan_cover == "on_bowl":
            pose = (bowl_pose[0], bowl_pose[1], 0.0)
        elif pan_cover == "on_table":
            pose = jitter(0.16, 0.24)
        else:
            raise UnknownTask(f"pan_cover must be 'on_bowl'/'on_table'/None,"
                              f" got {pan_cover!r}")
        objects.append(SceneObject(id="pan_cover", kind="pan_cover", pose=pose,
                                   shape=("disc", 0.055), layer=1))
    if bottle:
        objects.append(SceneObject(
            id="bottle", kind="bottle", pose=jitter(0.14, 0.46),
            shape=("disc", 0.025), extras={"has_cap": bool(capped)}))
    if green_plate:
        objects.append(SceneObject(
            id="green_plate", kind="green_plate", pose=jitter(0.56, 0.44),
            shape=("disc", 0.07), extras={"sausages": int(sausages)}))
    if red_bowl:
        objects.append(SceneObject(
            id="red_bowl", kind="red_bowl", pose=jitter(0.60, 0.18),
            shape=("disc", 0.06), extras={}))

    return SceneState(task="food", objects=tuple(objects),
                      ee=EndEffector(pose=(0.06, 0.06, 0.0)),
                      bounds=params.bounds)


def _covering_bowl(state: SceneState) -> bool:
    cover = state.get("pan_cover")
    bowl = state.get("white_bowl")
    if cover is None or bowl is None:
        return False
    d = math.hypot(cover.pose[0] - bowl.pose[0], cover.pose[1] - bowl.pose[1])
    return d < bowl.radius()


def preconditions_truth(state: SceneState) -> dict[str, bool]:
    """Ground-truth feasibility of the four canonical food skills.

    An empty scene yields all False. A scene with objects but none of the
    food vocabulary raises VocabularyMismatch (it is some other task's
    scene, not a food scene missing everything).
    """
    if state.objects and not any(o.kind in FOOD_KINDS for o in state.objects):
        raise VocabularyMismatch(
            f"scene contains no food-vocabulary objects; kinds present:"
            f" {sorted({o.kind for o in state.objects})}")

    bottle = state.get("bottle")
    white_bowl = state.get("white_bowl")
    green_plate = state.get("green_plate")
    red_bowl = state.get("red_bowl")

    return {
        "OPEN BEER": bool(bottle is not None
                          and bottle.extras.get("has_cap", False)),
        "SERVE RICE": bool(white_bowl is not None
                           and white_bowl.extras.get("contains_rice", False)
                           and red_bowl is not None),
        "SERVE SAUSAGE": bool(green_plate is not None
                              and green_plate.extras.get("sausages", 0) >= 1
                              and red_bowl is not None),
        "REMOVE LID": bool(state.get("pan_cover") is not None
                           and _covering_bowl(state)),
    }


def amend_scene(state: SceneState, *, capped: bool | None = None,
                rice: bool | None = None, sausages: int | None = None,
                pan_cover: str | None = None) -> SceneState:
    """Targeted semantic edits to a food scene (operator corrections).

    Only the named aspects change; omitted ones keep their value. Moving
    the pan cover snaps it onto the bowl or to the standard set-down
    spot on the table.
    """
    if capped is not None:
        if state.get("bottle") is None:
            raise VocabularyMismatch("scene has no bottle to cap")
        state = _set_extra(state, "bottle", "has_cap", bool(capped))
    if rice is not None:
        if state.get("white_bowl") is None:
            raise VocabularyMismatch("scene has no white bowl")
        state = _set_extra(state, "white_bowl", "contains_rice", bool(rice))
    if sausages is not None:
        if state.get("green_plate") is None:
            raise VocabularyMismatch("scene has no green plate")
        if sausages < 0:
            raise VocabularyMismatch("sausage count cannot be negative")
        state = _set_extra(state, "green_plate", "sausages", int(sausages))
    if pan_cover is not None:
        cover = state.get("pan_cover")
        if cover is None:
            raise VocabularyMismatch("scene has no pan cover")
        if pan_cover == "on_bowl":
            bowl = state.get("white_bowl")
            if bowl is None:
                raise VocabularyMismatch("no white bowl to cover")
            pose = (bowl.pose[0], bowl.pose[1], cover.pose[2])
        elif pan_cover == "on_table":
            pose = (0.16, 0.24, cover.pose[2])
        else:
            raise VocabularyMismatch(
                f"pan_cover must be 'on_bowl' or 'on_table', got {pan_cover!r}")
        objects = tuple(dataclasses.replace(o, pose=pose)
                        if o.id == "pan_cover" else o for o in state.objects)
        state = dataclasses.replace(state, objects=objects)
    return state


# ---- scripted food-skill programs ----
#
# Each program is a deterministic waypoint routine: drive the EE to a
# sequence of targets, applying the skill's semantic effect when the
# engage waypoint is reached. Programs return the per-tick trace so the
# UI can animate execution like any policy rollout.

def _set_extra(state: SceneState, object_id: str, key: str, value) -> SceneState:
    objects = []
    for o in state.objects:
        if o.id == object_id:
            extras = dict(o.extras)
            extras[key] = value
            o = dataclasses.replace(o, extras=extras)
        objects.append(o)
    return dataclasses.replace(state, objects=tuple(objects))


def _drive_to(state, target, dt, params, trace, speed=0.2, tol=0.01,
              max_steps=200, gripper=None):
    for _ in range(max_steps):
        ex, ey, _ = state.ee.pose
        dx, dy = target[0] - ex, target[1] - ey
        dist = math.hypot(dx, dy)
        if dist < tol:
            return state
        v = min(speed, 2.5 * dist)
        g = state.ee.gripper if gripper is None else gripper
        action = Action(vx=v * dx / dist, vy=v * dy / dist, omega=0.0,
                        gripper=g)
        state = step(state, action, dt, params)
        trace.append((action, state))
    return state


def _pulse_gripper(state, value, dt, params, trace):
    action = Action(0.0, 0.0, 0.0, value)
    state = step(state, action, dt, params)
    trace.append((action, state))
    return state


def run_food_program(skill_name: str, state: SceneState, dt: float = 0.1,
                     params: SimParams = DEFAULT_PARAMS):
    """Execute one canonical food skill; returns (trace, final_state).

    trace is a list of (action, state_after) tuples, one per tick.
    """
    name = skill_name.upper()
    if name not in CANONICAL_SKILLS:
        raise UnknownTask(f"no scripted program for skill {name!r}")
    trace: list[tuple[Action, SceneState]] = []

    if name == "OPEN BEER":
        bottle = state.get("bottle")
        if bottle is None:
            raise VocabularyMismatch("scene has no bottle")
        approach = (bottle.pose[0], bottle.pose[1] - bottle.radius() - 0.035)
        state = _drive_to(state, approach, dt, params, trace)
        state = _set_extra(state, "bottle", "has_cap", False)
        state = _pulse_gripper(state, 0.0, dt, params, trace)

    elif name == "REMOVE LID":
        cover = state.get("pan_cover")
        if cover is None:
            raise VocabularyMismatch("scene has no pan cover")
        state = _drive_to(state, (cover.pose[0], cover.pose[1]), dt, params,
                          trace, tol=0.02)
        state = _pulse_gripper(state, 1.0, dt, params, trace)  # grasp
        set_down = (0.16, 0.14)
        state = _drive_to(state, set_down, dt, params, trace, gripper=1.0,
                          tol=0.015)
        state = _pulse_gripper(state, 0.0, dt, params, trace)  # release

    elif name == "SERVE RICE":
        bowl = state.get("white_bowl")
        red = state.get("red_bowl")
        if bowl is None or red is None:
            raise VocabularyMismatch("scene needs white_bowl and red_bowl")
        rim = (bowl.pose[0], bowl.pose[1] - bowl.radius() - 0.03)
        state = _drive_to(state, rim, dt, params, trace)
        red_rim = (red.pose[0], red.pose[1] + red.radius() + 0.03)
        state = _drive_to(state, red_rim, dt, params, trace)
        state = _set_extra(state, "red_bowl", "contains_rice", True)
        state = _pulse_gripper(state, 0.0, dt, params, trace)

    elif name == "SERVE SAUSAGE":
        plate = state.get("green_plate")
        red = state.get("red_bowl")
        if plate is None or red is None:
            raise VocabularyMismatch("scene needs green_plate and red_bowl")
        count = plate.extras.get("sausages", 0)
        rim = (plate.pose[0], plate.pose[1] - plate.radius() - 0.03)
        state = _drive_to(state, rim, dt, params, trace)
        red_rim = (red.pose[0], red.pose[1] + red.radius() + 0.03)
        state = _drive_to(state, red_rim, dt, params, trace)
        state = _set_extra(state, "green_plate", "sausages", 0)
        state = _set_extra(state, "red_bowl", "sausages",
                           red.extras.get("sausages", 0) + count)
        state = _pulse_gripper(state, 0.0, dt, params, trace)

    return trace, state
