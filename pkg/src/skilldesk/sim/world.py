"""Scene state and quasi-static dynamics for the 2-D tabletop world.

The world is a bounded rectangle of table seen from above. The end
effector is a disc driven by planar velocity commands; free rectangles it
penetrates are shoved out along the minimal separation vector and receive
a rotation about the contact point proportional to the tangential offset
(a cheap but deterministic stand-in for frictional pushing). A gripper
scalar crossing 0.5 upward within grasp range attaches the nearest object,
crossing downward releases it. States are immutable; step returns a new
state.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteAction, PlacementFailure, UnknownTask
from . import geometry as geo

SCENE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimParams:
    """Tunable limits of the world. Defaults are desk-scale meters/seconds."""

    bounds: tuple[float, float, float, float] = (0.0, 0.0, 0.8, 0.6)
    v_max: float = 0.25            # EE linear speed limit, m/s
    omega_max: float = 2.0         # EE angular speed limit, rad/s
    ee_radius: float = 0.02        # EE disc radius, m
    grasp_radius: float = 0.09     # max distance EE center to grasp point
    rotation_gain: float = 40.0    # rad per m^2 of contact lever * depth
    max_resolve_iters: int = 10
    placement_attempts: int = 100


DEFAULT_PARAMS = SimParams()


@dataclass(frozen=True)
class SceneObject:
    id: str
    kind: str
    pose: tuple[float, float, float]        # x, y, theta
    shape: tuple                            # ("rect", w, h) or ("disc", r)
    attached_to: str | None = None          # "ee" while grasped
    fixed: bool = False                     # never moves (containers, markings)
    layer: int = 0                          # -1 = painted marking, 1 = stacked on top
    extras: dict = field(default_factory=dict)

    def rect(self) -> tuple[float, float, float, float, float]:
        assert self.shape[0] == "rect"
        return (self.pose[0], self.pose[1], self.shape[1], self.shape[2],
                self.pose[2])

    def radius(self) -> float:
        assert self.shape[0] == "disc"
        return self.shape[1]


@dataclass(frozen=True)
class EndEffector:
    pose: tuple[float, float, float] = (0.05, 0.05, 0.0)
    gripper: float = 0.0
    tool: str = "none"


@dataclass(frozen=True)
class SceneState:
    task: str
    objects: tuple[SceneObject, ...]
    ee: EndEffector
    bounds: tuple[float, float, float, float]
    time: float = 0.0

    def get(self, object_id: str) -> SceneObject | None:
        for o in self.objects:
            if o.id == object_id:
                return o
        return None

    def attached_object(self) -> SceneObject | None:
        for o in self.objects:
            if o.attached_to == "ee":
                return o
        return None


@dataclass(frozen=True)
class Action:
    """Planar velocity command plus a gripper scalar in [0, 1]."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0
    gripper: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.omega, self.gripper])

    @staticmethod
    def from_array(a) -> "Action":
        return Action(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


ACTION_DIM = 4


@dataclass(frozen=True)
class TaskSpec:
    task: str
    time_limit: float
    obs_objects: tuple[str, ...]


_TASK_SPECS = {
    "cap_removal": TaskSpec("cap_removal", 20.0, ("lid", "crate")),
    "crate_pushing": TaskSpec("crate_pushing", 60.0, ("crate", "goal")),
    "pick_place": TaskSpec("pick_place", 20.0, ("sugar_box", "crate")),
}


def task_spec(task: str) -> TaskSpec:
    if task not in _TASK_SPECS:
        raise UnknownTask(f"unknown task {task!r}; known: {sorted(_TASK_SPECS)}")
    return _TASK_SPECS[task]


def observation_dim(task: str) -> int:
    return 4 + 3 * len(task_spec(task).obs_objects)


def observation_vector(state: SceneState, spec: TaskSpec) -> np.ndarray:
    """Low-dimensional observation: EE pose, gripper, task object poses."""
    parts = [state.ee.pose[0], state.ee.pose[1], state.ee.pose[2],
             state.ee.gripper]
    for oid in spec.obs_objects:
        obj = state.get(oid)
        if obj is None:
            raise UnknownTask(f"scene lacks object {oid!r} for task {spec.task}")
        parts.extend(obj.pose)
    return np.array(parts)


# ---- dynamics ----

def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _clamp_action(action: Action, params: SimParams) -> Action:
    vals = (action.vx, action.vy, action.omega, action.gripper)
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteAction(f"action has non-finite components: {vals}")
    speed = math.hypot(action.vx, action.vy)
    scale = params.v_max / speed if speed > params.v_max else 1.0
    return Action(
        vx=action.vx * scale,
        vy=action.vy * scale,
        omega=_clamp(action.omega, -params.omega_max, params.omega_max),
        gripper=_clamp(action.gripper, 0.0, 1.0),
    )


def _clamp_point(x: float, y: float,
                 bounds: tuple[float, float, float, float]) -> tuple[float, float]:
    return (_clamp(x, bounds[0], bounds[2]), _clamp(y, bounds[1], bounds[3]))


def _rotate_about(px: float, py: float, cx: float, cy: float,
                  dtheta: float) -> tuple[float, float]:
    c, s = math.cos(dtheta), math.sin(dtheta)
    dx, dy = px - cx, py - cy
    return (cx + c * dx - s * dy, cy + s * dx + c * dy)


def _resolve_rect_push(obj: SceneObject, ex: float, ey: float,
                       params: SimParams,
                       bounds: tuple[float, float, float, float]) -> SceneObject:
    x, y, theta = obj.pose
    w, h = obj.shape[1], obj.shape[2]
    for it in range(params.max_resolve_iters):
        depth, push, contact = geo.disc_rect_penetration(
            ex, ey, params.ee_radius, x, y, w, h, theta)
        if depth <= 1e-9:
            break
        x += depth * push[0]
        y += depth * push[1]
        if it == 0:
            # torque-like rotation about the contact point; lever arm is the
            # signed distance of the center from the push line
            contact = (contact[0] + depth * push[0], contact[1] + depth * push[1])
            lever = ((contact[0] - x) * push[1] - (contact[1] - y) * push[0])
            dtheta = params.rotation_gain * lever * depth
            if dtheta != 0.0:
                x, y = _rotate_about(x, y, contact[0], contact[1], dtheta)
                theta = geo.wrap_angle(theta + dtheta)
        x, y = _clamp_point(x, y, bounds)
    return dataclasses.replace(obj, pose=(x, y, theta))


def _resolve_disc_push(obj: SceneObject, ex: float, ey: float,
                       params: SimParams,
                       bounds: tuple[float, float, float, float]) -> SceneObject:
    x, y, theta = obj.pose
    depth, push = geo.disc_disc_penetration(ex, ey, params.ee_radius,
                                            x, y, obj.radius())
    if depth > 1e-9:
        x += depth * push[0]
        y += depth * push[1]
        x, y = _clamp_point(x, y, bounds)
    return dataclasses.replace(obj, pose=(x, y, theta))


def _grasp_point(obj: SceneObject) -> tuple[float, float]:
    return (obj.pose[0], obj.pose[1])


def step(state: SceneState, action: Action, dt: float = 0.1,
         params: SimParams = DEFAULT_PARAMS) -> SceneState:
    """Advance the world by one control interval.

    Order of operations: clamp the action, integrate the EE velocity, move
    the attached object rigidly with the EE, resolve EE penetrations
    against free objects, then apply gripper attach/detach on the 0.5
    crossing. A zero action leaves everything but time unchanged.
    """
    act = _clamp_action(action, params)

    old_ex, old_ey, old_eth = state.ee.pose
    ex = old_ex + act.vx * dt
    ey = old_ey + act.vy * dt
    ex, ey = _clamp_point(ex, ey, state.bounds)
    eth = geo.wrap_angle(old_eth + act.omega * dt)

    # rigid carry: preserve the object pose relative to the EE frame
    objects = list(state.objects)
    for i, obj in enumerate(objects):
        if obj.attached_to != "ee":
            continue
        c, s = math.cos(old_eth), math.sin(old_eth)
        dx, dy = obj.pose[0] - old_ex, obj.pose[1] - old_ey
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        rel_theta = obj.pose[2] - old_eth
        c2, s2 = math.cos(eth), math.sin(eth)
        nx = ex + c2 * lx - s2 * ly
        ny = ey + s2 * lx + c2 * ly
        objects[i] = dataclasses.replace(
            obj, pose=(nx, ny, geo.wrap_angle(eth + rel_theta)))

    # quasi-static pushing of free objects
    for i, obj in enumerate(objects):
        if obj.fixed or obj.attached_to is not None or obj.layer < 0:
            continue
        if obj.shape[0] == "rect":
            objects[i] = _resolve_rect_push(obj, ex, ey, params, state.bounds)
        else:
            objects[i] = _resolve_disc_push(obj, ex, ey, params, state.bounds)

    # gripper crossing logic
    prev_g = state.ee.gripper
    new_g = act.gripper
    if prev_g < 0.5 <= new_g:
        # prefer the topmost layer, then the nearest center, so closing on
        # a stacked lid never grabs the container underneath
        best_i, best_key = -1, (0, params.grasp_radius)
        for i, obj in enumerate(objects):
            if obj.fixed or obj.attached_to is not None or obj.layer < 0:
                continue
            gx, gy = _grasp_point(obj)
            d = math.hypot(gx - ex, gy - ey)
            if d > params.grasp_radius:
                continue
            key = (-obj.layer, d)
            if best_i < 0 or key < best_key:
                best_i, best_key = i, key
        if best_i >= 0:
            objects[best_i] = dataclasses.replace(objects[best_i],
                                                  attached_to="ee")
    elif prev_g >= 0.5 > new_g:
        for i, obj in enumerate(objects):
            if obj.attached_to == "ee":
                objects[i] = dataclasses.replace(obj, attached_to=None)

    return SceneState(
        task=state.task,
        objects=tuple(objects),
        ee=EndEffector(pose=(ex, ey, eth), gripper=new_g, tool=state.ee.tool),
        bounds=state.bounds,
        time=state.time + dt,
    )


# ---- overlap checking and resets ----

def overlapping_pairs(state: SceneState,
                      params: SimParams = DEFAULT_PARAMS) -> list[tuple[str, str]]:
    """Same-layer object pairs that overlap, plus EE overlaps with free
    objects. Painted markings (layer < 0) never count."""
    out = []
    objs = [o for o in state.objects if o.layer >= 0]
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            a, b = objs[i], objs[j]
            if a.layer != b.layer:
                continue
            if _objects_overlap(a, b):
                out.append((a.id, b.id))
    ex, ey, _ = state.ee.pose
    for o in objs:
        if o.attached_to is not None:
            continue
        if o.shape[0] == "rect":
            hit = geo.disc_rect_overlap(ex, ey, params.ee_radius, o.rect())
        else:
            depth, _ = geo.disc_disc_penetration(ex, ey, params.ee_radius,
                                                 o.pose[0], o.pose[1], o.radius())
            hit = depth > 1e-12
        if hit:
            out.append(("ee", o.id))
    return out


def _objects_overlap(a: SceneObject, b: SceneObject) -> bool:
    if a.shape[0] == "rect" and b.shape[0] == "rect":
        return geo.rects_overlap(a.rect(), b.rect())
    if a.shape[0] == "disc" and b.shape[0] == "disc":
        depth, _ = geo.disc_disc_penetration(a.pose[0], a.pose[1], a.radius(),
                                             b.pose[0], b.pose[1], b.radius())
        return depth > 1e-12
    disc, rect = (a, b) if a.shape[0] == "disc" else (b, a)
    return geo.disc_rect_overlap(disc.pose[0], disc.pose[1], disc.radius(),
                                 rect.rect())


@dataclass(frozen=True)
class _Placement:
    """Uniform pose ranges for one object in a task reset."""

    x: tuple[float, float]
    y: tuple[float, float]
    theta: tuple[float, float]


def _sample_pose(rng: np.random.Generator, p: _Placement) -> tuple[float, float, float]:
    return (float(rng.uniform(*p.x)), float(rng.uniform(*p.y)),
            float(rng.uniform(*p.theta)))


def _place_objects(rng, specs, ee_pose, params, bounds):
    # specs: list of (SceneObject template, _Placement, check_overlap)
    placed: list[SceneObject] = []
    for template, placement, check in specs:
        ok = False
        for _ in range(params.placement_attempts):
            pose = _sample_pose(rng, placement)
            candidate = dataclasses.replace(template, pose=pose)
            if not check:
                ok = True
                break
            clash = any(
                o.layer == candidate.layer and _objects_overlap(o, candidate)
                for o in placed if o.layer >= 0 and candidate.layer >= 0)
            if not clash and candidate.layer >= 0:
                if candidate.shape[0] == "rect":
                    clash = geo.disc_rect_overlap(
                        ee_pose[0], ee_pose[1], params.ee_radius,
                        candidate.rect())
                else:
                    d, _ = geo.disc_disc_penetration(
                        ee_pose[0], ee_pose[1], params.ee_radius,
                        pose[0], pose[1], candidate.radius())
                    clash = d > 1e-12
            if not clash:
                ok = True
                break
        if not ok:
            raise PlacementFailure(
                f"could not place {template.id!r} without overlap after"
                f" {params.placement_attempts} attempts")
        placed.append(dataclasses.replace(template, pose=pose))
    return placed


def reset(task: str, seed: int, params: SimParams = DEFAULT_PARAMS) -> SceneState:
    """Fresh randomized scene for a task. Deterministic in the seed."""
    task_spec(task)  # validate task name
    rng = np.random.default_rng(seed)
    bounds = params.bounds

    if task == "cap_removal":
        ee = EndEffector(pose=(0.05, 0.05, 0.0))
        crate_t = SceneObject(id="crate", kind="crate", pose=(0, 0, 0),
                              shape=("rect", 0.20, 0.16))
        specs = [(crate_t,
                  _Placement((0.30, 0.52), (0.24, 0.38), (-0.4, 0.4)), True)]
        placed = _place_objects(rng, specs, ee.pose, params, bounds)
        crate = placed[0]
        jx = float(rng.uniform(-0.01, 0.01))
        jy = float(rng.uniform(-0.01, 0.01))
        jt = float(rng.uniform(-0.1, 0.1))
        lid = SceneObject(
            id="lid", kind="lid",
            pose=(crate.pose[0] + jx, crate.pose[1] + jy,
                  geo.wrap_angle(crate.pose[2] + jt)),
            shape=("rect", 0.12, 0.10), layer=1)
        objects = (crate, lid)

    elif task == "crate_pushing":
        ee = EndEffector(pose=(0.06, 0.56, 0.0))
        goal = SceneObject(id="goal", kind="goal_marking",
                           pose=(0.56, 0.30, 0.0), shape=("rect", 0.16, 0.16),
                           fixed=True, layer=-1)
        crate_t = SceneObject(id="crate", kind="crate", pose=(0, 0, 0),
                              shape=("rect", 0.16, 0.16))
        specs = [(crate_t,
                  _Placement((0.18, 0.38), (0.20, 0.40), (-0.35, 0.35)), True)]
        placed = _place_objects(rng, specs, ee.pose, params, bounds)
        objects = (placed[0], goal)

    elif task == "pick_place":
        ee = EndEffector(pose=(0.05, 0.05, 0.0))
        crate_t = SceneObject(id="crate", kind="crate", pose=(0, 0, 0),
                              shape=("rect", 0.24, 0.20), fixed=True)
        sugar_t = SceneObject(id="sugar_box", kind="sugar_box", pose=(0, 0, 0),
                              shape=("rect", 0.09, 0.06))
        specs = [
            (crate_t, _Placement((0.52, 0.62), (0.24, 0.36), (-0.3, 0.3)), True),
            (sugar_t, _Placement((0.16, 0.36), (0.16, 0.44), (-math.pi, math.pi)),
             True),
        ]
        placed = _place_objects(rng, specs, ee.pose, params, bounds)
        objects = tuple(placed)

    else:  # pragma: no cover - task_spec above already rejects
        raise UnknownTask(task)

    return SceneState(task=task, objects=tuple(objects), ee=ee, bounds=bounds)


# ---- success evaluation ----

def _fully_inside(rect: tuple[float, float, float, float, float],
                  bounds: tuple[float, float, float, float],
                  eps: float = 1e-9) -> bool:
    corners = geo.rect_corners(*rect)
    return bool(
        np.all(corners[:, 0] >= bounds[0] - eps)
        and np.all(corners[:, 0] <= bounds[2] + eps)
        and np.all(corners[:, 1] >= bounds[1] - eps)
        and np.all(corners[:, 1] <= bounds[3] + eps))


def evaluate_success(task: str, state: SceneState) -> bool:
    """Task completion predicate over a final state."""
    task_spec(task)
    if task == "cap_removal":
        lid, crate = state.get("lid"), state.get("crate")
        if lid is None or crate is None:
            raise UnknownTask("cap_removal scene needs 'lid' and 'crate'")
        lid_length = max(lid.shape[1], lid.shape[2])
        dist = math.hypot(lid.pose[0] - crate.pose[0],
                          lid.pose[1] - crate.pose[1])
        return dist > lid_length and _fully_inside(crate.rect(), state.bounds)
    if task == "crate_pushing":
        crate, goal = state.get("crate"), state.get("goal")
        if crate is None or goal is None:
            raise UnknownTask("crate_pushing scene needs 'crate' and 'goal'")
        return geo.iou(crate.rect(), goal.rect()) > 0.8
    if task == "pick_place":
        sugar, crate = state.get("sugar_box"), state.get("crate")
        if sugar is None or crate is None:
            raise UnknownTask("pick_place scene needs 'sugar_box' and 'crate'")
        return geo.point_in_rect(sugar.pose[0], sugar.pose[1],
                                 crate.pose[0], crate.pose[1],
                                 crate.shape[1], crate.shape[2],
                                 crate.pose[2], strict=True)
    raise UnknownTask(task)


def final_iou(state: SceneState) -> float:
    crate, goal = state.get("crate"), state.get("goal")
    if crate is None or goal is None:
        raise UnknownTask("scene has no crate/goal pair")
    return geo.iou(crate.rect(), goal.rect())


# ---- serialization ----

def scene_to_document(state: SceneState) -> dict:
    return {
        "format": "skilldesk-scene",
        "schema_version": SCENE_SCHEMA_VERSION,
        "task": state.task,
        "time": state.time,
        "bounds": list(state.bounds),
        "ee": {"pose": list(state.ee.pose), "gripper": state.ee.gripper,
               "tool": state.ee.tool},
        "objects": [
            {"id": o.id, "kind": o.kind, "pose": list(o.pose),
             "shape": list(o.shape), "attached_to": o.attached_to,
             "fixed": o.fixed, "layer": o.layer, "extras": o.extras}
            for o in state.objects
        ],
    }


def scene_from_document(doc: dict) -> SceneState:
    from ..errors import FormatError
    if doc.get("format") != "skilldesk-scene":
        raise FormatError(f"not a scene document (format={doc.get('format')!r})")
    if doc.get("schema_version") != SCENE_SCHEMA_VERSION:
        raise FormatError(
            f"unsupported scene schema_version {doc.get('schema_version')!r}")
    objects = tuple(
        SceneObject(id=o["id"], kind=o["kind"], pose=tuple(o["pose"]),
                    shape=tuple(o["shape"]), attached_to=o.get("attached_to"),
                    fixed=o.get("fixed", False), layer=o.get("layer", 0),
                    extras=dict(o.get("extras", {})))
        for o in doc["objects"])
    ee = EndEffector(pose=tuple(doc["ee"]["pose"]),
                     gripper=doc["ee"]["gripper"], tool=doc["ee"]["tool"])
    return SceneState(task=doc["task"], objects=objects, ee=ee,
                      bounds=tuple(doc["bounds"]), time=doc["time"])


def scene_to_json(state: SceneState) -> str:
    return json.dumps(scene_to_document(state), sort_keys=True)


def scene_from_json(text: str) -> SceneState:
    return scene_from_document(json.loads(text))
