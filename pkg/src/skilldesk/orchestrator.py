"""Session orchestration: one robot, one scene, one operator.

Ties the pieces together behind a small imperative API: natural-language
prompts run the two-stage selector and then execute the chosen skill in
the simulator; unmatched requests come back as teach requests; teaching
records demonstrations frame by frame on a 10 Hz logical clock; training
runs in a background thread and flips the skill live when it finishes.

The system is exclusive: prompting and teaching each claim the mode and
anything arriving while a mode is held gets BusyError. Training is not a
mode; it is tracked per skill in a job registry so the robot stays
usable while a policy trains.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import os
import threading
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .backends import MockBackend, scene_truth_image
from .errors import (BusyError, InvalidSkill, NoDemonstrations,
                     SceneMismatch, SessionMismatch)
from .library import (Skill, SkillLibrary, add_skill, default_skills,
                      replace_skill)
from .policy import load_policy, save_policy, train_policy, PolicyConfig
from .policy.executor import run_receding_horizon
from .recorder import (RecordingSession, episode_arrays, load_dataset,
                       save_episode, skill_slug)
from .selector import (ExecuteSkill, PreconditionBlocked, SelectionError,
                       TeachRequest, select)
from .sim.food import amend_scene, make_food_scene, run_food_program
from .sim.geometry import wrap_angle
from .sim.world import (Action, DEFAULT_PARAMS, evaluate_success,
                        observation_vector, reset, scene_to_document, step,
                        task_spec)
from .transcripts import Transcript

CONTROL_DT = 0.1

PROGRAM_POLICY_PREFIX = "program:"


def runtime_library() -> SkillLibrary:
    """Starting library for a live session.

    The three tool-using food skills arrive already runnable, backed by
    their scripted programs; lid removal starts untrained so the teach
    loop has a real gap to fill.
    """
    lib = SkillLibrary()
    for skill in default_skills():
        if skill.name != "REMOVE LID":
            skill = dataclasses.replace(
                skill, status="trained",
                policy_id=f"{PROGRAM_POLICY_PREFIX}{skill_slug(skill.name)}")
        lib = add_skill(lib, skill)
    return lib


@dataclass(frozen=True)
class PromptResult:
    kind: str  # executed | teach_requested | blocked | error
    request: str
    skill: str | None = None
    stage: str | None = None
    reason: str | None = None
    session_id: str | None = None
    ticks: int | None = None
    success: bool | None = None

    def to_document(self) -> dict:
        doc = {k: v for k, v in dataclasses.asdict(self).items()
               if v is not None}
        doc["kind"] = self.kind
        return doc


def drag_path(start_pose, waypoints, step_size: float = 0.02):
    """Straight-line teleop drag through (x, y, gripper) waypoints.

    Yields (x, y, theta, gripper) samples no farther apart than
    step_size, which keeps the commanded velocity inside the plant's
    speed limit at the nominal frame rate.
    """
    x, y = float(start_pose[0]), float(start_pose[1])
    theta = float(start_pose[2]) if len(start_pose) > 2 else 0.0
    for wx, wy, grip in waypoints:
        dist = math.hypot(wx - x, wy - y)
        steps = max(1, math.ceil(dist / step_size))
        for i in range(1, steps + 1):
            f = i / steps
            yield (x + f * (wx - x), y + f * (wy - y), theta, float(grip))
        x, y = float(wx), float(wy)


class Orchestrator:
    def __init__(self, *, library: SkillLibrary | None = None,
                 scene=None, text_backend=None, vision_backend=None,
                 data_root: str = "skilldesk-data",
                 views: tuple[str, ...] = ("right",),
                 control_dt: float = CONTROL_DT,
                 train_epochs: int = 600,
                 transcript: Transcript | None = None,
                 clock=None, params=DEFAULT_PARAMS,
                 exec_seed: int = 0):
        backend = None
        if text_backend is None or vision_backend is None:
            backend = MockBackend()
        self.text_backend = text_backend if text_backend is not None else backend
        self.vision_backend = (vision_backend if vision_backend is not None
                               else backend)
        self.library = library if library is not None else runtime_library()
        self.scene = scene if scene is not None else make_food_scene(seed=0)
        self.views = tuple(views)
        self.control_dt = control_dt
        self.train_epochs = train_epochs
        self.params = params
        self.exec_seed = exec_seed
        self.data_root = data_root
        self.demo_root = os.path.join(data_root, "demos")
        self.policy_root = os.path.join(data_root, "policies")
        self.transcript = transcript if transcript is not None else Transcript()
        self._clock = clock
        self.mode = "idle"
        self.tool = "none"
        self._mode_lock = threading.Lock()
        self._lib_lock = threading.Lock()
        self._seq = itertools.count(1)
        self._teach: dict[str, dict] = {}
        self.sessions: dict[str, list] = {}
        self.jobs: dict[str, dict] = {}

    # -- mode handling --

    @contextmanager
    def _claim(self, mode: str):
        with self._mode_lock:
            if self.mode != "idle":
                raise BusyError(self.mode)
            self.mode = mode
        try:
            yield
        finally:
            with self._mode_lock:
                self.mode = "idle"

    def _require_idle(self):
        if self.mode != "idle":
            raise BusyError(self.mode)

    # -- library --

    def get_skill(self, name: str) -> Skill:
        skill = self.library.get(name)
        if skill is None:
            raise InvalidSkill(f"skill {name!r} not in library")
        return skill

    def create_skill(self, skill: Skill) -> Skill:
        with self._lib_lock:
            self.library = add_skill(self.library, skill)
            created = self.library.skills[-1]
        self.transcript.record("skill_added", skill=created.name)
        return created

    def _update_skill(self, name: str, **changes):
        with self._lib_lock:
            skill = self.get_skill(name)
            self.library = replace_skill(self.library,
                                         dataclasses.replace(skill, **changes))

    # -- prompting --

    def _render_views(self) -> list[bytes]:
        return [scene_truth_image(self.scene) for _ in self.views]

    def handle_prompt(self, request: str) -> PromptResult:
        with self._claim("executing"):
            outcome = select(request, self.library, self.text_backend,
                             self.vision_backend, self._render_views(),
                             transcript=self.transcript)
            result = self._resolve(request, outcome)
        self.transcript.record("prompt", request=request,
                               outcome=result.kind, skill=result.skill)
        return result

    def _resolve(self, request: str, outcome) -> PromptResult:
        if isinstance(outcome, SelectionError):
            return PromptResult(kind="error", request=request,
                                stage=outcome.stage, reason=outcome.reason)
        if isinstance(outcome, TeachRequest):
            return PromptResult(kind="teach_requested", request=request,
                                reason="no skill matches this request")
        if isinstance(outcome, PreconditionBlocked):
            return PromptResult(kind="blocked", request=request,
                                skill=outcome.skill.name,
                                reason=outcome.precondition_response)
        assert isinstance(outcome, ExecuteSkill)
        skill = outcome.skill
        if skill.status == "pending_demos":
            return PromptResult(
                kind="teach_requested", request=request, skill=skill.name,
                reason="matched skill has no demonstrations yet")
        if skill.status == "training":
            return PromptResult(kind="error", request=request,
                                skill=skill.name, stage="execution",
                                reason="skill is still training")
        if skill.tool != self.tool:
            self.transcript.record("equip", tool=skill.tool,
                                   skill=skill.name)
            self.tool = skill.tool
        return self._execute(skill, request)

    def _execute(self, skill: Skill, request: str) -> PromptResult:
        session_id = f"run-{next(self._seq):04d}"
        frames: list[dict] = []
        if (skill.task is None
                or (skill.policy_id or "").startswith(PROGRAM_POLICY_PREFIX)):
            trace, final = run_food_program(skill.name, self.scene,
                                            dt=self.control_dt,
                                            params=self.params)
            for i, (action, state) in enumerate(trace):
                frames.append(self._frame_doc(i, action.as_array(), state))
            success = True
        else:
            if self.scene.task != skill.task:
                raise SceneMismatch(
                    f"skill {skill.name!r} runs task {skill.task!r} but the"
                    f" scene is {self.scene.task!r}")
            policy = load_policy(self.policy_root, skill.policy_id)
            spec = task_spec(skill.task)

            def step_fn(state, action_row):
                new = step(state, Action.from_array(action_row),
                           self.control_dt, self.params)
                frames.append(self._frame_doc(len(frames), action_row, new))
                return new

            obs_fn = lambda state: observation_vector(state, spec)
            result = run_receding_horizon(
                policy, self.scene, step_fn, obs_fn,
                max_ticks=int(round(spec.time_limit / self.control_dt)),
                success_fn=lambda s: evaluate_success(skill.task, s),
                rng=np.random.default_rng(self.exec_seed + len(self.sessions)))
            final = result.final_state
            success = result.success
        self.scene = final
        self.sessions[session_id] = frames
        self.transcript.record("execute", skill=skill.name,
                               session=session_id, ticks=len(frames),
                               success=bool(success))
        return PromptResult(kind="executed", request=request,
                            skill=skill.name, session_id=session_id,
                            ticks=len(frames), success=bool(success))

    def _frame_doc(self, index: int, action_row, state) -> dict:
        return {
            "t": round((index + 1) * self.control_dt, 6),
            "ee": [round(float(v), 9) for v in state.ee.pose],
            "gripper": float(state.ee.gripper),
            "action": [float(v) for v in action_row],
        }

    def session_frames(self, session_id: str) -> list[dict]:
        if session_id not in self.sessions:
            raise SessionMismatch(f"unknown session {session_id!r}")
        return self.sessions[session_id]

    # -- teaching --

    def teach_start(self, skill_name: str, operator: str = "operator") -> str:
        skill = self.get_skill(skill_name)
        with self._mode_lock:
            if self.mode != "idle":
                raise BusyError(self.mode)
            self.mode = "teaching"
        session_id = f"teach-{next(self._seq):04d}"
        recorder = RecordingSession(
            skill=skill.name, operator=operator,
            dt_nominal=self.control_dt,
            now=self._clock_iso() if self._clock else None,
            episode_id=f"ep-{session_id}")
        self._teach[session_id] = {
            "recorder": recorder, "scene": self.scene, "skill": skill,
            "count": 0, "prev": None,
        }
        self.transcript.record("teach_start", skill=skill.name,
                               session=session_id)
        return session_id

    def _clock_iso(self):
        clock = self._clock
        return (lambda: f"t{clock():.3f}") if clock else None

    def _teach_entry(self, session_id: str) -> dict:
        entry = self._teach.get(session_id)
        if entry is None:
            raise SessionMismatch(f"no live teach session {session_id!r}")
        return entry

    def teach_frame(self, session_id: str, x: float, y: float,
                    theta: float = 0.0, gripper: float = 0.0) -> dict:
        entry = self._teach_entry(session_id)
        scene = entry["scene"]
        t = round(entry["count"] * self.control_dt, 9)
        prev = entry["prev"]
        if prev is None:
            action = Action(0.0, 0.0, 0.0, float(gripper))
        else:
            px, py, ptheta = prev
            action = Action(
                vx=(x - px) / self.control_dt,
                vy=(y - py) / self.control_dt,
                omega=wrap_angle(theta - ptheta) / self.control_dt,
                gripper=float(gripper))
        obs = self._teach_obs(scene)
        ex, ey, etheta = scene.ee.pose
        entry["recorder"].add(t, ex, ey, etheta, action.as_array(),
                              extras={"obs": obs})
        entry["scene"] = step(scene, action, self.control_dt, self.params)
        entry["prev"] = (float(x), float(y), float(theta))
        entry["count"] += 1
        return {"t": t, "frames": entry["count"],
                "ee": list(entry["scene"].ee.pose)}

    def _teach_obs(self, scene) -> list[float]:
        if scene.task == "food":
            ex, ey, etheta = scene.ee.pose
            return [float(ex), float(ey), float(etheta),
                    float(scene.ee.gripper)]
        return [float(v)
                for v in observation_vector(scene, task_spec(scene.task))]

    def teach_stop(self, session_id: str, success: bool = True) -> dict:
        entry = self._teach_entry(session_id)
        try:
            episode = entry["recorder"].finish(success=success)
            path = save_episode(self.demo_root, episode)
            self.scene = entry["scene"]
        finally:
            del self._teach[session_id]
            with self._mode_lock:
                self.mode = "idle"
        self.transcript.record("teach_stop", skill=episode.skill,
                               session=session_id, episode=episode.id,
                               frames=len(episode.frames),
                               success=bool(success))
        return {"episode": episode.id, "frames": len(episode.frames),
                "path": path, "skill": episode.skill}

    # -- training --

    def train_skill(self, name: str, epochs: int | None = None,
                    preload_program: bool = False,
                    wait: bool = False) -> dict:
        skill = self.get_skill(name)
        job = self.jobs.get(skill.name)
        if job is not None and job["state"] == "running":
            raise BusyError("training")
        episodes = load_dataset(self.demo_root, skill.name)
        if not episodes:
            raise NoDemonstrations(
                f"no successful demonstrations stored for {skill.name!r}")

        if preload_program:
            policy_id = f"{PROGRAM_POLICY_PREFIX}{skill_slug(skill.name)}"
            self._update_skill(skill.name, status="trained",
                               policy_id=policy_id)
            job = {"state": "done", "epoch": 0, "epochs": 0, "loss": None,
                   "policy_id": policy_id, "error": None,
                   "episodes": len(episodes)}
            self.jobs[skill.name] = job
            self.transcript.record("train", skill=skill.name,
                                   policy=policy_id, preloaded=True)
            return dict(job)

        n_epochs = epochs if epochs is not None else self.train_epochs
        obs, actions = episode_arrays(episodes[0])
        config = PolicyConfig(obs_dim=obs.shape[1],
                              action_dim=actions.shape[1], epochs=n_epochs)
        job = {"state": "running", "epoch": 0, "epochs": n_epochs,
               "loss": None, "policy_id": None, "error": None,
               "episodes": len(episodes)}
        self.jobs[skill.name] = job
        self._update_skill(skill.name, status="training")
        self.transcript.record("train", skill=skill.name, epochs=n_epochs,
                               episodes=len(episodes))

        def run():
            try:
                def progress(epoch, loss):
                    # report completed epochs, 1-based
                    job["epoch"] = epoch + 1
                    job["loss"] = float(loss)

                policy = train_policy(episodes, config, progress=progress)
                policy_id = save_policy(self.policy_root, policy)
                self._update_skill(skill.name, status="trained",
                                   policy_id=policy_id)
                job["policy_id"] = policy_id
                job["state"] = "done"
            except Exception as e:  # noqa: BLE001 - job must capture anything
                self._update_skill(skill.name, status="pending_demos")
                job["error"] = f"{type(e).__name__}: {e}"
                job["state"] = "failed"

        if wait:
            run()
        else:
            thread = threading.Thread(target=run, daemon=True,
                                      name=f"train-{skill_slug(skill.name)}")
            thread.start()
        return dict(job)

    def train_status(self, name: str) -> dict:
        skill = self.get_skill(name)
        job = self.jobs.get(skill.name)
        if job is None:
            return {"state": "none", "skill_status": skill.status}
        return {**job, "skill_status": skill.status}

    # -- scene management --

    def scene_document(self) -> dict:
        doc = scene_to_document(self.scene)
        doc["mode"] = self.mode
        doc["tool"] = self.tool
        return doc

    def scene_reset(self, seed: int = 0, task: str = "food",
                    options: dict | None = None):
        self._require_idle()
        if task == "food":
            self.scene = make_food_scene(seed=seed, **(options or {}),
                                         params=self.params)
        else:
            self.scene = reset(task, seed, self.params)
        self.tool = "none"
        self.transcript.record("scene_reset", task=task, seed=seed)
        return self.scene

    def scene_amend(self, **changes):
        self._require_idle()
        self.scene = amend_scene(self.scene, **changes)
        self.transcript.record("scene_amend", changes=dict(changes))
        return self.scene


# ---- scripted end-to-end walkthrough ----

def scenario_run(orchestrator: Orchestrator | None = None,
                 seed: int = 0) -> list[PromptResult]:
    """Six-beat session exercising every prompt outcome.

    Starts from a capped bottle, rice under a covered bowl, an empty
    green plate and a red bowl. The beats: a drink request executes; a
    lid request comes back as a teach request; the operator teaches lid
    removal (then puts the cover back and enables the skill) and the
    same request executes; a rice request executes; a meat request
    blocks on the empty plate; after the operator adds sausages it
    executes.
    """
    orch = orchestrator if orchestrator is not None else Orchestrator()
    orch.scene_reset(seed=seed, options={
        "capped": True, "rice": True, "pan_cover": "on_bowl", "sausages": 0})
    results = []

    results.append(orch.handle_prompt("I would like something to drink please."))
    results.append(orch.handle_prompt("Please remove the lid from the rice."))

    # teach lid removal by teleop drag: hover over the cover, close,
    # carry it to the set-down spot, release
    session = orch.teach_start("REMOVE LID")
    cover = orch._teach[session]["scene"].get("pan_cover")
    waypoints = [
        (cover.pose[0], cover.pose[1], 0.0),
        (cover.pose[0], cover.pose[1], 1.0),
        (0.16, 0.14, 1.0),
        (0.16, 0.14, 0.0),
    ]
    for x, y, theta, grip in drag_path(orch.scene.ee.pose, waypoints):
        orch.teach_frame(session, x, y, theta, grip)
    orch.teach_stop(session, success=True)
    # the demonstration left the cover on the table; the operator puts
    # it back before asking the robot to repeat the job
    orch.scene_amend(pan_cover="on_bowl")
    orch.train_skill("REMOVE LID", preload_program=True)
    results.append(orch.handle_prompt("Please remove the lid from the rice."))

    results.append(orch.handle_prompt("Serve the rice please."))
    results.append(orch.handle_prompt("Give me some meat!"))
    orch.scene_amend(sausages=3)
    results.append(orch.handle_prompt("Give me some meat!"))
    return results
