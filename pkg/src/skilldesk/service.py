"""HTTP face of the orchestrator (API v1).

Thin layer: pydantic models validate payload shape, domain errors map to
status codes, everything else is delegated to the Orchestrator. State
lives in the orchestrator instance bound at app construction, one robot
per process.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (BusyError, DuplicateName, EmptyEpisode, EmptyRequest,
                     InvalidSkill, NoDemonstrations, OutOfOrderFrame,
                     PolicyMissing, SceneMismatch, SessionMismatch,
                     SkilldeskError, TimingViolation, UnknownTask,
                     VocabularyMismatch)
from .library import Skill
from .orchestrator import Orchestrator, scenario_run

API_VERSION = "v1"

_STATUS_BY_ERROR = (
    (BusyError, 409),
    (DuplicateName, 409),
    (NoDemonstrations, 409),
    (SceneMismatch, 409),
    (PolicyMissing, 409),
    (VocabularyMismatch, 409),
    (SessionMismatch, 404),
    (EmptyEpisode, 422),
    (TimingViolation, 422),
    (OutOfOrderFrame, 422),
    (EmptyRequest, 422),
    (UnknownTask, 422),
    (InvalidSkill, 422),
)


class PromptIn(BaseModel):
    request: str = Field(min_length=1)


class SkillIn(BaseModel):
    name: str
    description: str
    preconditions: str
    tool: str = "none"
    task: str | None = None


class TeachStartIn(BaseModel):
    skill: str
    operator: str = "operator"


class TeachFrameIn(BaseModel):
    session_id: str
    x: float
    y: float
    theta: float = 0.0
    gripper: float = Field(default=0.0, ge=0.0, le=1.0)


class TeachStopIn(BaseModel):
    session_id: str
    success: bool = True


class TrainIn(BaseModel):
    epochs: int | None = Field(default=None, ge=1)
    preload_program: bool = False


class SceneResetIn(BaseModel):
    seed: int = 0
    task: str = "food"
    options: dict = Field(default_factory=dict)


class SceneAmendIn(BaseModel):
    capped: bool | None = None
    rice: bool | None = None
    sausages: int | None = Field(default=None, ge=0)
    pan_cover: str | None = None


def _skill_doc(skill: Skill) -> dict:
    return dataclasses.asdict(skill)


def create_app(orchestrator: Orchestrator | None = None) -> FastAPI:
    orch = orchestrator if orchestrator is not None else Orchestrator()
    app = FastAPI(title="skilldesk", version=API_VERSION)

    @app.exception_handler(SkilldeskError)
    def _domain_error(request, exc):
        for cls, code in _STATUS_BY_ERROR:
            if isinstance(exc, cls):
                return JSONResponse(
                    status_code=code,
                    content={"error": type(exc).__name__,
                             "detail": str(exc)})
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__,
                                     "detail": str(exc)})

    @app.get("/api/version")
    def version():
        return {"version": API_VERSION, "service": "skilldesk"}

    @app.post("/api/prompt")
    def prompt(body: PromptIn):
        return orch.handle_prompt(body.request).to_document()

    @app.get("/api/skills")
    def list_skills():
        return {"version": orch.library.version,
                "skills": [_skill_doc(s) for s in orch.library]}

    @app.post("/api/skills", status_code=201)
    def create_skill(body: SkillIn):
        skill = orch.create_skill(Skill(
            name=body.name, description=body.description,
            preconditions=body.preconditions, tool=body.tool,
            task=body.task))
        return _skill_doc(skill)

    @app.get("/api/skills/{name}")
    def get_skill(name: str):
        skill = orch.library.get(name)
        if skill is None:
            raise HTTPException(404, f"skill {name!r} not in library")
        return _skill_doc(skill)

    @app.post("/api/teach/start")
    def teach_start(body: TeachStartIn):
        if orch.library.get(body.skill) is None:
            raise HTTPException(404, f"skill {body.skill!r} not in library")
        session_id = orch.teach_start(body.skill, operator=body.operator)
        return {"session_id": session_id}

    @app.post("/api/teach/frame")
    def teach_frame(body: TeachFrameIn):
        return orch.teach_frame(body.session_id, body.x, body.y,
                                body.theta, body.gripper)

    @app.post("/api/teach/stop")
    def teach_stop(body: TeachStopIn):
        return orch.teach_stop(body.session_id, success=body.success)

    @app.post("/api/train/{name}")
    def train(name: str, body: TrainIn):
        if orch.library.get(name) is None:
            raise HTTPException(404, f"skill {name!r} not in library")
        return orch.train_skill(name, epochs=body.epochs,
                                preload_program=body.preload_program)

    @app.get("/api/train/{name}/status")
    def train_status(name: str):
        if orch.library.get(name) is None:
            raise HTTPException(404, f"skill {name!r} not in library")
        return orch.train_status(name)

    @app.get("/api/scene")
    def scene():
        return orch.scene_document()

    @app.post("/api/scene/reset")
    def scene_reset(body: SceneResetIn):
        orch.scene_reset(seed=body.seed, task=body.task,
                         options=body.options)
        return orch.scene_document()

    @app.post("/api/scene/amend")
    def scene_amend(body: SceneAmendIn):
        changes = {k: v for k, v in body.model_dump().items()
                   if v is not None}
        if not changes:
            raise HTTPException(422, "no amendments given")
        orch.scene_amend(**changes)
        return orch.scene_document()

    @app.get("/api/session/{session_id}/frames")
    def session_frames(session_id: str):
        return {"session_id": session_id,
                "frames": orch.session_frames(session_id)}

    @app.get("/api/transcript")
    def transcript(kind: str | None = None):
        entries = (orch.transcript.of_kind(kind) if kind
                   else orch.transcript.entries)
        return {"entries": entries}

    @app.post("/api/scenario")
    def run_scenario(seed: int = 0):
        results = scenario_run(orch, seed=seed)
        return {"outcomes": [r.to_document() for r in results]}

    app.state.orchestrator = orch
    return app
