"""Skill library: the catalog of named skills the robot can be asked to run.

A skill couples a human-readable description (used for language matching)
with free-text preconditions (used for visual feasibility checks), a tool
requirement, and a training status. The library is an ordered, versioned
collection with value semantics: mutating operations return a new library
and bump the version, so concurrent readers always see a consistent
snapshot.
"""
from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateName, FormatError, InvalidSkill

SCHEMA_VERSION = 1

TOOLS = ("none", "opener", "spoon", "gripper")
STATUSES = ("pending_demos", "training", "trained")

# Skill names are short uppercase tokens: words of A-Z/digits separated by
# single spaces, e.g. "SERVE RICE".
_NAME_RE = re.compile(r"^[A-Z0-9]+( [A-Z0-9]+)*$")


@dataclass(frozen=True)
class Skill:
    """One entry in the skill library.

    Attributes:
        name: Unique uppercase token, e.g. "OPEN BEER".
        description: One or two sentences of what the skill does; this is
            the only text (besides the name) shown to the matching model.
        preconditions: Free text describing what must hold in the scene
            before the skill may run; shown to the vision model verbatim.
        tool: Required end-effector tool, one of TOOLS.
        policy_id: Identifier of the stored policy that executes the skill;
            set once training finished.
        status: Lifecycle state, one of STATUSES.
        task: Optional simulator task binding used to pick the execution
            environment and time limit; None for skills executed by
            scripted programs.
    """

    name: str
    description: str
    preconditions: str
    tool: str = "none"
    policy_id: str | None = None
    status: str = "pending_demos"
    task: str | None = None

    def validate(self) -> None:
        if not self.name or not self.name.strip():
            raise InvalidSkill("skill name must be non-empty")
        if not _NAME_RE.match(self.name):
            raise InvalidSkill(
                f"skill name {self.name!r} must be an uppercase token"
                " (A-Z/0-9 words separated by single spaces)")
        if not self.description or not self.description.strip():
            raise InvalidSkill(f"skill {self.name!r}: description must be non-empty")
        if not self.preconditions or not self.preconditions.strip():
            raise InvalidSkill(f"skill {self.name!r}: preconditions must be non-empty")
        if self.tool not in TOOLS:
            raise InvalidSkill(
                f"skill {self.name!r}: tool {self.tool!r} not in {TOOLS}")
        if self.status not in STATUSES:
            raise InvalidSkill(
                f"skill {self.name!r}: status {self.status!r} not in {STATUSES}")
        if self.status == "trained" and not self.policy_id:
            raise InvalidSkill(
                f"skill {self.name!r}: status 'trained' requires a policy_id")


def normalize_name(name: str) -> str:
    """Collapse whitespace and uppercase; applied to names on insertion."""
    return " ".join(name.strip().upper().split())


@dataclass(frozen=True)
class SkillLibrary:
    """Ordered, versioned collection of skills with value semantics."""

    skills: tuple[Skill, ...] = ()
    version: int = 0

    def __len__(self) -> int:
        return len(self.skills)

    def __iter__(self):
        return iter(self.skills)

    def names(self) -> list[str]:
        return [s.name for s in self.skills]

    def get(self, name: str) -> Skill | None:
        wanted = normalize_name(name)
        for s in self.skills:
            if s.name == wanted:
                return s
        return None

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None


def add_skill(library: SkillLibrary, skill: Skill) -> SkillLibrary:
    """Return a new library with `skill` appended.

    The skill name is normalized to uppercase before insertion. Raises
    DuplicateName if a skill with the same normalized name exists and
    InvalidSkill if any field fails validation.
    """
    skill = dataclasses.replace(skill, name=normalize_name(skill.name))
    skill.validate()
    if skill.name in library:
        raise DuplicateName(f"skill {skill.name!r} already in library")
    return SkillLibrary(skills=library.skills + (skill,),
                        version=library.version + 1)


def replace_skill(library: SkillLibrary, skill: Skill) -> SkillLibrary:
    """Return a new library with the same-named entry replaced in place."""
    skill = dataclasses.replace(skill, name=normalize_name(skill.name))
    skill.validate()
    if skill.name not in library:
        raise InvalidSkill(f"skill {skill.name!r} not in library")
    updated = tuple(skill if s.name == skill.name else s for s in library.skills)
    return SkillLibrary(skills=updated, version=library.version + 1)


def remove_skill(library: SkillLibrary, name: str) -> SkillLibrary:
    wanted = normalize_name(name)
    if wanted not in library:
        raise InvalidSkill(f"skill {wanted!r} not in library")
    kept = tuple(s for s in library.skills if s.name != wanted)
    return SkillLibrary(skills=kept, version=library.version + 1)


def render_for_matching(library: SkillLibrary) -> str:
    """Render the library block substituted into the matching prompt.

    One line per skill, in library order, containing exactly the name and
    the description. Preconditions are deliberately excluded: feasibility
    is checked in a separate stage, and leaking it here biases matching.
    Output is byte-deterministic for a given library value.
    """
    return "\n".join(f"- {s.name}: {s.description}" for s in library.skills)


def split_precondition_sentences(text: str) -> list[str]:
    """Split free-text preconditions on sentence boundaries, for display."""
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p for p in parts if p]


# ---- persistence ----
#
# One self-describing JSON document per library. Indented and key-sorted so
# files diff cleanly under version control and can be edited by hand.

def to_document(library: SkillLibrary) -> str:
    doc = {
        "format": "skilldesk-library",
        "schema_version": SCHEMA_VERSION,
        "version": library.version,
        "skills": [dataclasses.asdict(s) for s in library.skills],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_library(library: SkillLibrary, path: str | Path) -> None:
    Path(path).write_text(to_document(library), encoding="utf-8")


def from_document(text: str) -> SkillLibrary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"library document is not valid JSON: {e.msg}",
                          line=e.lineno, column=e.colno) from e
    if not isinstance(doc, dict):
        raise FormatError("library document must be a JSON object")
    if doc.get("format") != "skilldesk-library":
        raise FormatError(
            f"not a skill library document (format={doc.get('format')!r})")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(
            f"unsupported schema_version {doc.get('schema_version')!r},"
            f" expected {SCHEMA_VERSION}")
    raw_skills = doc.get("skills")
    if not isinstance(raw_skills, list):
        raise FormatError("'skills' must be a list")
    lib = SkillLibrary()
    known = {f.name for f in dataclasses.fields(Skill)}
    for i, raw in enumerate(raw_skills):
        if not isinstance(raw, dict):
            raise FormatError("skill entry must be an object", record_index=i)
        unknown = set(raw) - known
        if unknown:
            raise FormatError(
                f"skill entry has unknown fields {sorted(unknown)}",
                record_index=i)
        try:
            skill = Skill(**raw)
            lib = add_skill(lib, skill)
        except (InvalidSkill, DuplicateName, TypeError) as e:
            raise FormatError(f"invalid skill entry: {e}", record_index=i) from e
    version = doc.get("version")
    if not isinstance(version, int) or version < 0:
        raise FormatError(f"'version' must be a non-negative integer, got {version!r}")
    return SkillLibrary(skills=lib.skills, version=version)


def load_library(path: str | Path) -> SkillLibrary:
    return from_document(Path(path).read_text(encoding="utf-8"))


# ---- canonical food-serving skill set ----

def default_skills() -> list[Skill]:
    """The four food-serving skills used across benchmarks and examples."""
    return [
        Skill(
            name="SERVE RICE",
            description="This skill serves rice from a white bowl into a red bowl",
            preconditions=("The white bowl needs to contain rice. A red bowl"
                           " needs to visible in the workspace."),
            tool="spoon",
        ),
        Skill(
            name="OPEN BEER",
            description=("This action opens the beer bottle by removing the"
                         " metal cap"),
            preconditions="The bottle needs to be closed with a metal cap",
            tool="opener",
        ),
        Skill(
            name="SERVE SAUSAGE",
            description=("This skill picks up one or more sausages from a green"
                         " plate and puts them into a red bowl"),
            preconditions=("A green plate with sausages on them needs to be"
                           " visible in the workspace. A red bowl needs to be"
                           " visible in the workspace which could contain"
                           " something already."),
            tool="gripper",
        ),
        Skill(
            name="REMOVE LID",
            description=("This skill removes the glass pan cover from the white"
                         " bowl of rice."),
            preconditions=("A glass pan cover has to be present and not on the"
                           " table."),
            tool="none",
        ),
    ]


def default_library() -> SkillLibrary:
    lib = SkillLibrary()
    for skill in default_skills():
        lib = add_skill(lib, skill)
    return lib
