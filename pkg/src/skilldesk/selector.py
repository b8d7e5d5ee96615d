"""Natural-language skill selection and precondition gating.

Stage 1 sends the user's request plus the rendered skill list to a text
backend and reads back either one skill name or the literal decision
``NEW SKILL``. Stage 2, reached only on a match, sends the matched
skill's precondition sentences with current scene views to a vision
backend and reads back a final YES or NO. Backends format their answer
freely; only the decision line is contractual, so parsing is defensive
and every unusable response becomes a parse failure rather than an
exception.
"""

from __future__ import annotations

import dataclasses
import re
from typing import Optional, Sequence

from .errors import BackendError, EmptyRequest, MissingPreconditions
from .library import (Skill, SkillLibrary, render_for_matching,
                      split_precondition_sentences)

NEW_SKILL_TOKEN = "NEW SKILL"

MATCH_PROMPT_TEMPLATE = """You are an expert skill selector that has to match skills that are given to a user's request. If none of the skills given to you are fulfilling the users request, answer with "NEW SKILL".

Your skills are:
[[[SKILL NAMES AND DESCRIPTIONS]]]

User request:
[[[PROMPT]]]

Structure your answer in this format:
[reasoning without metioning the names of skills]
[Skill Name]"""

PRECONDITION_PROMPT_TEMPLATE = """Please check if the following conditions are met in the image:
[[[PRECONDITIONS]]]

Answer format for each precondition:
[Short Reasoning]
[YES/NO]

End the response with a definitive answer (YES/NO) on whether ALL conditions are met on a new line."""


def render_match_prompt(library: SkillLibrary, request: str) -> str:
    if not request or not request.strip():
        raise EmptyRequest("request is blank")
    return (MATCH_PROMPT_TEMPLATE
            .replace("[[[SKILL NAMES AND DESCRIPTIONS]]]",
                     render_for_matching(library))
            .replace("[[[PROMPT]]]", request.strip()))


def render_precondition_prompt(preconditions: Sequence[str] | str) -> str:
    if isinstance(preconditions, str):
        preconditions = split_precondition_sentences(preconditions)
    if not preconditions:
        raise MissingPreconditions("no precondition sentences to check")
    return PRECONDITION_PROMPT_TEMPLATE.replace(
        "[[[PRECONDITIONS]]]", "\n".join(preconditions))


# ---- parse results ----

@dataclasses.dataclass(frozen=True)
class Matched:
    skill: str


@dataclasses.dataclass(frozen=True)
class NewSkill:
    pass


@dataclasses.dataclass(frozen=True)
class Met:
    pass


@dataclasses.dataclass(frozen=True)
class NotMet:
    pass


@dataclasses.dataclass(frozen=True)
class ParseFailure:
    stage: str  # "match" or "precondition"
    reason: str


def _name_pattern(name: str) -> re.Pattern:
    words = [re.escape(w) for w in name.split()]
    return re.compile(r"\b" + r"\s+".join(words) + r"\b", re.IGNORECASE)


_NEW_SKILL_RE = re.compile(r"\bNEW\s+SKILL\b", re.IGNORECASE)


def _scan_for_names(text: str, names: Sequence[str]) -> tuple[list, bool]:
    found = [n for n in names if _name_pattern(n).search(text)]
    return found, bool(_NEW_SKILL_RE.search(text))


def _last_nonempty_line(text: str) -> Optional[str]:
    for line in reversed(text.split("\n")):
        if line.strip():
            return line
    return None


def parse_match_response(response: str, names: Sequence[str]):
    """Extract the stage-1 decision from a free-form backend answer.

    The decision line is the last non-empty line. Exactly one known
    skill name there wins, even if NEW SKILL also appears (models often
    restate the alternative). Two different names is ambiguous. When the
    last line decides nothing, the same rules apply to the full text as
    a fallback before giving up.
    """
    if not isinstance(response, str):
        return ParseFailure("match", "response is not text")
    last = _last_nonempty_line(response)
    if last is None:
        return ParseFailure("match", "empty response")

    for scope, text in (("line", last), ("response", response)):
        found, is_new = _scan_for_names(text, names)
        if len(found) == 1:
            return Matched(found[0])
        if len(found) > 1:
            return ParseFailure(
                "match", f"ambiguous: names {sorted(found)} in one {scope}")
        if is_new:
            return NewSkill()
    return ParseFailure("match", f"no decision in {last!r}")


def parse_precondition_response(response: str):
    """Read the final YES/NO verdict off the last non-empty line."""
    if not isinstance(response, str):
        return ParseFailure("precondition", "response is not text")
    last = _last_nonempty_line(response)
    if last is None:
        return ParseFailure("precondition", "empty response")
    tokens = {t.upper() for t in re.findall(r"[A-Za-z]+", last)}
    has_yes = "YES" in tokens
    has_no = "NO" in tokens
    if has_yes and not has_no:
        return Met()
    if has_no and not has_yes:
        return NotMet()
    if has_yes and has_no:
        return ParseFailure("precondition", f"conflicting verdict in {last!r}")
    return ParseFailure("precondition", f"no verdict in {last!r}")


# ---- selection results ----

@dataclasses.dataclass(frozen=True)
class ExecuteSkill:
    skill: Skill
    match_response: str = ""
    precondition_response: str = ""


@dataclasses.dataclass(frozen=True)
class TeachRequest:
    request: str
    match_response: str = ""


@dataclasses.dataclass(frozen=True)
class PreconditionBlocked:
    skill: Skill
    precondition_response: str = ""


@dataclasses.dataclass(frozen=True)
class SelectionError:
    stage: str
    reason: str


def outcome_to_document(outcome) -> dict:
    if isinstance(outcome, Matched):
        return {"kind": "matched", "skill": outcome.skill}
    if isinstance(outcome, NewSkill):
        return {"kind": "new_skill"}
    if isinstance(outcome, Met):
        return {"kind": "met"}
    if isinstance(outcome, NotMet):
        return {"kind": "not_met"}
    if isinstance(outcome, ParseFailure):
        return {"kind": "parse_failure", "stage": outcome.stage,
                "reason": outcome.reason}
    if isinstance(outcome, ExecuteSkill):
        return {"kind": "execute", "skill": outcome.skill.name}
    if isinstance(outcome, TeachRequest):
        return {"kind": "teach_request", "request": outcome.request}
    if isinstance(outcome, PreconditionBlocked):
        return {"kind": "blocked", "skill": outcome.skill.name}
    if isinstance(outcome, SelectionError):
        return {"kind": "error", "stage": outcome.stage,
                "reason": outcome.reason}
    raise TypeError(f"not a selector outcome: {outcome!r}")


def _call_with_retry(fn, stage: str):
    # transport hiccups get one retry; malformed answers never do
    try:
        return fn(), None
    except BackendError as first:
        try:
            return fn(), None
        except BackendError as second:
            return None, SelectionError(stage, f"backend failed twice: {second}")


def select(request: str, library: SkillLibrary, text_backend,
           vision_backend, scene_views: Sequence[bytes],
           transcript=None):
    """Run both selection stages for one user request.

    Returns ExecuteSkill, TeachRequest, PreconditionBlocked, or
    SelectionError. The vision backend is consulted exactly once per
    matched request and never otherwise.
    """
    prompt = render_match_prompt(library, request)
    response, failure = _call_with_retry(
        lambda: text_backend.complete_text(prompt), "match")
    if failure is not None:
        if transcript is not None:
            transcript.record("match", backend=_backend_name(text_backend),
                              prompt=prompt, response=None,
                              outcome=outcome_to_document(failure))
        return failure

    decision = parse_match_response(response, library.names())
    if transcript is not None:
        transcript.record("match", backend=_backend_name(text_backend),
                          prompt=prompt, response=response,
                          outcome=outcome_to_document(decision))
    if isinstance(decision, ParseFailure):
        return SelectionError(decision.stage, decision.reason)
    if isinstance(decision, NewSkill):
        return TeachRequest(request=request, match_response=response)

    skill = library.get(decision.skill)
    if skill is None:
        return SelectionError("match", f"matched unknown skill {decision.skill!r}")
    sentences = split_precondition_sentences(skill.preconditions)
    if not sentences:
        raise MissingPreconditions(
            f"skill {skill.name!r} has no precondition sentences")
    v_prompt = render_precondition_prompt(sentences)
    v_response, failure = _call_with_retry(
        lambda: vision_backend.complete_vision(v_prompt, list(scene_views)),
        "precondition")
    if failure is not None:
        if transcript is not None:
            transcript.record("precondition",
                              backend=_backend_name(vision_backend),
                              prompt=v_prompt, response=None,
                              outcome=outcome_to_document(failure))
        return failure

    verdict = parse_precondition_response(v_response)
    if transcript is not None:
        transcript.record("precondition",
                          backend=_backend_name(vision_backend),
                          prompt=v_prompt, response=v_response,
                          outcome=outcome_to_document(verdict))
    if isinstance(verdict, ParseFailure):
        return SelectionError(verdict.stage, verdict.reason)
    if isinstance(verdict, Met):
        return ExecuteSkill(skill=skill, match_response=response,
                            precondition_response=v_response)
    return PreconditionBlocked(skill=skill, precondition_response=v_response)


def _backend_name(backend) -> str:
    return getattr(backend, "name", type(backend).__name__)
