"""Model backends for skill matching and precondition checking.

Two call shapes: text completion for matching and vision completion
(prompt plus images) for precondition checks. Any object with the right
method works; MockBackend answers from keyword rules and machine-readable
scene-truth images so the whole stack runs offline and deterministically,
and ChatCompletionsBackend adapts any OpenAI-compatible HTTP endpoint.

The mock is also the benchmark noise source: it can inject wrong answers
at a configured rate, and every injected error is constructed to score
as incorrect downstream (wrong skill, flipped verdict, or an unparseable
reply), so measured accuracy tracks 1 - rate exactly over a benchmark.
"""

from __future__ import annotations

import base64
import json
import random
import re
from typing import Protocol, Sequence, runtime_checkable

import httpx

from .errors import BackendError, VocabularyMismatch
from .library import default_skills, split_precondition_sentences

SCENE_TRUTH_SCHEMA = "scene-truth-v1"


@runtime_checkable
class TextBackend(Protocol):
    name: str

    def complete_text(self, prompt: str) -> str: ...


@runtime_checkable
class VisionBackend(Protocol):
    name: str

    def complete_vision(self, prompt: str, images: Sequence[bytes]) -> str: ...


def scene_truth_image(state) -> bytes:
    """Render a scene into the mock backend's camera format.

    The "image" is a small JSON document carrying ground-truth skill
    feasibility. Non-food scenes carry an empty truth table, which the
    mock answers conservatively (NO).
    """
    from .sim.food import preconditions_truth
    try:
        truth = preconditions_truth(state)
    except VocabularyMismatch:
        truth = {}
    doc = {"schema": SCENE_TRUTH_SCHEMA, "truth": truth}
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def decode_truth_image(image: bytes) -> dict | None:
    try:
        doc = json.loads(image.decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        return None
    if not isinstance(doc, dict) or doc.get("schema") != SCENE_TRUTH_SCHEMA:
        return None
    truth = doc.get("truth")
    return truth if isinstance(truth, dict) else None


# Ordered: first matching keyword decides, so cover/lid words outrank
# "rice" in requests like "remove the lid from the rice".
KEYWORD_RULES: tuple[tuple[str, str], ...] = (
    ("lid", "REMOVE LID"),
    ("uncover", "REMOVE LID"),
    ("cover", "REMOVE LID"),
    ("rice", "SERVE RICE"),
    ("beer", "OPEN BEER"),
    ("bottle", "OPEN BEER"),
    ("drink", "OPEN BEER"),
    ("thirsty", "OPEN BEER"),
    ("refreshment", "OPEN BEER"),
    ("meat", "SERVE SAUSAGE"),
    ("sausage", "SERVE SAUSAGE"),
)


def keyword_skill(request: str) -> str | None:
    low = request.lower()
    for keyword, skill in KEYWORD_RULES:
        if keyword in low:
            return skill
    return None


_SKILL_LINE_RE = re.compile(r"^- ([A-Z0-9 ]+): ", re.MULTILINE)

# Fallback reply for injected matching errors when no wrong skill is
# available to name; mimics a model drifting into another language.
_GARBLED_MATCH = "无法确定合适的技能，请提供更多信息。"


def _section(prompt: str, start_marker: str, end_marker: str) -> str:
    start = prompt.find(start_marker)
    if start < 0:
        return ""
    start += len(start_marker)
    end = prompt.find(end_marker, start)
    return prompt[start:end] if end >= 0 else prompt[start:]


class MockBackend:
    """Deterministic offline stand-in for both backend roles.

    Matching answers come from keyword rules applied to the request text
    found in the prompt, constrained to the skills the prompt actually
    offered. Precondition answers come from the scene-truth image. With
    match_error_rate / precondition_error_rate above zero, a seeded RNG
    replaces that fraction of answers with ones that parse (or fail to
    parse) into the wrong outcome.
    """

    def __init__(self, match_error_rate: float = 0.0,
                 precondition_error_rate: float = 0.0, seed: int = 0,
                 name: str = "mock"):
        if not 0.0 <= match_error_rate <= 1.0:
            raise ValueError(f"match_error_rate {match_error_rate} not in [0, 1]")
        if not 0.0 <= precondition_error_rate <= 1.0:
            raise ValueError(
                f"precondition_error_rate {precondition_error_rate} not in [0, 1]")
        self.name = name
        self.match_error_rate = match_error_rate
        self.precondition_error_rate = precondition_error_rate
        self._rng = random.Random(seed)
        self.text_calls = 0
        self.vision_calls = 0
        self.injected_match_errors = 0
        self.injected_precondition_errors = 0
        # sentence text -> owning canonical skill, for precondition prompts
        self._sentence_owner: dict[str, str] = {}
        for skill in default_skills():
            for sentence in split_precondition_sentences(skill.preconditions):
                self._sentence_owner[" ".join(sentence.split())] = skill.name

    # -- matching --

    def complete_text(self, prompt: str) -> str:
        self.text_calls += 1
        offered = _SKILL_LINE_RE.findall(
            _section(prompt, "Your skills are:", "User request:"))
        offered = [name.strip() for name in offered]
        request = _section(prompt, "User request:",
                           "Structure your answer").strip()
        wanted = keyword_skill(request)
        inject = (self.match_error_rate > 0.0
                  and self._rng.random() < self.match_error_rate)

        if wanted is not None and wanted in offered:
            if inject:
                self.injected_match_errors += 1
                return ("None of the listed capabilities can satisfy this"
                        " request.\nNEW SKILL")
            return ("The request lines up with one of the listed"
                    f" capabilities.\n{wanted}")
        if inject:
            self.injected_match_errors += 1
            if offered:
                bogus = self._rng.choice(offered)
                return ("The request lines up with one of the listed"
                        f" capabilities.\n{bogus}")
            return _GARBLED_MATCH
        return ("None of the listed capabilities can satisfy this"
                " request.\nNEW SKILL")

    # -- precondition checking --

    def complete_vision(self, prompt: str, images: Sequence[bytes]) -> str:
        self.vision_calls += 1
        block = _section(prompt, "conditions are met in the image:",
                         "Answer format")
        sentences = [ln.strip() for ln in block.split("\n") if ln.strip()]
        truth: dict | None = None
        for image in images:
            truth = decode_truth_image(image)
            if truth is not None:
                break
        if truth is None:
            truth = {}

        lines = []
        verdicts = []
        for sentence in sentences:
            owner = self._sentence_owner.get(" ".join(sentence.split()))
            ok = bool(truth.get(owner, False)) if owner else False
            verdicts.append(ok)
            lines.append("Checked directly against the scene.")
            lines.append("YES" if ok else "NO")
        all_ok = bool(verdicts) and all(verdicts)

        inject = (self.precondition_error_rate > 0.0
                  and self._rng.random() < self.precondition_error_rate)
        if inject:
            self.injected_precondition_errors += 1
            if self._rng.random() < 0.5:
                all_ok = not all_ok
            else:
                lines.append("无法判断这些条件。")
                return "\n".join(lines)
        lines.append("YES" if all_ok else "NO")
        return "\n".join(lines)


class ChatCompletionsBackend:
    """Adapter for OpenAI-style /chat/completions HTTP endpoints.

    Serves both backend roles: text prompts go out as a plain user
    message, vision prompts as a content list with images inlined as
    base64 data URIs. Transport problems, non-200 statuses, and payloads
    missing the expected completion shape all raise BackendError; retry
    policy is the caller's concern.
    """

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, client: httpx.Client | None = None,
                 name: str | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.name = name or f"chat:{model}"
        self._client = client if client is not None else httpx.Client(
            timeout=timeout)

    def complete_text(self, prompt: str) -> str:
        return self._complete([{"role": "user", "content": prompt}])

    def complete_vision(self, prompt: str, images: Sequence[bytes]) -> str:
        content: list[dict] = [{"type": "text", "text": prompt}]
        for image in images:
            b64 = base64.b64encode(image).decode("ascii")
            content.append({
                "type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{b64}"},
            })
        return self._complete([{"role": "user", "content": content}])

    def _complete(self, messages: list[dict]) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions",
                json={"model": self.model, "messages": messages},
                headers=headers)
        except httpx.HTTPError as e:
            raise BackendError(f"transport failure: {e}") from e
        if response.status_code != 200:
            raise BackendError(
                f"completion endpoint returned HTTP {response.status_code}")
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as e:
            raise BackendError(f"malformed completion payload: {e}") from e
        if not isinstance(content, str):
            raise BackendError("completion content is not text")
        return content
