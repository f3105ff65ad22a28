"""Prompt construction and generation backends.

One backend interface serves drafting, refinement, debugging, prior
summarization and novelty judging; the roles differ only in prompt and
response parsing. Backends are pluggable: a chat-completions style remote
client for real runs, and a pattern-matching mock driven by a playbook
document for hermetic, replayable runs.

Privacy contract: prompts carry only derived metadata (the constraint
descriptor, card digests, metric summaries, captured process output) and
never raw signal samples. The descriptor is built upstream from scalars
only; `max_numeric_run` exists so tests and audits can scan every emitted
prompt for numeric leakage.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .errors import (
    BackendUnreachableError,
    ContextInvalidError,
    GenerationEmptyError,
    TransportError,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "NW_LLM_API_KEY"
DEBUG_FEEDBACK_CHARS = 4000
ARCHIVE_RATIONALES_IN_JUDGE = 5
PROMPT_CHAR_BUDGET = 32000 * 4  # ~32k tokens at 4 chars/token

DEFAULT_MOCK_RESPONSE = "NO MATCHING PLAYBOOK ENTRY"

_CODE_BLOCK_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)
_NUMERIC_TOKEN_RE = re.compile(r"^[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?$")


class Role(str, Enum):
    DRAFT_ROOT = "DRAFT_ROOT"
    REFINE = "REFINE"
    DEBUG = "DEBUG"
    SUMMARIZE = "SUMMARIZE"
    NOVELTY_JUDGE = "NOVELTY_JUDGE"


CODE_ROLES = (Role.DRAFT_ROOT, Role.REFINE, Role.DEBUG)

TEMPERATURES = {
    Role.DRAFT_ROOT: 0.7,
    Role.REFINE: 0.7,
    Role.DEBUG: 0.7,
    Role.SUMMARIZE: 0.2,
    Role.NOVELTY_JUDGE: 0.0,
}


SCRIPT_CONTRACT = """\
## Script contract (follow exactly)
Produce ONE self-contained script, internally organized as three stages:
load (read recordings from the data directory into arrays), preprocess
(filtering / resampling / artifact handling), and model (fit and evaluate a
predictor). The script:
1. is invoked as: <interpreter> script.py --data-dir DIR --output-dir DIR
2. must exit with code 0 on success;
3. must write <output-dir>/metrics.json containing at least
   {"metric_name": <string>, "primary_metric": <number>};
   primary_metric must lie in [0, 1], or declare
   "normalization": {"min": <number>, "max": <number>} so the harness can
   map it into [0, 1]. Optional keys: "auxiliary" (object of named numbers,
   e.g. tunable hyperparameters), "wall_seconds" (number).
4. may only import modules from the approved list given below;
5. must not read or write outside --data-dir (read-only) and --output-dir.
Reply with the full script in a single fenced code block; put your
reasoning outside the block."""


@dataclass(frozen=True)
class TaskSpec:
    goal: str
    evaluation_criteria: str
    data_dir: Path
    extra_constraints: str | None = None

    def __post_init__(self):
        if not self.goal or not self.evaluation_criteria:
            raise ContextInvalidError("task goal and evaluation criteria are required")
        object.__setattr__(self, "data_dir", Path(self.data_dir))
        if not self.data_dir.exists():
            raise ContextInvalidError(f"data_dir does not exist: {self.data_dir}")

    @classmethod
    def from_dict(cls, raw: dict) -> "TaskSpec":
        return cls(
            goal=raw["goal"],
            evaluation_criteria=raw["evaluation_criteria"],
            data_dir=Path(raw["data_dir"]),
            extra_constraints=raw.get("extra_constraints"),
        )


@dataclass(frozen=True)
class PromptContext:
    role: Role
    task: TaskSpec
    constraints: str | None = None  # rendered descriptor
    priors: str | None = None  # rendered digest
    parent_script: str | None = None
    parent_feedback: str | None = None
    allow_list: tuple[str, ...] = ()
    archive_rationales: tuple[str, ...] = ()
    candidate_script: str | None = None  # judged script (NOVELTY_JUDGE)
    note: str | None = None  # extra instruction line (redrafts)
    unconditioned: bool = False  # ablation: omit constraints/priors

    def validate(self):
        if self.role is Role.DRAFT_ROOT and not self.unconditioned:
            if self.constraints is None or self.priors is None:
                raise ContextInvalidError(
                    "root drafts require constraints and priors (or the"
                    " unconditioned flag)"
                )
        if self.role in (Role.REFINE, Role.DEBUG) and not self.parent_script:
            raise ContextInvalidError(f"{self.role.value} requires parent_script")
        if self.role is Role.DEBUG and not self.parent_feedback:
            raise ContextInvalidError("DEBUG requires the captured error output")
        if self.role is Role.NOVELTY_JUDGE and self.candidate_script is None:
            raise ContextInvalidError("NOVELTY_JUDGE requires candidate_script")


@dataclass(frozen=True)
class GenerationResult:
    script: str
    rationale: str
    raw: str
    backend_id: str


_SYSTEM = {
    Role.DRAFT_ROOT: (
        "You are an expert EEG analysis engineer. Draft a complete, runnable"
        " analysis pipeline script for the task below, staying strictly"
        " within the stated data constraints and architectural priors."
    ),
    Role.REFINE: (
        "You are an expert EEG analysis engineer. Diagnose the parent"
        " pipeline below from its code and measured results, state what to"
        " change and why, then produce an improved full script."
    ),
    Role.DEBUG: (
        "You are an expert EEG analysis engineer. The parent script failed."
        " Find the fault from the captured output and produce a corrected"
        " full script."
    ),
    Role.SUMMARIZE: (
        "You condense model architecture descriptions. Reply with a terse"
        " technical summary (max 1200 characters), no preamble."
    ),
    Role.NOVELTY_JUDGE: (
        "You judge how novel a candidate script is against prior attempts."
        " Reply with a single decimal number between 0 and 1 and nothing"
        " else: 1 means entirely new approach, 0 means a duplicate."
    ),
}


def _task_block(task: TaskSpec) -> str:
    lines = [
        "## Task",
        task.goal,
        f"Evaluation: {task.evaluation_criteria}",
    ]
    if task.extra_constraints:
        lines.append(f"Additional constraints: {task.extra_constraints}")
    return "\n".join(lines)


def _allow_block(allow_list: tuple[str, ...]) -> str:
    mods = ", ".join(sorted(allow_list)) if allow_list else "(standard library only)"
    return f"Approved modules: {mods}"


def build_prompt(ctx: PromptContext) -> list[dict]:
    """Render the ordered message list for a context.

    Over-budget prompts are cut back tail-first from parent feedback, then
    from the prior digest; the script contract is never truncated.
    """
    ctx.validate()
    sections: list[str] = [_task_block(ctx.task)]
    feedback = ctx.parent_feedback
    if ctx.role is Role.DEBUG and feedback:
        feedback = feedback[-DEBUG_FEEDBACK_CHARS:]

    priors = ctx.priors
    if ctx.role is Role.DRAFT_ROOT:
        if ctx.note:
            sections.append(f"Note: {ctx.note}")
        if not ctx.unconditioned:
            sections.append("## Data constraints\n" + (ctx.constraints or ""))
            sections.append("## Architectural priors\n" + (priors or ""))
        sections.append(SCRIPT_CONTRACT)
        sections.append(_allow_block(ctx.allow_list))
    elif ctx.role is Role.REFINE:
        sections.append("## Parent script\n```\n" + ctx.parent_script + "\n```")
        sections.append("## Parent results\n" + (feedback or "(no feedback)"))
        if ctx.constraints:
            sections.append("## Data constraints\n" + ctx.constraints)
        if priors:
            sections.append("## Architectural priors\n" + priors)
        sections.append(SCRIPT_CONTRACT)
        sections.append(_allow_block(ctx.allow_list))
    elif ctx.role is Role.DEBUG:
        sections.append("## Failing script\n```\n" + ctx.parent_script + "\n```")
        sections.append("## Captured error output (tail)\n" + (feedback or ""))
        if ctx.constraints:
            sections.append("## Data constraints\n" + ctx.constraints)
        sections.append(SCRIPT_CONTRACT)
        sections.append(_allow_block(ctx.allow_list))
    elif ctx.role is Role.SUMMARIZE:
        sections.append("## Architecture description\n" + (ctx.parent_feedback or ""))
    elif ctx.role is Role.NOVELTY_JUDGE:
        sections.append("## Candidate script\n```\n" + (ctx.candidate_script or "") + "\n```")
        if ctx.archive_rationales:
            recent = ctx.archive_rationales[-ARCHIVE_RATIONALES_IN_JUDGE:]
            listing = "\n".join(f"- {r}" for r in recent)
            sections.append("## Prior approaches\n" + listing)
        sections.append(
            "Respond with a single decimal number between 0 and 1."
        )

    user = "\n\n".join(sections)
    overflow = len(user) + len(_SYSTEM[ctx.role]) - PROMPT_CHAR_BUDGET
    if overflow > 0 and feedback:
        keep = max(0, len(feedback) - overflow)
        shrunk = feedback[:keep]
        user = user.replace(feedback, shrunk, 1)
        overflow = len(user) + len(_SYSTEM[ctx.role]) - PROMPT_CHAR_BUDGET
        feedback = shrunk
    if overflow > 0 and priors and not ctx.unconditioned:
        keep = max(0, len(priors) - overflow)
        user = user.replace(priors, priors[:keep], 1)

    return [
        {"role": "system", "content": _SYSTEM[ctx.role]},
        {"role": "user", "content": user},
    ]


def extract_code_block(text: str) -> str | None:
    match = _CODE_BLOCK_RE.search(text)
    return match.group(1) if match else None


def strip_code_blocks(text: str) -> str:
    return _CODE_BLOCK_RE.sub("", text).strip()


def max_numeric_run(text: str) -> int:
    """Longest run of consecutive numeric literal tokens.

    Tokens are split on whitespace and common punctuation; used by the
    privacy audit to catch raw sample sequences in prompts.
    """
    tokens = re.split(r"[\s,;:=()\[\]{}\"']+", text)
    longest = current = 0
    for token in tokens:
        if token and _NUMERIC_TOKEN_RE.match(token):
            current += 1
            longest = max(longest, current)
        else:
            current = 0
    return longest


# --- backends ---------------------------------------------------------------


class CallLog:
    """One JSON file per backend call under a log directory."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._count = 0

    def record(self, role: Role, messages: list[dict], response: str, backend_id: str):
        with self._lock:
            seq = self._count
            self._count += 1
        payload = {
            "role": role.value,
            "backend_id": backend_id,
            "messages": messages,
            "response": response,
        }
        path = self.directory / f"{seq:04d}_{role.value.lower()}.json"
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")

    def prompts(self) -> list[str]:
        """All prompt texts logged so far (for audits)."""
        texts = []
        for path in sorted(self.directory.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            texts.append("\n".join(m["content"] for m in doc["messages"]))
        return texts


class MockBackend:
    """Deterministic playbook-driven backend for hermetic runs.

    The playbook is an ordered list of {role, pattern, response} records;
    the first record whose role matches and whose regex pattern searches
    true against the rendered prompt wins. No match returns a fixed
    digit-free default.
    """

    backend_id = "mock"

    def __init__(self, playbook: list[dict]):
        self.entries = []
        for i, raw in enumerate(playbook):
            if "response" not in raw:
                raise ValueError(f"playbook entry {i} missing response")
            self.entries.append(
                (
                    raw.get("role"),
                    re.compile(raw.get("pattern", ""), re.DOTALL),
                    raw["response"],
                )
            )

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "MockBackend":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, messages: list[dict], role: Role, temperature: float) -> str:
        text = "\n".join(m["content"] for m in messages)
        for entry_role, pattern, response in self.entries:
            if entry_role is not None and entry_role != role.value:
                continue
            if pattern.search(text):
                return response
        return DEFAULT_MOCK_RESPONSE


class RemoteBackend:
    """Chat-completions style HTTP backend.

    Credentials come from the NW_LLM_API_KEY environment variable; they are
    sent only in the Authorization header and never logged.
    """

    def __init__(self, endpoint: str, model: str, timeout: float = 120.0):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.backend_id = f"remote:{model}"

    def complete(self, messages: list[dict], role: Role, temperature: float) -> str:
        api_key = os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise BackendUnreachableError(f"{API_KEY_ENV} is not set")
        try:
            resp = requests.post(
                self.endpoint,
                headers={"Authorization": f"Bearer {api_key}"},
                json={
                    "model": self.model,
                    "messages": messages,
                    "temperature": temperature,
                },
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"retryable status {resp.status_code}")
        if resp.status_code != 200:
            raise BackendUnreachableError(
                f"backend returned {resp.status_code}: {resp.text[:500]}"
            )
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise BackendUnreachableError(f"malformed backend response: {exc}") from exc


RETRY_DELAYS = (1.0, 2.0, 4.0)


def generate(
    ctx: PromptContext,
    backend,
    call_log: CallLog | None = None,
    sleep=time.sleep,
) -> GenerationResult:
    """Build the prompt, call the backend (retrying transport failures),
    and extract the first fenced code block for code-producing roles."""
    messages = build_prompt(ctx)
    temperature = TEMPERATURES[ctx.role]
    last_error: TransportError | None = None
    raw: str | None = None
    for attempt in range(len(RETRY_DELAYS) + 1):
        try:
            raw = backend.complete(messages, role=ctx.role, temperature=temperature)
            break
        except TransportError as exc:
            last_error = exc
            if attempt < len(RETRY_DELAYS):
                logger.warning(
                    "transport failure (attempt %d): %s; retrying in %.0fs",
                    attempt + 1, exc, RETRY_DELAYS[attempt],
                )
                sleep(RETRY_DELAYS[attempt])
    if raw is None:
        raise BackendUnreachableError(f"backend unreachable after retries: {last_error}")

    if call_log is not None:
        call_log.record(ctx.role, messages, raw, getattr(backend, "backend_id", "?"))

    script = extract_code_block(raw)
    if ctx.role in CODE_ROLES:
        if not script or not script.strip():
            raise GenerationEmptyError(f"{ctx.role.value} response had no code block")
        rationale = strip_code_blocks(raw)
    else:
        script = script or ""
        rationale = raw.strip()
    return GenerationResult(
        script=script,
        rationale=rationale,
        raw=raw,
        backend_id=getattr(backend, "backend_id", "?"),
    )


def make_summarizer(backend, task: TaskSpec, call_log: CallLog | None = None):
    """Adapter: a card summarizer backed by the SUMMARIZE role."""

    def summarize(card) -> str:
        ctx = PromptContext(
            role=Role.SUMMARIZE,
            task=task,
            parent_feedback=f"{card.name} ({card.category}): {card.summary}",
        )
        return generate(ctx, backend, call_log=call_log).rationale

    return summarize


def make_novelty_judge(backend, task: TaskSpec, call_log: CallLog | None = None):
    """Adapter: a novelty judge backed by the NOVELTY_JUDGE role."""

    def judge(script: str, rationales: list[str]) -> str:
        ctx = PromptContext(
            role=Role.NOVELTY_JUDGE,
            task=task,
            candidate_script=script,
            archive_rationales=tuple(rationales),
        )
        return generate(ctx, backend, call_log=call_log).raw

    return judge
