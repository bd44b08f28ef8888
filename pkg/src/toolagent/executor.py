"""Action grammar parsing and the iterative agent loop.

The model signals a tool call by emitting a line that starts with
``ACTION:`` followed by a JSON object naming the tool and its arguments.
Anything without such a line is a final answer. The run loop alternates
retrieve, prompt, generate, parse, execute until the model answers in
plain text or the iteration cap is hit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .core import (
    AgentError,
    ApiRequest,
    ApiResult,
    Conversation,
    Message,
    ValidationError,
    assistant_message,
    conversation_to_dict,
    tool_message,
    user_message,
)
from .llm import LlmBackend
from .memory import KnowledgeStore, PromptBundle, build_prompt
from .toolkit import ToolRegistry

ACTION_MARKER = "ACTION:"

TERMINATIONS = ("final_answer", "step_limit")

DEFAULT_SYSTEM_PROMPT = (
    "You are a helpful assistant that can call external tools. To call a "
    "tool, reply with a line starting with ACTION: followed by a JSON "
    'object of the form {"api_name": "...", "parameters": {...}}. When the '
    "tool result arrives, continue. When no tool is needed, reply with the "
    "final answer as plain text."
)


class ActionParseError(AgentError):
    """An ACTION line was present but its payload is not a valid request.

    ``span`` holds the offending slice of model output.
    """

    def __init__(self, message: str, span: str = ""):
        super().__init__(message)
        self.span = span


@dataclass(frozen=True)
class AgentAction:
    """Parsed interpretation of one model output.

    Exactly one of ``request`` (for kind ``tool_call``) or ``answer`` (for
    kind ``final_answer``) is populated; ``raw`` keeps the verbatim output.
    """

    kind: str
    raw: str
    request: ApiRequest | None = None
    answer: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("tool_call", "final_answer"):
            raise ValidationError(f"unknown action kind {self.kind!r}")
        if self.kind == "tool_call" and (
            self.request is None or self.answer is not None
        ):
            raise ValidationError("tool_call actions carry a request only")
        if self.kind == "final_answer" and (
            self.answer is None or self.request is not None
        ):
            raise ValidationError("final_answer actions carry an answer only")


def format_action(request: ApiRequest) -> str:
    """Serialize a request into the ACTION line the parser understands."""
    body = json.dumps(
        {"api_name": request.api_name, "parameters": dict(request.arguments)},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return f"{ACTION_MARKER} {body}"


def _coerce_argument(value: object) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


def extract_action(text: str) -> tuple[int, int, ApiRequest] | None:
    """Locate and parse the first action block in ``text``.

    Returns ``(start, end, request)`` character offsets covering the
    marker through the end of the JSON object, or None when no line starts
    with the marker. A marker whose payload is not a valid request raises
    ActionParseError.
    """
    offset = 0
    marker_start = -1
    for line in text.splitlines(keepends=True):
        stripped = line.lstrip()
        if stripped.startswith(ACTION_MARKER):
            marker_start = offset + (len(line) - len(stripped))
            break
        offset += len(line)
    if marker_start < 0:
        return None

    payload_start = marker_start + len(ACTION_MARKER)
    payload = text[payload_start:]
    leading = len(payload) - len(payload.lstrip())
    try:
        obj, consumed = json.JSONDecoder().raw_decode(payload[leading:])
    except json.JSONDecodeError as exc:
        raise ActionParseError(
            f"action payload is not valid JSON: {exc}",
            span=text[marker_start : marker_start + 200],
        ) from exc
    end = payload_start + leading + consumed
    span = text[marker_start:end]
    if not isinstance(obj, dict):
        raise ActionParseError("action payload must be a JSON object", span=span)
    api_name = obj.get("api_name")
    if not isinstance(api_name, str) or not api_name:
        raise ActionParseError(
            "action payload needs a non-empty 'api_name' string", span=span
        )
    parameters = obj.get("parameters", {})
    if not isinstance(parameters, dict):
        raise ActionParseError("'parameters' must be a JSON object", span=span)
    arguments = {
        str(key): _coerce_argument(value) for key, value in parameters.items()
    }
    return marker_start, end, ApiRequest(api_name=api_name, arguments=arguments)


def parse_action(llm_output: str) -> AgentAction:
    """Classify model output as a tool call or a final answer.

    Prose before the action block is preserved in ``raw``. Output without
    an ACTION line is a final answer verbatim.
    """
    located = extract_action(llm_output)
    if located is None:
        return AgentAction(kind="final_answer", raw=llm_output, answer=llm_output)
    _, _, request = located
    return AgentAction(kind="tool_call", raw=llm_output, request=request)


@dataclass(frozen=True)
class AgentRunRecord:
    """Trace of one run: the conversation, iterations used, and why it ended."""

    conversation: Conversation
    steps_taken: int
    terminated_by: str

    def __post_init__(self) -> None:
        if self.terminated_by not in TERMINATIONS:
            raise ValidationError(
                f"unknown termination {self.terminated_by!r}"
            )
        if self.steps_taken < 0:
            raise ValidationError("steps_taken must be non-negative")

    def final_answer(self) -> str:
        for message in reversed(self.conversation.messages):
            if message.role == "assistant":
                return message.content
        return ""

    def to_dict(self) -> dict:
        return {
            "conversation": conversation_to_dict(self.conversation),
            "steps_taken": self.steps_taken,
            "terminated_by": self.terminated_by,
        }


class Agent:
    """Binds a backend, a tool registry, and optional document memory.

    Each run retrieves the top ``tool_top_k`` tools for the original user
    query, assembles a budgeted prompt, and iterates generate, parse,
    execute. A malformed action consumes one iteration and its parse error
    is fed back as a tool turn so the model can correct itself. When the
    iteration cap is hit, one more completion is requested from a prompt
    without tool schemas to force a plain-text answer.
    """

    def __init__(
        self,
        backend: LlmBackend,
        registry: ToolRegistry | None = None,
        knowledge: KnowledgeStore | None = None,
        system_prompt: str = DEFAULT_SYSTEM_PROMPT,
        few_shot: Sequence[str] = (),
        max_iterations: int = 5,
        tool_top_k: int = 3,
        knowledge_top_k: int = 3,
    ):
        if max_iterations <= 0:
            raise ValidationError("max_iterations must be positive")
        self.backend = backend
        self.registry = registry
        self.knowledge = knowledge
        self.system_prompt = system_prompt
        self.few_shot = tuple(few_shot)
        self.max_iterations = max_iterations
        self.tool_top_k = tool_top_k
        self.knowledge_top_k = knowledge_top_k

    def _retrieve_schemas(self, query: str) -> tuple:
        if self.registry is None or len(self.registry) == 0:
            return ()
        hits = self.registry.retrieve_tools(query, k=self.tool_top_k)
        return tuple(self.registry.get(hit.tool_name) for hit in hits)

    def _retrieve_knowledge(self, query: str) -> tuple[str, ...]:
        if self.knowledge is None or len(self.knowledge) == 0:
            return ()
        chunks = self.knowledge.retrieve(query, k=self.knowledge_top_k)
        return tuple(chunk.text for chunk in chunks)

    def _execute(self, request: ApiRequest) -> ApiResult:
        if self.registry is None:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload="no tools are registered",
            )
        return self.registry.execute_tool(request)

    def run(
        self,
        user_query: str,
        history: Sequence[Message] = (),
        conversation_id: str = "session-0",
        max_iterations: int | None = None,
    ) -> AgentRunRecord:
        """Answer one user query, optionally continuing a prior trace.

        ``history`` is a prior conversation's messages; the new user turn
        and everything the loop produces are appended after it.
        """
        if not user_query:
            raise ValidationError("user_query must be non-empty")
        cap = self.max_iterations if max_iterations is None else max_iterations
        if cap <= 0:
            raise ValidationError("max_iterations must be positive")

        budget = self.backend.config.prompt_budget
        schemas = self._retrieve_schemas(user_query)
        knowledge = self._retrieve_knowledge(user_query)
        messages: list[Message] = list(history)
        messages.append(user_message(user_query))

        def bundle(with_tools: bool) -> PromptBundle:
            return PromptBundle(
                system_prompt=self.system_prompt,
                current_query=user_query,
                api_schemas=schemas if with_tools else (),
                knowledge=knowledge,
                history=tuple(messages),
                few_shot=self.few_shot,
            )

        steps = 0
        terminated_by = "step_limit"
        for _ in range(cap):
            output = self.backend.generate(build_prompt(bundle(True), budget))
            try:
                action = parse_action(output)
            except ActionParseError as exc:
                messages.append(assistant_message(output))
                messages.append(tool_message(f"action parse error: {exc}"))
                steps += 1
                continue
            if action.kind == "final_answer":
                messages.append(assistant_message(output))
                terminated_by = "final_answer"
                break
            result = self._execute(action.request)
            messages.append(assistant_message(output, request=action.request))
            messages.append(tool_message(result.payload, result=result))
            steps += 1

        if terminated_by == "step_limit":
            # Force a plain answer from a prompt without tool schemas.
            output = self.backend.generate(build_prompt(bundle(False), budget))
            messages.append(assistant_message(output))

        return AgentRunRecord(
            conversation=Conversation(id=conversation_id, messages=tuple(messages)),
            steps_taken=steps,
            terminated_by=terminated_by,
        )
