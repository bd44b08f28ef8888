"""Shared domain types and their JSON serialization.

Every other module speaks these shapes: tool schemas, API requests and
results, conversation messages. Instances are immutable after construction
and therefore safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

ROLES = ("system", "user", "assistant", "tool")
RESULT_STATUSES = ("success", "error")


class AgentError(Exception):
    """Base class for every error this library raises on purpose."""


class ValidationError(AgentError):
    """A domain invariant was violated.

    ``path`` points at the offending location when one is known, for
    example ``messages[3]``.
    """

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class DocumentError(AgentError):
    """A serialized document could not be parsed."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ToolParameter:
    """One declared parameter of a tool.

    Attributes:
        name: Parameter identifier, non-empty.
        description: Human-readable explanation shown to the model.
        required: Whether a call without this parameter is rejected.
    """

    name: str
    description: str = ""
    required: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("parameter name must be non-empty")


@dataclass(frozen=True)
class ToolSchema:
    """Declaration of a callable tool.

    ``endpoint`` is either a local handler id or a remote URL; anything
    starting with ``http://`` or ``https://`` is treated as remote.
    """

    name: str
    description: str
    parameters: tuple[ToolParameter, ...] = ()
    endpoint: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("tool name must be non-empty")
        if not self.description:
            raise ValidationError(f"tool {self.name!r} needs a description")
        object.__setattr__(self, "parameters", tuple(self.parameters))
        seen: set[str] = set()
        for p in self.parameters:
            if p.name in seen:
                raise ValidationError(
                    f"duplicate parameter {p.name!r} in tool {self.name!r}"
                )
            seen.add(p.name)

    @property
    def is_remote(self) -> bool:
        return self.endpoint.startswith(("http://", "https://"))

    def parameter_names(self) -> set[str]:
        return {p.name for p in self.parameters}


@dataclass(frozen=True)
class ApiRequest:
    """A concrete tool invocation: the tool name plus string arguments."""

    api_name: str
    arguments: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.api_name:
            raise ValidationError("api_name must be non-empty")
        arguments = dict(self.arguments)
        for key in arguments:
            if not key:
                raise ValidationError("argument names must be non-empty")
        object.__setattr__(self, "arguments", arguments)


@dataclass(frozen=True)
class ApiResult:
    """Outcome of one tool invocation.

    A result with ``status="error"`` must carry a human-readable cause in
    ``payload``.
    """

    api_name: str
    status: str
    payload: str = ""

    def __post_init__(self) -> None:
        if self.status not in RESULT_STATUSES:
            raise ValidationError(f"unknown result status {self.status!r}")
        if self.status == "error" and not self.payload:
            raise ValidationError("error results must explain the cause")


@dataclass(frozen=True)
class Message:
    """One conversation turn.

    ``request`` may only appear on assistant turns, ``result`` only on
    tool turns.
    """

    role: str
    content: str
    request: ApiRequest | None = None
    result: ApiResult | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")
        if self.request is not None and self.role != "assistant":
            raise ValidationError("only assistant turns may carry a request")
        if self.result is not None and self.role != "tool":
            raise ValidationError("only tool turns may carry a result")


def system_message(content: str) -> Message:
    return Message(role="system", content=content)


def user_message(content: str) -> Message:
    return Message(role="user", content=content)


def assistant_message(content: str, request: ApiRequest | None = None) -> Message:
    return Message(role="assistant", content=content, request=request)


def tool_message(content: str, result: ApiResult | None = None) -> Message:
    return Message(role="tool", content=content, result=result)


@dataclass(frozen=True)
class Conversation:
    """An ordered dialogue.

    Invariants checked at construction: the first non-system message is a
    user turn, and no two consecutive messages are both user turns.
    """

    id: str
    messages: tuple[Message, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("conversation id must be non-empty")
        object.__setattr__(self, "messages", tuple(self.messages))
        seen_nonsystem = False
        for i, msg in enumerate(self.messages):
            if msg.role == "system":
                if seen_nonsystem:
                    raise ValidationError(
                        "system turns must precede the dialogue",
                        path=f"messages[{i}]",
                    )
                continue
            if not seen_nonsystem and msg.role != "user":
                raise ValidationError(
                    "first non-system message must be a user turn",
                    path=f"messages[{i}]",
                )
            seen_nonsystem = True
        for i in range(1, len(self.messages)):
            if self.messages[i].role == "user" and self.messages[i - 1].role == "user":
                raise ValidationError(
                    "two consecutive user turns", path=f"messages[{i}]"
                )


# ---------------------------------------------------------------------------
# JSON mapping
# ---------------------------------------------------------------------------


def request_to_dict(req: ApiRequest) -> dict[str, Any]:
    return {"api_name": req.api_name, "arguments": dict(req.arguments)}


def result_to_dict(res: ApiResult) -> dict[str, Any]:
    return {"api_name": res.api_name, "status": res.status, "payload": res.payload}


def message_to_dict(msg: Message) -> dict[str, Any]:
    out: dict[str, Any] = {"role": msg.role, "content": msg.content}
    if msg.request is not None:
        out["request"] = request_to_dict(msg.request)
    if msg.result is not None:
        out["result"] = result_to_dict(msg.result)
    return out


def conversation_to_dict(conv: Conversation) -> dict[str, Any]:
    return {"id": conv.id, "messages": [message_to_dict(m) for m in conv.messages]}


def serialize_conversation(conv: Conversation) -> str:
    """Render a conversation as canonical JSON.

    Keys are sorted and separators are compact, so equal conversations
    always serialize to identical bytes.
    """
    return json.dumps(
        conversation_to_dict(conv),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def _expect_str(obj: Any, key: str, path: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise DocumentError(f"field {key!r} must be a string", path=path)
    return value


def request_from_dict(obj: Any, path: str = "request") -> ApiRequest:
    if not isinstance(obj, dict):
        raise DocumentError("request must be an object", path=path)
    api_name = _expect_str(obj, "api_name", path)
    arguments = obj.get("arguments", {})
    if not isinstance(arguments, dict):
        raise DocumentError("arguments must be an object", path=path)
    for key, value in arguments.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise DocumentError(
                "arguments must map strings to strings", path=f"{path}.arguments"
            )
    return ApiRequest(api_name=api_name, arguments=arguments)


def result_from_dict(obj: Any, path: str = "result") -> ApiResult:
    if not isinstance(obj, dict):
        raise DocumentError("result must be an object", path=path)
    return ApiResult(
        api_name=_expect_str(obj, "api_name", path),
        status=_expect_str(obj, "status", path),
        payload=_expect_str(obj, "payload", path) if "payload" in obj else "",
    )


def message_from_dict(obj: Any, path: str = "message") -> Message:
    if not isinstance(obj, dict):
        raise DocumentError("message must be an object", path=path)
    role = _expect_str(obj, "role", path)
    content = _expect_str(obj, "content", path)
    request = None
    if obj.get("request") is not None:
        request = request_from_dict(obj["request"], path=f"{path}.request")
    result = None
    if obj.get("result") is not None:
        result = result_from_dict(obj["result"], path=f"{path}.result")
    try:
        return Message(role=role, content=content, request=request, result=result)
    except ValidationError as exc:
        raise ValidationError(str(exc), path=path) from exc


def parse_conversation(text: str) -> Conversation:
    """Parse serialized JSON back into a Conversation.

    Raises DocumentError for malformed documents and ValidationError for
    invariant violations; both name the offending path. Never exits the
    process.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DocumentError("conversation must be a JSON object")
    conv_id = _expect_str(obj, "id", "conversation")
    raw_messages = obj.get("messages")
    if not isinstance(raw_messages, list):
        raise DocumentError("field 'messages' must be an array", path="messages")
    messages = [
        message_from_dict(raw, path=f"messages[{i}]")
        for i, raw in enumerate(raw_messages)
    ]
    return Conversation(id=conv_id, messages=tuple(messages))


def schema_to_dict(schema: ToolSchema) -> dict[str, Any]:
    return {
        "name": schema.name,
        "description": schema.description,
        "parameters": [
            {"name": p.name, "description": p.description, "required": p.required}
            for p in schema.parameters
        ],
        "endpoint": schema.endpoint,
    }


def schema_from_dict(obj: Any, path: str = "tool") -> ToolSchema:
    if not isinstance(obj, dict):
        raise DocumentError("tool schema must be an object", path=path)
    raw_params = obj.get("parameters", [])
    if not isinstance(raw_params, list):
        raise DocumentError("parameters must be an array", path=path)
    params = []
    for i, raw in enumerate(raw_params):
        if not isinstance(raw, dict):
            raise DocumentError(
                "parameter must be an object", path=f"{path}.parameters[{i}]"
            )
        params.append(
            ToolParameter(
                name=_expect_str(raw, "name", f"{path}.parameters[{i}]"),
                description=raw.get("description", ""),
                required=bool(raw.get("required", False)),
            )
        )
    return ToolSchema(
        name=_expect_str(obj, "name", path),
        description=_expect_str(obj, "description", path),
        parameters=tuple(params),
        endpoint=obj.get("endpoint", "") or "",
    )
