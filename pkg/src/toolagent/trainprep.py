"""Training data preparation: loss-weight masks and synthetic dialogues.

The weight mask marks which tokens of a conversation a trainer should
learn from: context turns get weight 0, ordinary assistant text weight 1,
and the full action block span weight 2. The generator runs three
backends against each other (one playing the user, one the agent, one the
APIs) and filters out instances that call unknown tools, invent
parameters, or emit unparseable action blocks.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from typing import Sequence

from .core import (
    AgentError,
    ApiResult,
    Conversation,
    DocumentError,
    Message,
    ToolSchema,
    ValidationError,
    assistant_message,
    conversation_to_dict,
    parse_conversation,
    schema_from_dict,
    schema_to_dict,
    tool_message,
    user_message,
)
from .executor import ActionParseError, extract_action, parse_action
from .llm import LlmBackend, LlmConfig, ScriptedBackend, _is_cjk, tokenize
from .memory import render_schema_line

WEIGHT_CONTEXT = 0
WEIGHT_TEXT = 1
WEIGHT_ACTION = 2

FILTER_REASONS = ("hallucinated_name", "illegal_request", "backend_error")

GENERATION_STEP_CAP = 8


class MaskError(AgentError):
    """A conversation cannot be turned into a training sample."""


@dataclass(frozen=True)
class WeightedSample:
    """Parallel token and loss-weight sequences for one conversation."""

    tokens: tuple[str, ...]
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.tokens) != len(self.weights):
            raise ValidationError("tokens and weights must be the same length")
        if any(w not in (0, 1, 2) for w in self.weights):
            raise ValidationError("weights must be 0, 1, or 2")


def weight_mask(conversation: Conversation) -> WeightedSample:
    """Assign a loss weight to every token of the conversation.

    User, system, and tool turns weigh 0. Assistant turns weigh 1, except
    the span of an action block (the ACTION marker through the end of its
    JSON object) which weighs 2. An assistant turn that carries a request
    but no parseable action block is an error.
    """
    tokens: list[str] = []
    weights: list[int] = []

    def emit(text: str, weight: int) -> None:
        for token in tokenize(text):
            tokens.append(token)
            weights.append(weight)

    for index, message in enumerate(conversation.messages):
        if message.role != "assistant":
            emit(message.content, WEIGHT_CONTEXT)
            continue
        try:
            located = extract_action(message.content)
        except ActionParseError as exc:
            if message.request is not None:
                raise MaskError(
                    f"messages[{index}] is a tool call without a parseable "
                    f"action block: {exc}"
                ) from exc
            located = None
        if located is None:
            if message.request is not None:
                raise MaskError(
                    f"messages[{index}] is a tool call without an action block"
                )
            emit(message.content, WEIGHT_TEXT)
            continue
        start, end, _ = located
        emit(message.content[:start], WEIGHT_TEXT)
        emit(message.content[start:end], WEIGHT_ACTION)
        emit(message.content[end:], WEIGHT_TEXT)

    return WeightedSample(tokens=tuple(tokens), weights=tuple(weights))


# ---------------------------------------------------------------------------
# Synthetic dialogue generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenInstance:
    """One generated dialogue plus its quality verdict.

    ``verdict`` is ``kept`` or ``filtered``; filtered instances carry a
    machine-readable ``reason``.
    """

    conversation: Conversation
    apis_offered: tuple[str, ...]
    verdict: str = "kept"
    reason: str | None = None
    language: str = "en"
    instance_type: str = "chat"

    def __post_init__(self) -> None:
        object.__setattr__(self, "apis_offered", tuple(self.apis_offered))
        if self.verdict not in ("kept", "filtered"):
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "filtered":
            if self.reason not in FILTER_REASONS:
                raise ValidationError(
                    f"filtered instances need a reason from {FILTER_REASONS}"
                )
        elif self.reason is not None:
            raise ValidationError("kept instances must not carry a reason")

    def to_dict(self) -> dict:
        return {
            "conversation": conversation_to_dict(self.conversation),
            "apis_offered": list(self.apis_offered),
            "verdict": self.verdict,
            "reason": self.reason,
            "language": self.language,
            "instance_type": self.instance_type,
        }


def instance_from_dict(obj: dict) -> GenInstance:
    if not isinstance(obj, dict):
        raise DocumentError("instance must be an object")
    conversation = parse_conversation(json.dumps(obj.get("conversation", {})))
    apis = tuple(obj.get("apis_offered", []))
    return GenInstance(
        conversation=conversation,
        apis_offered=apis,
        verdict=obj.get("verdict", "kept"),
        reason=obj.get("reason"),
        language=obj.get("language", "en"),
        instance_type=obj.get("instance_type", "chat"),
    )


def detect_language(text: str) -> str:
    return "zh" if any(_is_cjk(ch) for ch in text) else "en"


def _classify(conversation: Conversation) -> str:
    has_call = any(
        m.role == "assistant" and m.request is not None
        for m in conversation.messages
    )
    return "tool_use" if has_call else "chat"


def filter_instance(
    instance: GenInstance, apis: Sequence[ToolSchema]
) -> GenInstance:
    """Re-verdict an instance against the offered API list.

    A request naming an API outside the list, or using a parameter the
    schema does not declare, is filtered as ``hallucinated_name``. An
    action block that fails to parse is filtered as ``illegal_request``.
    Everything else is kept. The language and instance type are refreshed
    from the conversation either way.
    """
    conv = instance.conversation
    first_user = next(
        (m.content for m in conv.messages if m.role == "user"), ""
    )
    instance = replace(
        instance,
        language=detect_language(first_user),
        instance_type=_classify(conv),
    )
    schema_by_name = {schema.name: schema for schema in apis}
    for message in conv.messages:
        if message.role != "assistant":
            continue
        try:
            action = parse_action(message.content)
        except ActionParseError:
            return replace(instance, verdict="filtered", reason="illegal_request")
        if action.kind != "tool_call":
            continue
        schema = schema_by_name.get(action.request.api_name)
        if schema is None:
            return replace(
                instance, verdict="filtered", reason="hallucinated_name"
            )
        undeclared = set(action.request.arguments) - schema.parameter_names()
        if undeclared:
            return replace(
                instance, verdict="filtered", reason="hallucinated_name"
            )
    return replace(instance, verdict="kept", reason=None)


_DEMO_INSTRUCTIONS = (
    "Find a vegetarian dinner recipe and estimate its calories.",
    "Translate this product blurb into Chinese for our storefront.",
    "Plan a weekend walking route through the old town.",
    "写一首关于春天的短诗。",
    "Summarize the attached meeting notes in three bullet points.",
    "What will the weather be like in Berlin tomorrow?",
    "Draft a cheerful birthday message for a colleague.",
    "Convert 250 US dollars into euros at today's rate.",
)


def _user_prompt(demos: Sequence[str], apis: Sequence[ToolSchema]) -> str:
    lines = ["Write one realistic user instruction. Examples:"]
    lines += [f"- {demo}" for demo in demos]
    lines.append("Available APIs:")
    lines += [f"- {schema.name}: {schema.description}" for schema in apis]
    return "\n".join(lines)


def _agent_prompt(apis: Sequence[ToolSchema], transcript: Sequence[Message]) -> str:
    lines = ["You may call these APIs:"]
    lines += [render_schema_line(schema) for schema in apis]
    lines += [f"{message.role}: {message.content}" for message in transcript]
    lines.append("assistant:")
    return "\n".join(lines)


def _api_prompt(api_name: str, arguments: dict[str, str]) -> str:
    return (
        f"Simulate the output of API {api_name} for arguments "
        + json.dumps(arguments, sort_keys=True, ensure_ascii=False)
    )


def generate_instances(
    user_llm: LlmBackend,
    agent_llm: LlmBackend,
    api_sim: LlmBackend,
    apis: Sequence[ToolSchema],
    n: int,
    seed: int = 0,
    max_steps: int = GENERATION_STEP_CAP,
) -> list[GenInstance]:
    """Generate ``n`` dialogues from a user/agent/API backend trio.

    The user backend writes the instruction (prompted with a few sampled
    demonstration instructions), the agent backend alternates tool calls
    and answers, and the API backend plays every called API. A dialogue
    ends at the agent's plain-text answer or after ``max_steps`` calls.
    Each instance is passed through :func:`filter_instance`; a backend
    failure marks the instance filtered with reason ``backend_error``.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    if not apis:
        raise ValidationError("at least one API schema is required")
    rng = random.Random(seed)
    instances: list[GenInstance] = []
    apis = tuple(apis)
    offered = tuple(schema.name for schema in apis)
    for i in range(n):
        demos = rng.sample(_DEMO_INSTRUCTIONS, k=3)
        conv_id = f"gen-{i:04d}"
        messages: list[Message] = []
        try:
            instruction = user_llm.generate(_user_prompt(demos, apis))
            messages.append(user_message(instruction))
            for _ in range(max_steps):
                output = agent_llm.generate(_agent_prompt(apis, messages))
                try:
                    action = parse_action(output)
                except ActionParseError:
                    # Keep the broken output; the filter flags it below.
                    messages.append(assistant_message(output))
                    break
                if action.kind == "final_answer":
                    messages.append(assistant_message(output))
                    break
                messages.append(assistant_message(output, request=action.request))
                api_output = api_sim.generate(
                    _api_prompt(
                        action.request.api_name, dict(action.request.arguments)
                    )
                )
                messages.append(
                    tool_message(
                        api_output,
                        result=ApiResult(
                            api_name=action.request.api_name,
                            status="success",
                            payload=api_output,
                        ),
                    )
                )
        except AgentError:
            instances.append(
                GenInstance(
                    conversation=Conversation(
                        id=conv_id, messages=tuple(messages)
                    ),
                    apis_offered=offered,
                    verdict="filtered",
                    reason="backend_error",
                )
            )
            continue
        conversation = Conversation(id=conv_id, messages=tuple(messages))
        instance = GenInstance(
            conversation=conversation, apis_offered=offered
        )
        instances.append(filter_instance(instance, apis))
    return instances


def demo_backend_trio(
    apis: Sequence[ToolSchema],
    n: int,
    seed: int = 0,
    bad_rate: float = 0.0,
) -> tuple[LlmBackend, LlmBackend, LlmBackend]:
    """Scripted user, agent, and API backends for offline generation.

    The scripts are planned up front with a seeded RNG in exactly the
    order :func:`generate_instances` consumes them, so the trio drives
    ``n`` instances deterministically. ``bad_rate`` injects instances the
    filter should reject, half with hallucinated calls and half with
    unparseable action blocks.
    """
    if not apis:
        raise ValidationError("at least one API schema is required")
    if not 0.0 <= bad_rate <= 1.0:
        raise ValidationError("bad_rate must be within [0, 1]")
    rng = random.Random(seed)
    apis = tuple(apis)
    config = LlmConfig(model_name="demo-scripted", max_context_tokens=16384)
    user_script: list[str] = []
    agent_script: list[str] = []
    api_script: list[str] = []

    def call_line(api_name: str, arguments: dict[str, str]) -> str:
        body = json.dumps(
            {"api_name": api_name, "parameters": arguments},
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        return f"I will call {api_name} for this.\nACTION: {body}"

    def sample_arguments(schema: ToolSchema) -> dict[str, str]:
        arguments = {
            p.name: f"sample {p.name} {rng.randrange(100)}"
            for p in schema.parameters
            if p.required
        }
        optional = [p for p in schema.parameters if not p.required]
        if optional and rng.random() < 0.5:
            p = rng.choice(optional)
            arguments[p.name] = f"sample {p.name} {rng.randrange(100)}"
        return arguments

    for _ in range(n):
        roll = rng.random()
        schema = rng.choice(apis)
        if roll < bad_rate / 2:
            # Call an API that was never offered.
            user_script.append(f"Please use a tool to {schema.description}")
            agent_script.append(call_line("imagine-api", {"text": "anything"}))
            api_script.append("simulated output for an unknown api")
            agent_script.append("Done, I used a tool for that.")
        elif roll < bad_rate:
            # Emit a broken action block; generation stops at it.
            user_script.append(f"Please use a tool to {schema.description}")
            agent_script.append('ACTION: {"api_name": "broken"')
        elif roll < bad_rate + (1 - bad_rate) * 0.2:
            # Plain chat, no tool involved.
            user_script.append("随便聊聊今天的天气吧。" if rng.random() < 0.3
                               else "Tell me something uplifting.")
            agent_script.append("Here is a friendly reply with no tool use.")
        else:
            calls = 2 if rng.random() < 0.25 else 1
            user_script.append(
                f"Please handle this with {schema.name}: {schema.description}"
            )
            for _ in range(calls):
                arguments = sample_arguments(schema)
                agent_script.append(call_line(schema.name, arguments))
                api_script.append(
                    f"simulated {schema.name} output {rng.randrange(1000)}"
                )
            agent_script.append(f"All done, {schema.name} finished the task.")

    return (
        ScriptedBackend(user_script, config=config),
        ScriptedBackend(agent_script, config=config),
        ScriptedBackend(api_script, config=config),
    )


def dataset_stats(instances: Sequence[GenInstance]) -> dict:
    """Corpus summary: counts by verdict, language, and type, plus the
    mean user turns per kept conversation and mean tool calls per user turn."""
    kept = [inst for inst in instances if inst.verdict == "kept"]
    filtered_reasons: dict[str, int] = {}
    for inst in instances:
        if inst.verdict == "filtered":
            key = inst.reason or "unknown"
            filtered_reasons[key] = filtered_reasons.get(key, 0) + 1
    by_language: dict[str, int] = {}
    by_type: dict[str, int] = {}
    total_user_turns = 0
    total_calls = 0
    for inst in kept:
        by_language[inst.language] = by_language.get(inst.language, 0) + 1
        by_type[inst.instance_type] = by_type.get(inst.instance_type, 0) + 1
        total_user_turns += sum(
            1 for m in inst.conversation.messages if m.role == "user"
        )
        total_calls += sum(
            1
            for m in inst.conversation.messages
            if m.role == "assistant" and m.request is not None
        )
    return {
        "total": len(instances),
        "kept": len(kept),
        "filtered": len(instances) - len(kept),
        "filtered_reasons": dict(sorted(filtered_reasons.items())),
        "by_language": dict(sorted(by_language.items())),
        "by_instance_type": dict(sorted(by_type.items())),
        "avg_turn": (total_user_turns / len(kept)) if kept else 0.0,
        "avg_step": (total_calls / total_user_turns) if total_user_turns else 0.0,
    }
