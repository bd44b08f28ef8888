"""Action grammar parsing and the retrieve-generate-execute loop."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from toolagent.core import (
    ApiRequest,
    ToolParameter,
    ToolSchema,
    parse_conversation,
    serialize_conversation,
)
from toolagent.executor import (
    ACTION_MARKER,
    ActionParseError,
    Agent,
    extract_action,
    format_action,
    parse_action,
)
from toolagent.llm import ContextOverflowError, LlmConfig, ScriptedBackend
from toolagent.memory import KnowledgeStore
from toolagent.toolkit import ToolRegistry, default_registry

# --------------------------------------------------------------------- grammar


def test_format_action_is_stable_and_compact():
    request = ApiRequest(
        api_name="text-to-image", arguments={"text": "a cat", "size": "1024"}
    )
    line = format_action(request)
    assert line == (
        'ACTION: {"api_name":"text-to-image",'
        '"parameters":{"size":"1024","text":"a cat"}}'
    )


def test_parse_final_answer_when_no_marker():
    action = parse_action("Here is your answer.")
    assert action.kind == "final_answer"
    assert action.answer == "Here is your answer."
    assert action.request is None


def test_parse_tool_call_preserves_surrounding_prose():
    raw = (
        "I will draw that now.\n"
        'ACTION: {"api_name":"text-to-image","parameters":{"text":"a dog"}}\n'
        "Done soon."
    )
    action = parse_action(raw)
    assert action.kind == "tool_call"
    assert action.raw == raw
    assert action.request == ApiRequest(
        api_name="text-to-image", arguments={"text": "a dog"}
    )


def test_parse_marker_with_leading_whitespace():
    raw = '  ACTION: {"api_name":"ner","parameters":{}}'
    assert parse_action(raw).kind == "tool_call"


def test_parse_uses_first_action_line():
    raw = (
        'ACTION: {"api_name":"first","parameters":{}}\n'
        'ACTION: {"api_name":"second","parameters":{}}'
    )
    assert parse_action(raw).request.api_name == "first"


def test_marker_mid_line_is_not_an_action():
    action = parse_action('Use ACTION: {"api_name":"x"} like this some day.')
    assert action.kind == "final_answer"


@pytest.mark.parametrize(
    "payload",
    [
        "{not json",
        "[1, 2]",
        '{"parameters": {}}',
        '{"api_name": "", "parameters": {}}',
        '{"api_name": 7, "parameters": {}}',
        '{"api_name": "x", "parameters": []}',
    ],
)
def test_malformed_action_blocks_raise(payload):
    with pytest.raises(ActionParseError):
        parse_action(f"{ACTION_MARKER} {payload}")


def test_missing_parameters_defaults_to_empty():
    action = parse_action('ACTION: {"api_name": "ner"}')
    assert action.request == ApiRequest(api_name="ner", arguments={})


def test_non_string_argument_values_are_coerced():
    action = parse_action(
        'ACTION: {"api_name":"x","parameters":{"n": 3, "flag": true, "s": "y"}}'
    )
    assert action.request.arguments == {"n": "3", "flag": "true", "s": "y"}


def test_extract_action_reports_span():
    prefix = "thinking first\n"
    line = 'ACTION: {"api_name":"ner","parameters":{}}'
    found = extract_action(prefix + line + "\ntrailing")
    assert found is not None
    start, end, request = found
    assert (prefix + line + "\ntrailing")[start:end].startswith("ACTION:")
    assert request.api_name == "ner"


_arg_names = st.text(alphabet="abcdefgh", min_size=1, max_size=6)
_arg_values = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=20
)


@given(
    name=st.text(alphabet="abcdefgh-", min_size=1, max_size=10).filter(
        lambda s: s.strip("-")
    ),
    args=st.dictionaries(_arg_names, _arg_values, max_size=4),
)
def test_format_parse_round_trip(name, args):
    request = ApiRequest(api_name=name, arguments=args)
    action = parse_action("ok\n" + format_action(request))
    assert action.kind == "tool_call"
    assert action.request == request


# ------------------------------------------------------------------- agent runs


def _image_action(text: str) -> str:
    return format_action(
        ApiRequest(api_name="text-to-image", arguments={"text": text})
    )


def test_single_tool_call_run():
    backend = ScriptedBackend(
        ["Let me draw.\n" + _image_action("a red fox"), "Here is your fox."]
    )
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("Draw a red fox")
    roles = [m.role for m in record.conversation.messages]
    assert roles == ["user", "assistant", "tool", "assistant"]
    assert record.steps_taken == 1
    assert record.terminated_by == "final_answer"
    assert record.final_answer() == "Here is your fox."
    assert record.conversation.messages[1].request.api_name == "text-to-image"
    assert "a red fox" in record.conversation.messages[2].content


def test_plain_answer_run_makes_no_tool_calls():
    backend = ScriptedBackend(["Just an answer."])
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("say something")
    assert record.steps_taken == 0
    assert record.terminated_by == "final_answer"
    assert [m.role for m in record.conversation.messages] == [
        "user",
        "assistant",
    ]


def test_step_cap_forces_schema_free_final_answer():
    calls = []
    registry = ToolRegistry()
    registry.register_tool(
        ToolSchema(
            name="probe",
            description="records invocations",
            parameters=(ToolParameter("q", required=True),),
        )
    )
    registry.register_handler(
        "probe", lambda args: calls.append(dict(args)) or "probed"
    )
    probe = format_action(ApiRequest(api_name="probe", arguments={"q": "x"}))
    backend = ScriptedBackend([probe, probe, probe, "Final summary."])
    agent = Agent(backend=backend, registry=registry, max_iterations=3)
    record = agent.run("keep probing")
    assert len(calls) == 3
    assert record.steps_taken == 3
    assert record.terminated_by == "step_limit"
    assert record.final_answer() == "Final summary."
    # The forced final pass must not advertise tools.
    assert record.conversation.messages[-1].request is None


def test_malformed_action_is_fed_back_and_costs_a_step():
    broken = 'ACTION: {"api_name": "broken"'
    backend = ScriptedBackend([broken, "Recovered answer."])
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("do something")
    roles = [m.role for m in record.conversation.messages]
    assert roles == ["user", "assistant", "tool", "assistant"]
    assert record.conversation.messages[1].content == broken
    assert record.conversation.messages[1].request is None
    assert "parse" in record.conversation.messages[2].content.lower()
    assert record.steps_taken == 1
    assert record.terminated_by == "final_answer"


def test_unknown_tool_error_is_fed_back():
    call = format_action(ApiRequest(api_name="no-such-tool"))
    backend = ScriptedBackend([call, "Moving on."])
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("try the wrong tool")
    tool_turn = record.conversation.messages[2]
    assert tool_turn.result.status == "error"
    assert "no-such-tool" in tool_turn.content


def test_registered_tool_called_exactly_once_with_scripted_arguments():
    calls = []
    registry = default_registry()
    registry.register_tool(
        ToolSchema(
            name="renew-instance",
            description="renews a cloud instance lease",
            parameters=(
                ToolParameter("instance_id", required=True),
                ToolParameter("period", required=True),
            ),
        )
    )
    registry.register_handler(
        "renew-instance", lambda args: calls.append(dict(args)) or "renewed"
    )
    request = ApiRequest(
        api_name="renew-instance",
        arguments={"instance_id": "i-042", "period": "1"},
    )
    backend = ScriptedBackend(
        [format_action(request), "Your instance lease was renewed."]
    )
    agent = Agent(backend=backend, registry=registry)
    record = agent.run("Renew instance i-042 for one month")
    assert calls == [{"instance_id": "i-042", "period": "1"}]
    assert record.terminated_by == "final_answer"


def test_runs_are_deterministic():
    def run_once() -> str:
        backend = ScriptedBackend(
            [_image_action("a map"), "Map drawn."]
        )
        agent = Agent(backend=backend, registry=default_registry())
        return serialize_conversation(agent.run("draw a map").conversation)

    assert run_once() == run_once()


def test_trace_round_trips_through_serialization():
    backend = ScriptedBackend([_image_action("a boat"), "Done."])
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("draw a boat", conversation_id="trace-1")
    raw = serialize_conversation(record.conversation)
    assert parse_conversation(raw) == record.conversation


def test_second_run_continues_history():
    backend = ScriptedBackend(["first answer", "second answer"])
    agent = Agent(backend=backend, registry=default_registry())
    first = agent.run("question one", conversation_id="s")
    second = agent.run(
        "question two",
        history=first.conversation.messages,
        conversation_id="s",
    )
    roles = [m.role for m in second.conversation.messages]
    assert roles == ["user", "assistant", "user", "assistant"]
    assert second.conversation.messages[0].content == "question one"
    assert second.final_answer() == "second answer"


def test_record_to_dict_is_json_ready():
    backend = ScriptedBackend(["plain answer"])
    agent = Agent(backend=backend, registry=default_registry())
    record = agent.run("q")
    payload = record.to_dict()
    json.dumps(payload)
    assert payload["terminated_by"] == "final_answer"
    assert payload["steps_taken"] == 0


def test_context_overflow_propagates():
    config = LlmConfig(max_context_tokens=8, max_new_tokens=4)
    backend = ScriptedBackend(["x"], config=config)
    agent = Agent(
        backend=backend,
        registry=default_registry(),
        system_prompt="a very long system prompt that cannot possibly fit",
    )
    with pytest.raises(ContextOverflowError):
        agent.run("irrelevant")


def test_knowledge_store_feeds_the_prompt():
    store = KnowledgeStore(chunk_size=32, overlap=0)
    store.ingest("faq", "the payload limit is twelve megabytes per upload")
    prompts = []

    class Spy(ScriptedBackend):
        def _complete(self, prompt: str) -> str:
            prompts.append(prompt)
            return super()._complete(prompt)

    backend = Spy(["answer using the fact"])
    agent = Agent(backend=backend, registry=default_registry(), knowledge=store)
    agent.run("what is the payload limit?")
    assert "twelve megabytes" in prompts[0]
