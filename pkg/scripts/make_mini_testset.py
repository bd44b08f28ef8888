"""Build the bundled mini test set by running scripted agents.

Every conversation in data/mini_testset.jsonl is the trace of a real
agent run over the built-in tools, so replaying the same scripts against
the same tools reproduces it exactly. Run from the repository root:

    python3 scripts/make_mini_testset.py
"""

from __future__ import annotations

import json
from pathlib import Path

from toolagent.core import ApiRequest
from toolagent.evaluation import save_conversations_jsonl
from toolagent.executor import Agent, format_action
from toolagent.llm import ScriptedBackend
from toolagent.toolkit import default_registry

OUT_PATH = Path(__file__).resolve().parents[1] / "data" / "mini_testset.jsonl"


def call(api_name: str, **arguments: str) -> str:
    return format_action(ApiRequest(api_name=api_name, arguments=arguments))


# Each scenario is a list of user turns; each user turn carries the
# assistant outputs the agent should produce for it, in order.
SCENARIOS: list[list[tuple[str, list[str]]]] = [
    # Single tool call.
    [
        (
            "Draw a logo image of agent",
            [
                "I will render that.\n"
                + call(
                    "text-to-image",
                    text="a minimalist robot agent logo",
                    resolution="1024*1024",
                ),
                "Here is the logo you asked for.",
            ],
        )
    ],
    [
        (
            "Translate 'hello world' into Chinese",
            [
                call("translation-en2zh", text="hello world"),
                "The Chinese translation is ready above.",
            ],
        )
    ],
    [
        (
            "Find the named entities in: Alice visited Paris in May",
            [
                call("ner", text="Alice visited Paris in May"),
                "Alice is a person and Paris is a location.",
            ],
        )
    ],
    [
        (
            "Read this welcome line aloud: welcome home, traveler",
            [
                call("text-to-audio", text="welcome home, traveler"),
                "The narration has been synthesized.",
            ],
        )
    ],
    [
        (
            "Make a short clip of ocean waves at sunset",
            [
                call("text-to-video", text="ocean waves at sunset"),
                "Your clip is ready.",
            ],
        )
    ],
    [
        (
            "Extract the structured facts from: the review meeting is at 3pm Friday",
            [
                call(
                    "universal-ie",
                    text="the review meeting is at 3pm Friday",
                    schema="event(time, day)",
                ),
                "One event was extracted: a review meeting, 3pm on Friday.",
            ],
        )
    ],
    [
        (
            "Show the Eiffel Tower on a map",
            [
                call("text-to-geographic", text="Eiffel Tower"),
                "The location is plotted above.",
            ],
        )
    ],
    [
        (
            "Search the docs for the upload size limit",
            [
                call("doc-retrieval", query="upload size limit"),
                "Per the docs, uploads are capped at twelve megabytes.",
            ],
        )
    ],
    # Plain answers, no tools.
    [
        (
            "What is a good name for a hiking club?",
            ["How about Summit Circle? Short, outdoorsy, and easy to say."],
        )
    ],
    [
        (
            "Give me one sentence of encouragement",
            ["Every expert was once a beginner who refused to quit."],
        )
    ],
    [
        (
            "Is tomato a fruit or a vegetable?",
            [
                "Botanically a fruit, culinarily treated as a vegetable; "
                "both answers are defensible."
            ],
        )
    ],
    [
        (
            "Summarize what a tool-using agent does in one line",
            [
                "It reads your request, calls the right external tools, and "
                "folds their results into a final answer."
            ],
        )
    ],
    # Two-call chains.
    [
        (
            "画一只戴红帽子的猫",
            [
                "First I translate the prompt, then I draw it.\n"
                + call("translation-zh2en", text="画一只戴红帽子的猫"),
                call(
                    "text-to-image",
                    text="a cat wearing a red hat",
                    resolution="1024*1024",
                ),
                "你要的图片画好了。",
            ],
        )
    ],
    [
        (
            "Find the entities in 'Bob met Carol in Oslo' and translate the sentence to Chinese",
            [
                call("ner", text="Bob met Carol in Oslo"),
                call("translation-en2zh", text="Bob met Carol in Oslo"),
                "Entities: Bob, Carol, Oslo. The Chinese translation is above.",
            ],
        )
    ],
    [
        (
            "Look up the renewal policy and extract the notice period",
            [
                call("doc-retrieval", query="instance renewal policy"),
                call(
                    "universal-ie",
                    text="renewals take effect at the end of the billing cycle",
                ),
                "Renewals apply at the end of the current billing cycle.",
            ],
        )
    ],
    [
        (
            "Draw a lighthouse, then tell me what is in the picture",
            [
                call("text-to-image", text="a lighthouse on a cliff"),
                call(
                    "image-chat",
                    image="the generated lighthouse image",
                    text="what is in this picture?",
                ),
                "The picture shows a lighthouse standing on a cliff.",
            ],
        )
    ],
    # Two user turns.
    [
        (
            "Draw a blue bird",
            [
                call("text-to-image", text="a blue bird"),
                "Done, one blue bird.",
            ],
        ),
        (
            "Now make it sing",
            [
                call("text-to-audio", text="a cheerful birdsong melody"),
                "Your bird now sings.",
            ],
        ),
    ],
    [
        (
            "Translate 'good morning' to Chinese",
            [
                call("translation-en2zh", text="good morning"),
                "Translated above.",
            ],
        ),
        (
            "And 'good night' as well",
            [
                call("translation-en2zh", text="good night"),
                "Also translated.",
            ],
        ),
    ],
    [
        (
            "What tools can you use?",
            [
                "I can draw images, synthesize audio and video, translate, "
                "tag entities, extract structure, plot places, and search docs."
            ],
        ),
        (
            "Then plot Mount Fuji",
            [
                call("text-to-geographic", text="Mount Fuji"),
                "Mount Fuji is plotted.",
            ],
        ),
    ],
    [
        (
            "Find entities in 'Dana flew to Lima'",
            [
                call("ner", text="Dana flew to Lima"),
                "Dana is a person, Lima is a city.",
            ],
        ),
        (
            "Thanks, that is all",
            ["You're welcome, happy to help."],
        ),
    ],
]


def build_conversation(index: int, scenario: list[tuple[str, list[str]]]):
    conv_id = f"eval-{index:03d}"
    script = [output for _, outputs in scenario for output in outputs]
    agent = Agent(
        backend=ScriptedBackend(script), registry=default_registry()
    )
    history: tuple = ()
    record = None
    for query, _ in scenario:
        record = agent.run(query, history=history, conversation_id=conv_id)
        history = record.conversation.messages
    assert record is not None
    assert record.terminated_by == "final_answer", conv_id
    return record.conversation


def main() -> None:
    conversations = [
        build_conversation(i, scenario) for i, scenario in enumerate(SCENARIOS)
    ]
    save_conversations_jsonl(conversations, OUT_PATH)
    calls = sum(
        1
        for conv in conversations
        for m in conv.messages
        if m.role == "assistant" and m.request is not None
    )
    print(
        f"wrote {len(conversations)} conversations "
        f"({calls} tool calls) to {OUT_PATH}"
    )


if __name__ == "__main__":
    main()
