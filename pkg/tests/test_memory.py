"""Document chunking, knowledge retrieval, and budgeted prompt assembly."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from toolagent.core import (
    ToolParameter,
    ToolSchema,
    ValidationError,
    assistant_message,
    user_message,
)
from toolagent.llm import count_tokens, tokenize
from toolagent.memory import (
    EXAMPLES_HEADER,
    HISTORY_HEADER,
    KNOWLEDGE_HEADER,
    TOOLS_HEADER,
    KnowledgeStore,
    PromptBundle,
    build_prompt,
    render_history_line,
    render_schema_line,
)

# -------------------------------------------------------------------- chunking


def _doc(n: int) -> str:
    return " ".join(f"w{i:03d}" for i in range(n))


def test_short_document_becomes_one_chunk():
    store = KnowledgeStore(chunk_size=40, overlap=10)
    chunks = store.ingest("doc", _doc(40))
    assert len(chunks) == 1
    assert chunks[0].chunk_index == 0
    assert tokenize(chunks[0].text) == tokenize(_doc(40))


def test_long_document_chunks_with_overlap():
    store = KnowledgeStore(chunk_size=40, overlap=10)
    chunks = store.ingest("doc", _doc(100))
    assert [c.chunk_index for c in chunks] == [0, 1, 2, 3]
    tokens = tokenize(_doc(100))
    for i, start in enumerate([0, 30, 60, 90]):
        assert tokenize(chunks[i].text) == tokens[start : start + 40]


def test_chunks_cover_every_token():
    store = KnowledgeStore(chunk_size=16, overlap=4)
    n = 173
    chunks = store.ingest("doc", _doc(n))
    covered = set()
    for chunk in chunks:
        covered.update(tokenize(chunk.text))
    assert covered == set(tokenize(_doc(n)))


def test_ingest_rejects_duplicates_and_empty_text():
    store = KnowledgeStore()
    store.ingest("doc", "some words here")
    with pytest.raises(ValidationError):
        store.ingest("doc", "again")
    with pytest.raises(ValidationError):
        store.ingest("other", "   ")


def test_overlap_must_be_smaller_than_chunk_size():
    with pytest.raises(ValidationError):
        KnowledgeStore(chunk_size=10, overlap=10)
    with pytest.raises(ValidationError):
        KnowledgeStore(chunk_size=10, overlap=-1)


# ------------------------------------------------------------------- retrieval


def test_retrieve_finds_matching_chunk_first():
    store = KnowledgeStore(chunk_size=8, overlap=0)
    store.ingest("pets", "cats purr and nap in sunny spots all day long")
    store.ingest("cars", "engines burn fuel and convert heat into motion")
    hits = store.retrieve("engines burn fuel", k=2)
    assert hits[0].doc_id == "cars"


def test_retrieve_caps_at_available_chunks():
    store = KnowledgeStore(chunk_size=8, overlap=0)
    store.ingest("only", "a handful of words")
    assert len(store.retrieve("words", k=10)) == 1


def test_retrieve_on_empty_store_fails():
    with pytest.raises(ValidationError):
        KnowledgeStore().retrieve("q")


def test_retrieve_tie_break_is_by_doc_then_index():
    store = KnowledgeStore(chunk_size=8, overlap=0)
    store.ingest("b-doc", "same exact words")
    store.ingest("a-doc", "same exact words")
    hits = store.retrieve("same exact words", k=2)
    assert [(h.doc_id, h.chunk_index) for h in hits] == [
        ("a-doc", 0),
        ("b-doc", 0),
    ]


# ------------------------------------------------------------------- rendering


def test_schema_line_is_compact_json_without_endpoint():
    schema = ToolSchema(
        name="ner",
        description="named entities",
        parameters=(ToolParameter("text", "input", required=True),),
        endpoint="builtin:ner",
    )
    line = render_schema_line(schema)
    assert line.startswith("{")
    assert "endpoint" not in line
    assert '"name":"ner"' in line


def test_history_line_includes_role():
    assert render_history_line(user_message("hi")) == "user: hi"


# ------------------------------------------------------------- prompt assembly


def _bundle(**overrides) -> PromptBundle:
    defaults = dict(
        system_prompt="sys prompt here",
        current_query="the current question",
        api_schemas=(
            ToolSchema(name="alpha", description="first"),
            ToolSchema(name="beta", description="second"),
        ),
        knowledge=("fact one", "fact two"),
        history=(
            user_message("old question"),
            assistant_message("old answer"),
        ),
        few_shot=("example exchange",),
    )
    defaults.update(overrides)
    return PromptBundle(**defaults)


def test_full_prompt_has_fixed_section_order():
    prompt = build_prompt(_bundle(), budget=10_000)
    positions = [
        prompt.index("sys prompt here"),
        prompt.index(TOOLS_HEADER),
        prompt.index(KNOWLEDGE_HEADER),
        prompt.index(EXAMPLES_HEADER),
        prompt.index(HISTORY_HEADER),
        prompt.index("the current question"),
    ]
    assert positions == sorted(positions)


def test_prompt_always_fits_budget_exactly_at_boundary():
    bundle = PromptBundle(system_prompt="a b c", current_query="d e")
    assert build_prompt(bundle, budget=5) == "a b c\nd e"


def test_prompt_rejects_budget_below_system_plus_query():
    from toolagent.llm import ContextOverflowError

    bundle = PromptBundle(system_prompt="a b c", current_query="d e")
    with pytest.raises(ContextOverflowError):
        build_prompt(bundle, budget=4)


_MARKERS = {
    "few": ("example exchange",),
    "hist": ("old question", "old answer"),
    "know": ("fact one", "fact two"),
    "tools": ('"name":"alpha"', '"name":"beta"'),
}


def test_sections_drop_in_priority_order():
    bundle = _bundle()
    full = build_prompt(bundle, budget=10_000)
    base = count_tokens("sys prompt here") + count_tokens(
        "the current question"
    )
    previous: set[str] | None = None
    # Shrink the budget one token at a time. Items must vanish in the fixed
    # priority order and a smaller budget must never show more content.
    for budget in range(count_tokens(full), base - 1, -1):
        prompt = build_prompt(bundle, budget=budget)
        assert count_tokens(prompt) <= budget
        assert "sys prompt here" in prompt
        assert "the current question" in prompt
        present = {
            marker
            for markers in _MARKERS.values()
            for marker in markers
            if marker in prompt
        }
        if previous is not None:
            assert present <= previous
        previous = present

        def dropped(section: str) -> bool:
            return any(m not in prompt for m in _MARKERS[section])

        def gone(section: str) -> bool:
            return all(m not in prompt for m in _MARKERS[section])

        if dropped("hist"):
            assert gone("few")
        if dropped("know"):
            assert gone("hist") and gone("few")
        if dropped("tools"):
            assert gone("know") and gone("hist") and gone("few")


def test_history_drops_oldest_first():
    bundle = _bundle(
        few_shot=(),
        knowledge=(),
        history=(
            user_message("oldest turn"),
            assistant_message("middle turn"),
            user_message("newest turn"),
        ),
    )
    full = build_prompt(bundle, budget=10_000)
    assert "oldest turn" in full and "newest turn" in full
    tight = build_prompt(bundle, budget=count_tokens(full) - 1)
    assert "oldest turn" not in tight
    assert "newest turn" in tight


def test_few_shot_drops_before_history():
    bundle = _bundle(knowledge=(), api_schemas=())
    full = build_prompt(bundle, budget=10_000)
    tight = build_prompt(bundle, budget=count_tokens(full) - 1)
    assert EXAMPLES_HEADER not in tight
    assert HISTORY_HEADER in tight


def test_schemas_survive_longest():
    bundle = _bundle()
    base = count_tokens("sys prompt here") + count_tokens(
        "the current question"
    )
    schemas_only_budget = base + count_tokens(
        "\n".join(
            [TOOLS_HEADER]
            + [render_schema_line(s) for s in bundle.api_schemas]
        )
    )
    prompt = build_prompt(bundle, budget=schemas_only_budget)
    assert TOOLS_HEADER in prompt
    assert KNOWLEDGE_HEADER not in prompt
    assert HISTORY_HEADER not in prompt
    assert EXAMPLES_HEADER not in prompt


_words = st.lists(
    st.text(alphabet="abcdefg", min_size=1, max_size=5), min_size=1, max_size=8
).map(" ".join)


@settings(max_examples=60)
@given(
    system=_words,
    query=_words,
    knowledge=st.lists(_words, max_size=3),
    history=st.lists(_words, max_size=3),
    few_shot=st.lists(_words, max_size=2),
    slack=st.integers(min_value=0, max_value=60),
)
def test_prompt_fits_any_feasible_budget(
    system, query, knowledge, history, few_shot, slack
):
    bundle = PromptBundle(
        system_prompt=system,
        current_query=query,
        knowledge=tuple(knowledge),
        history=tuple(assistant_message(t) for t in history),
        few_shot=tuple(few_shot),
    )
    budget = count_tokens(system) + count_tokens(query) + slack
    prompt = build_prompt(bundle, budget=budget)
    assert count_tokens(prompt) <= budget
    assert prompt == build_prompt(bundle, budget=budget)


@settings(max_examples=40)
@given(
    knowledge=st.lists(_words, min_size=1, max_size=3),
    history=st.lists(_words, min_size=1, max_size=3),
    extra=st.integers(min_value=0, max_value=30),
)
def test_larger_budget_never_loses_sections(knowledge, history, extra):
    bundle = PromptBundle(
        system_prompt="s",
        current_query="q",
        knowledge=tuple(knowledge),
        history=tuple(assistant_message(t) for t in history),
    )
    small = build_prompt(bundle, budget=2 + extra)
    large = build_prompt(bundle, budget=2 + extra + 5)
    for header in (KNOWLEDGE_HEADER, HISTORY_HEADER):
        if header in small:
            assert header in large
