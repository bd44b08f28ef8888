"""Document memory and budgeted prompt assembly.

Documents are chunked by token count with a fixed overlap and embedded for
dense retrieval. :func:`build_prompt` renders the prompt sections in a fixed
order and, when the token budget is tight, drops content in a fixed priority
order so the result is always within budget and bit-deterministic.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .core import Message, ToolSchema, ValidationError
from .embedding import Embedder, HashEmbedder
from .llm import ContextOverflowError, count_tokens, tokenize

TOOLS_HEADER = "# TOOLS"
KNOWLEDGE_HEADER = "# KNOWLEDGE"
EXAMPLES_HEADER = "# EXAMPLES"
HISTORY_HEADER = "# HISTORY"


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    chunk_index: int
    text: str


class KnowledgeStore:
    """Chunked, embedded document storage with dense retrieval.

    Chunks are ``chunk_size`` tokens long and consecutive chunks share
    ``overlap`` tokens, so chunk starts advance by ``chunk_size - overlap``.
    A document no longer than ``chunk_size`` stays a single chunk.
    """

    def __init__(
        self,
        embedder: Embedder | None = None,
        chunk_size: int = 256,
        overlap: int = 32,
    ):
        if chunk_size <= 0:
            raise ValidationError("chunk_size must be positive")
        if not 0 <= overlap < chunk_size:
            raise ValidationError("overlap must satisfy 0 <= overlap < chunk_size")
        self.embedder = embedder or HashEmbedder()
        self.chunk_size = chunk_size
        self.overlap = overlap
        self._chunks: list[Chunk] = []
        self._vectors: list[np.ndarray] = []
        self._doc_ids: set[str] = set()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._chunks)

    def chunks(self) -> list[Chunk]:
        with self._lock:
            return list(self._chunks)

    def ingest(self, doc_id: str, text: str) -> list[Chunk]:
        """Chunk and index one document; returns the chunks created."""
        if not doc_id:
            raise ValidationError("doc_id must be non-empty")
        tokens = tokenize(text)
        if not tokens:
            raise ValidationError(f"document {doc_id!r} has no content")
        with self._lock:
            if doc_id in self._doc_ids:
                raise ValidationError(f"document {doc_id!r} already ingested")
            created: list[Chunk] = []
            if len(tokens) <= self.chunk_size:
                starts = [0]
            else:
                stride = self.chunk_size - self.overlap
                starts = list(range(0, len(tokens), stride))
            for index, start in enumerate(starts):
                piece = " ".join(tokens[start : start + self.chunk_size])
                chunk = Chunk(doc_id=doc_id, chunk_index=index, text=piece)
                created.append(chunk)
                self._chunks.append(chunk)
                self._vectors.append(self.embedder.embed(piece))
            self._doc_ids.add(doc_id)
            return created

    def retrieve(self, query: str, k: int = 3) -> list[Chunk]:
        """Top-k chunks by dot product, deterministically ordered.

        Ties are broken by (doc_id, chunk_index). Asking for more chunks
        than exist returns everything, ranked.
        """
        if k <= 0:
            raise ValidationError("k must be a positive integer")
        with self._lock:
            if not self._chunks:
                raise ValidationError("cannot retrieve from an empty store")
            query_vec = self.embedder.embed(query)
            scored = [
                (float(np.dot(query_vec, vec)), chunk)
                for chunk, vec in zip(self._chunks, self._vectors)
            ]
        scored.sort(key=lambda sc: (-sc[0], sc[1].doc_id, sc[1].chunk_index))
        return [chunk for _, chunk in scored[: min(k, len(scored))]]


@dataclass(frozen=True)
class PromptBundle:
    """Everything that can go into one prompt, in ranked order.

    ``knowledge`` and ``api_schemas`` are expected best-first; the lowest
    ranked entries are sacrificed first when the budget is tight.
    """

    system_prompt: str
    current_query: str
    api_schemas: tuple[ToolSchema, ...] = ()
    knowledge: tuple[str, ...] = ()
    history: tuple[Message, ...] = ()
    few_shot: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.current_query:
            raise ValidationError("current_query must be non-empty")
        object.__setattr__(self, "api_schemas", tuple(self.api_schemas))
        object.__setattr__(self, "knowledge", tuple(self.knowledge))
        object.__setattr__(self, "history", tuple(self.history))
        object.__setattr__(self, "few_shot", tuple(self.few_shot))


def render_schema_line(schema: ToolSchema) -> str:
    """One tool as a compact JSON line for the prompt."""
    return json.dumps(
        {
            "name": schema.name,
            "description": schema.description,
            "parameters": [
                {
                    "name": p.name,
                    "description": p.description,
                    "required": p.required,
                }
                for p in schema.parameters
            ],
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def render_history_line(message: Message) -> str:
    return f"{message.role}: {message.content}"


@dataclass
class _Section:
    header: str | None
    items: list[str] = field(default_factory=list)
    kept: list[bool] = field(default_factory=list)

    def cost(self) -> int:
        live = [item for item, keep in zip(self.items, self.kept) if keep]
        if not live:
            return 0
        total = sum(count_tokens(item) for item in live)
        if self.header is not None:
            total += count_tokens(self.header)
        return total

    def render(self) -> str | None:
        live = [item for item, keep in zip(self.items, self.kept) if keep]
        if not live:
            return None
        if self.header is not None:
            return "\n".join([self.header, *live])
        return "\n".join(live)


def build_prompt(bundle: PromptBundle, budget: int) -> str:
    """Assemble the prompt within ``budget`` tokens.

    Section order is fixed: system prompt, tool schemas, knowledge,
    few-shot examples, history, current query. When the total runs over
    budget, content is dropped one item at a time in this priority order:
    few-shot examples (last first), oldest history messages, lowest-ranked
    knowledge, lowest-ranked tool schemas. The system prompt and the query
    are never dropped; if they alone exceed the budget that is an error.

    The output token count never exceeds ``budget``, and a larger budget
    never drops an item a smaller budget kept.
    """
    if budget <= 0:
        raise ValidationError("budget must be positive")
    base = count_tokens(bundle.system_prompt) + count_tokens(bundle.current_query)
    if base > budget:
        raise ContextOverflowError(
            f"system prompt and query need {base} tokens, budget is {budget}"
        )

    tools = _Section(
        TOOLS_HEADER, [render_schema_line(s) for s in bundle.api_schemas]
    )
    knowledge = _Section(KNOWLEDGE_HEADER, list(bundle.knowledge))
    few_shot = _Section(EXAMPLES_HEADER, list(bundle.few_shot))
    history = _Section(
        HISTORY_HEADER, [render_history_line(m) for m in bundle.history]
    )
    for section in (tools, knowledge, few_shot, history):
        section.kept = [True] * len(section.items)

    # Drop sequence: position (section, item index) pairs in sacrifice order.
    drop_order: list[tuple[_Section, int]] = []
    drop_order += [(few_shot, i) for i in reversed(range(len(few_shot.items)))]
    drop_order += [(history, i) for i in range(len(history.items))]
    drop_order += [(knowledge, i) for i in reversed(range(len(knowledge.items)))]
    drop_order += [(tools, i) for i in reversed(range(len(tools.items)))]

    def total() -> int:
        return base + sum(
            s.cost() for s in (tools, knowledge, few_shot, history)
        )

    for section, index in drop_order:
        if total() <= budget:
            break
        section.kept[index] = False

    blocks: list[str] = []
    if bundle.system_prompt:
        blocks.append(bundle.system_prompt)
    for section in (tools, knowledge, few_shot, history):
        rendered = section.render()
        if rendered is not None:
            blocks.append(rendered)
    blocks.append(bundle.current_query)
    return "\n".join(blocks)
