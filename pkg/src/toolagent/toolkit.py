"""Tool registration, dense retrieval over tool descriptions, and execution.

The registry keeps one embedding per tool, refreshed whenever the tool is
re-registered. Retrieval scores are plain dot products between the query
embedding and the cached tool embeddings, which equal cosine similarity
because all vectors are unit length.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np
import requests

from .core import (
    ApiRequest,
    ApiResult,
    DocumentError,
    ToolParameter,
    ToolSchema,
    ValidationError,
    schema_from_dict,
    schema_to_dict,
)
from .embedding import Embedder, HashEmbedder

ToolHandler = Callable[[Mapping[str, str]], str]


@dataclass(frozen=True)
class RetrievalHit:
    tool_name: str
    score: float


class ToolRegistry:
    """Holds tool schemas, their embeddings, and local handlers.

    ``embed_names=True`` embeds ``"name: description"`` per tool; switch it
    off to index descriptions alone.
    """

    def __init__(
        self,
        embedder: Embedder | None = None,
        handlers: dict[str, ToolHandler] | None = None,
        embed_names: bool = True,
        request_timeout: float = 30.0,
    ):
        self.embedder = embedder or HashEmbedder()
        self.embed_names = embed_names
        self.request_timeout = request_timeout
        self._tools: dict[str, ToolSchema] = {}
        self._vectors: dict[str, np.ndarray] = {}
        self._handlers: dict[str, ToolHandler] = dict(handlers or {})
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._tools)

    def get(self, name: str) -> ToolSchema:
        try:
            return self._tools[name]
        except KeyError:
            raise ValidationError(f"unknown tool {name!r}") from None

    def schemas(self) -> list[ToolSchema]:
        with self._lock:
            return [self._tools[name] for name in sorted(self._tools)]

    def _embed_text(self, schema: ToolSchema) -> str:
        if self.embed_names:
            return f"{schema.name}: {schema.description}"
        return schema.description

    def register_tool(self, schema: ToolSchema) -> None:
        """Add or replace a tool and refresh its cached embedding."""
        with self._lock:
            self._tools[schema.name] = schema
            self._vectors[schema.name] = self.embedder.embed(
                self._embed_text(schema)
            )

    def register_handler(self, name: str, handler: ToolHandler) -> None:
        """Attach a local callable, keyed by tool name."""
        with self._lock:
            self._handlers[name] = handler

    def retrieve_tools(self, query: str, k: int = 3) -> list[RetrievalHit]:
        """Rank tools against the query and return the top ``min(k, n)``.

        Hits are sorted by score descending with ties broken by tool name,
        so the ordering is fully deterministic.
        """
        if k <= 0:
            raise ValidationError("k must be a positive integer")
        if not query.strip():
            raise ValidationError("query must be non-empty")
        with self._lock:
            if not self._tools:
                raise ValidationError("cannot retrieve from an empty registry")
            query_vec = self.embedder.embed(query)
            hits = [
                RetrievalHit(tool_name=name, score=float(np.dot(query_vec, vec)))
                for name, vec in self._vectors.items()
            ]
        hits.sort(key=lambda h: (-h.score, h.tool_name))
        return hits[: min(k, len(hits))]

    def execute_tool(self, request: ApiRequest) -> ApiResult:
        """Run one tool call; failures come back as error results.

        This never raises: unknown tools, missing required arguments, and
        transport problems all map to ``status="error"`` so an agent loop
        can feed the cause back to the model.
        """
        with self._lock:
            schema = self._tools.get(request.api_name)
            handler = self._handlers.get(request.api_name)
        if schema is None:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload=f"unknown tool {request.api_name!r}",
            )
        missing = [
            p.name
            for p in schema.parameters
            if p.required and p.name not in request.arguments
        ]
        if missing:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload="missing required argument(s): " + ", ".join(missing),
            )
        if schema.is_remote:
            return self._execute_remote(schema, request)
        if handler is None:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload=f"no local handler registered for {request.api_name!r}",
            )
        try:
            payload = handler(dict(request.arguments))
        except Exception as exc:  # a broken handler must not kill the loop
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload=f"handler failed: {exc}",
            )
        return ApiResult(api_name=request.api_name, status="success", payload=payload)

    def _execute_remote(self, schema: ToolSchema, request: ApiRequest) -> ApiResult:
        try:
            response = requests.post(
                schema.endpoint,
                json=dict(request.arguments),
                timeout=self.request_timeout,
            )
        except requests.RequestException as exc:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload=f"transport failure: {exc}",
            )
        if response.status_code != 200:
            return ApiResult(
                api_name=request.api_name,
                status="error",
                payload=f"endpoint returned HTTP {response.status_code}",
            )
        return ApiResult(
            api_name=request.api_name, status="success", payload=response.text
        )


# ---------------------------------------------------------------------------
# Manifest files
# ---------------------------------------------------------------------------


def load_tool_manifest(path: str | Path) -> list[ToolSchema]:
    """Read a JSON array of tool schemas from disk."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read manifest: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise DocumentError("manifest must be a JSON array of tool schemas")
    return [schema_from_dict(obj, path=f"tools[{i}]") for i, obj in enumerate(raw)]


def save_tool_manifest(schemas: Iterable[ToolSchema], path: str | Path) -> None:
    text = json.dumps(
        [schema_to_dict(s) for s in schemas], indent=2, ensure_ascii=False
    )
    Path(path).write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Built-in mock tool library
# ---------------------------------------------------------------------------

_BUILTIN_PREFIX = "builtin:"


def _canned(template: str, argument: str) -> ToolHandler:
    def handler(arguments: Mapping[str, str]) -> str:
        return template.format(arguments.get(argument, ""))

    return handler


_BUILTIN_TOOLS: list[tuple[ToolSchema, ToolHandler]] = [
    (
        ToolSchema(
            name="text-to-image",
            description="Generates an image from an English text description.",
            parameters=(
                ToolParameter("text", "what the image should show", required=True),
                ToolParameter("resolution", "output size such as 1024*1024"),
            ),
            endpoint=_BUILTIN_PREFIX + "text-to-image",
        ),
        _canned("image generated for: {}", "text"),
    ),
    (
        ToolSchema(
            name="text-to-video",
            description="Generates a short video clip from an English text description.",
            parameters=(
                ToolParameter("text", "what the video should show", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "text-to-video",
        ),
        _canned("video generated for: {}", "text"),
    ),
    (
        ToolSchema(
            name="text-to-audio",
            description="Reads text aloud and returns synthesized speech audio.",
            parameters=(
                ToolParameter("text", "the text to speak", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "text-to-audio",
        ),
        _canned("audio synthesized for: {}", "text"),
    ),
    (
        ToolSchema(
            name="image-chat",
            description="Answers a question about a provided image.",
            parameters=(
                ToolParameter("image", "URL of the image", required=True),
                ToolParameter("text", "the question about the image", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "image-chat",
        ),
        _canned("the image appears to show: {}", "text"),
    ),
    (
        ToolSchema(
            name="translation-en2zh",
            description="Translates English text into Chinese.",
            parameters=(
                ToolParameter("text", "English source text", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "translation-en2zh",
        ),
        _canned("translation to Chinese of: {}", "text"),
    ),
    (
        ToolSchema(
            name="translation-zh2en",
            description="Translates Chinese text into English.",
            parameters=(
                ToolParameter("text", "Chinese source text", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "translation-zh2en",
        ),
        _canned("translation to English of: {}", "text"),
    ),
    (
        ToolSchema(
            name="ner",
            description="Recognizes named entities mentioned in the given text.",
            parameters=(
                ToolParameter("text", "text to analyze", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "ner",
        ),
        _canned("entities found in: {}", "text"),
    ),
    (
        ToolSchema(
            name="universal-ie",
            description="Extracts structured information from unstructured text.",
            parameters=(
                ToolParameter("text", "text to extract from", required=True),
                ToolParameter("schema", "extraction schema hint"),
            ),
            endpoint=_BUILTIN_PREFIX + "universal-ie",
        ),
        _canned("structured extraction of: {}", "text"),
    ),
    (
        ToolSchema(
            name="text-to-geographic",
            description="Extracts geographic locations and addresses from text.",
            parameters=(
                ToolParameter("text", "text naming places", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "text-to-geographic",
        ),
        _canned("geographic entities in: {}", "text"),
    ),
    (
        ToolSchema(
            name="doc-retrieval",
            description="Retrieves relevant passages from the local document corpus.",
            parameters=(
                ToolParameter("query", "search query", required=True),
            ),
            endpoint=_BUILTIN_PREFIX + "doc-retrieval",
        ),
        _canned("passages matching: {}", "query"),
    ),
]


def builtin_tool_schemas() -> list[ToolSchema]:
    return [schema for schema, _ in _BUILTIN_TOOLS]


def default_registry(
    embedder: Embedder | None = None, embed_names: bool = True
) -> ToolRegistry:
    """Registry preloaded with the built-in mock tools."""
    registry = ToolRegistry(embedder=embedder, embed_names=embed_names)
    for schema, handler in _BUILTIN_TOOLS:
        registry.register_handler(schema.name, handler)
        registry.register_tool(schema)
    return registry
