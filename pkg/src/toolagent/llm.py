"""Text generation backends and the shared token counting rules.

The token counter treats whitespace-separated runs of non-CJK characters
as single tokens and every CJK code point as its own token. All budget
arithmetic in the library goes through :func:`count_tokens` so prompt
assembly, chunking, and the metrics agree on lengths.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Sequence

import requests

from .core import AgentError, ValidationError

# Inclusive code point ranges treated as CJK: radicals and punctuation,
# kana, CJK ideographs (with extension A), hangul syllables, compatibility
# ideographs, fullwidth forms, and the supplementary ideograph planes.
_CJK_RANGES = (
    (0x2E80, 0x9FFF),
    (0xAC00, 0xD7AF),
    (0xF900, 0xFAFF),
    (0xFF00, 0xFFEF),
    (0x20000, 0x2FA1F),
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    """Split text into tokens: whitespace-delimited words, CJK per character."""
    tokens: list[str] = []
    word: list[str] = []
    for ch in text:
        if ch.isspace():
            if word:
                tokens.append("".join(word))
                word = []
        elif _is_cjk(ch):
            if word:
                tokens.append("".join(word))
                word = []
            tokens.append(ch)
        else:
            word.append(ch)
    if word:
        tokens.append("".join(word))
    return tokens


def count_tokens(text: str) -> int:
    return len(tokenize(text))


class ScriptExhaustedError(AgentError):
    """A scripted backend ran out of prepared replies."""


class ContextOverflowError(AgentError):
    """The prompt left no room for the configured completion length."""


class TransportError(AgentError):
    """A remote backend could not produce a usable response."""


@dataclass(frozen=True)
class LlmConfig:
    """Generation settings shared by all backends.

    ``max_context_tokens`` must exceed ``max_new_tokens``; the difference
    is the prompt budget enforced by :meth:`LlmBackend.generate`.
    """

    model_name: str = "scripted"
    endpoint: str | None = None
    max_context_tokens: int = 4096
    temperature: float = 0.0
    max_new_tokens: int = 512

    def __post_init__(self) -> None:
        if self.max_context_tokens <= 0 or self.max_new_tokens <= 0:
            raise ValidationError("token limits must be positive")
        if self.max_context_tokens <= self.max_new_tokens:
            raise ValidationError(
                "max_context_tokens must exceed max_new_tokens"
            )
        if self.temperature < 0:
            raise ValidationError("temperature must be non-negative")

    @property
    def prompt_budget(self) -> int:
        return self.max_context_tokens - self.max_new_tokens


class LlmBackend:
    """Interface for completion backends.

    Subclasses implement ``_complete``; ``generate`` wraps it with the
    context budget check.
    """

    def __init__(self, config: LlmConfig | None = None):
        self.config = config or LlmConfig()

    def generate(self, prompt: str) -> str:
        used = count_tokens(prompt)
        if used > self.config.prompt_budget:
            raise ContextOverflowError(
                f"prompt is {used} tokens but the budget is "
                f"{self.config.prompt_budget}"
            )
        return self._complete(prompt)

    def _complete(self, prompt: str) -> str:
        raise NotImplementedError


class ScriptedBackend(LlmBackend):
    """Replays a fixed list of outputs in order, ignoring the prompt.

    The cursor advance is atomic, so concurrent callers each consume a
    distinct entry. With ``cycle=True`` the script wraps around instead of
    exhausting, which keeps long-lived demo agents alive.
    """

    def __init__(
        self,
        script: Sequence[str],
        config: LlmConfig | None = None,
        cycle: bool = False,
    ):
        super().__init__(config)
        self.script = tuple(script)
        self.cycle = cycle
        self._cursor = 0
        self._lock = threading.Lock()

    def _complete(self, prompt: str) -> str:
        with self._lock:
            if self._cursor >= len(self.script):
                if not self.cycle or not self.script:
                    raise ScriptExhaustedError(
                        f"script exhausted after {len(self.script)} replies"
                    )
                self._cursor = 0
            reply = self.script[self._cursor]
            self._cursor += 1
        return reply

    @property
    def consumed(self) -> int:
        with self._lock:
            return self._cursor


class HttpBackend(LlmBackend):
    """Calls a completion server over HTTP.

    Transport failures (connection errors, timeouts) are retried with
    exponential backoff; HTTP error statuses and malformed bodies are not.
    """

    def __init__(
        self,
        url: str,
        config: LlmConfig | None = None,
        max_retries: int = 2,
        backoff: float = 0.5,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        super().__init__(config)
        self.url = url
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = session or requests.Session()

    def _complete(self, prompt: str) -> str:
        body = {
            "prompt": prompt,
            "max_new_tokens": self.config.max_new_tokens,
            "temperature": self.config.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = self._session.post(
                    self.url, json=body, timeout=self.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                continue
            if response.status_code != 200:
                raise TransportError(
                    f"backend returned HTTP {response.status_code}"
                )
            try:
                text = response.json().get("text")
            except ValueError as exc:
                raise TransportError("backend sent a non-JSON body") from exc
            if not isinstance(text, str):
                raise TransportError("backend response lacks a 'text' field")
            return text
        raise TransportError(
            f"backend unreachable after {self.max_retries + 1} attempts: "
            f"{last_error}"
        )
