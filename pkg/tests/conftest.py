"""Shared fixtures: local mock servers and conversation builders."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer
from typing import Callable

import pytest

from toolagent.core import (
    ApiRequest,
    ApiResult,
    Conversation,
    assistant_message,
    tool_message,
    user_message,
)
from toolagent.executor import format_action

_SUITE_START = time.monotonic()


class _MockServer:
    """http.server wrapper running on a daemon thread, port chosen by the OS."""

    def __init__(self, handler_cls: type[BaseHTTPRequestHandler]):
        self.httpd = HTTPServer(("127.0.0.1", 0), handler_cls)
        self.httpd.mock = self  # type: ignore[attr-defined]
        self.thread = threading.Thread(
            target=self.httpd.serve_forever, daemon=True
        )
        self.requests: list[dict] = []
        self.fail_next = 0
        self.status_next = 0

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "_MockServer":
        self.thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


class MockLlmServer(_MockServer):
    """POST /generate {"prompt", ...} -> {"text": reply_fn(prompt)}."""

    def __init__(self):
        super().__init__(_LlmHandler)
        self.reply_fn: Callable[[str], str] = lambda prompt: "mock reply"


class _LlmHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        mock: MockLlmServer = self.server.mock  # type: ignore[attr-defined]
        if mock.fail_next > 0:
            mock.fail_next -= 1
            self.connection.close()
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        mock.requests.append({"path": self.path, "body": body})
        if mock.status_next:
            status, mock.status_next = mock.status_next, 0
            self.send_response(status)
            self.end_headers()
            return
        if self.path != "/generate":
            self.send_response(404)
            self.end_headers()
            return
        payload = json.dumps(
            {"text": mock.reply_fn(body.get("prompt", ""))}
        ).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class MockToolServer(_MockServer):
    """POST /tools/{name} with JSON arguments -> plain-text payload."""

    def __init__(self):
        super().__init__(_ToolHandler)
        self.handlers: dict[str, Callable[[dict], str]] = {}
        self.default = lambda name, args: f"served {name} with {len(args)} arg(s)"


class _ToolHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        mock: MockToolServer = self.server.mock  # type: ignore[attr-defined]
        if mock.fail_next > 0:
            mock.fail_next -= 1
            self.connection.close()
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        mock.requests.append({"path": self.path, "body": body})
        if not self.path.startswith("/tools/"):
            self.send_response(404)
            self.end_headers()
            return
        name = self.path[len("/tools/") :]
        handler = mock.handlers.get(name)
        text = handler(body) if handler else mock.default(name, body)
        payload = text.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture
def mock_llm_server():
    server = MockLlmServer().start()
    yield server
    server.stop()


@pytest.fixture
def mock_tool_server():
    server = MockToolServer().start()
    yield server
    server.stop()


def call_conversation(
    conv_id: str,
    query: str,
    requests_and_payloads: list[tuple[ApiRequest, str]],
    final: str,
) -> Conversation:
    """A conversation with one user turn, N tool calls, and a final answer."""
    messages = [user_message(query)]
    for request, payload in requests_and_payloads:
        messages.append(
            assistant_message(format_action(request), request=request)
        )
        messages.append(
            tool_message(
                payload,
                result=ApiResult(
                    api_name=request.api_name, status="success", payload=payload
                ),
            )
        )
    messages.append(assistant_message(final))
    return Conversation(id=conv_id, messages=tuple(messages))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.monotonic() - _SUITE_START
    verdict = "PASS" if elapsed < 60.0 else "FAIL"
    terminalreporter.write_line(
        f"[acceptance] full suite wall clock {elapsed:.1f}s "
        f"(budget 60s): {verdict}"
    )
