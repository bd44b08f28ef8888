"""Customizable tool-using agent runtime.

Core pieces: conversation and tool types (:mod:`toolagent.core`),
generation backends (:mod:`toolagent.llm`), tool retrieval and execution
(:mod:`toolagent.toolkit`), document memory and prompt assembly
(:mod:`toolagent.memory`), the agent loop (:mod:`toolagent.executor`),
metrics (:mod:`toolagent.evaluation`), training data preparation
(:mod:`toolagent.trainprep`), and the rated battle arena
(:mod:`toolagent.arena`).
"""

from .core import (
    AgentError,
    ApiRequest,
    ApiResult,
    Conversation,
    Message,
    ToolParameter,
    ToolSchema,
    parse_conversation,
    serialize_conversation,
)
from .executor import Agent, AgentRunRecord, parse_action
from .llm import HttpBackend, LlmConfig, ScriptedBackend, count_tokens
from .memory import KnowledgeStore, PromptBundle, build_prompt
from .toolkit import ToolRegistry, default_registry

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentError",
    "AgentRunRecord",
    "ApiRequest",
    "ApiResult",
    "Conversation",
    "HttpBackend",
    "KnowledgeStore",
    "LlmConfig",
    "Message",
    "PromptBundle",
    "ScriptedBackend",
    "ToolParameter",
    "ToolRegistry",
    "ToolSchema",
    "build_prompt",
    "count_tokens",
    "default_registry",
    "parse_action",
    "parse_conversation",
    "serialize_conversation",
    "__version__",
]
