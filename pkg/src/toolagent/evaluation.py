"""Metrics and test-set evaluation for tool-using agents.

Three scores: exact-match accuracy of predicted tool names, an argument
F1 that grants half credit for naming the right argument with the wrong
value, and an LCS-based overlap score for plain-text answers. The
evaluator aligns gold and predicted conversations by id and walks their
turns positionally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    AgentError,
    ApiRequest,
    Conversation,
    DocumentError,
    ValidationError,
    conversation_to_dict,
    parse_conversation,
)
from .llm import tokenize


class AlignmentError(AgentError):
    """Gold and predicted conversation sets do not line up one-to-one."""


def action_em(gold: ApiRequest, pred: ApiRequest) -> float:
    """1.0 when the predicted tool name matches exactly, else 0.0.

    Comparison is case- and whitespace-sensitive.
    """
    return 1.0 if gold.api_name == pred.api_name else 0.0


def _canonical_value(value: str) -> tuple[str, object]:
    text = value.strip()
    try:
        number = float(text)
    except ValueError:
        return ("str", text)
    if number != number or number in (float("inf"), float("-inf")):
        return ("str", text)
    return ("num", number)


def values_equal(gold: str, pred: str) -> bool:
    """Trimmed comparison; numeric-looking values compare numerically."""
    return _canonical_value(gold) == _canonical_value(pred)


@dataclass(frozen=True)
class ArgMatchCounts:
    """Argument overlap between one gold and one predicted request.

    ``hm`` counts arguments whose name matches but whose value differs;
    ``fm`` counts arguments where both match.
    """

    hm: int
    fm: int
    gold_count: int
    pred_count: int

    def __post_init__(self) -> None:
        if min(self.hm, self.fm, self.gold_count, self.pred_count) < 0:
            raise ValidationError("counts must be non-negative")
        if self.hm + self.fm > min(self.gold_count, self.pred_count):
            raise ValidationError("matches cannot exceed either argument count")


def arg_match_counts(gold: ApiRequest, pred: ApiRequest) -> ArgMatchCounts:
    hm = 0
    fm = 0
    for name, gold_value in gold.arguments.items():
        if name not in pred.arguments:
            continue
        if values_equal(gold_value, pred.arguments[name]):
            fm += 1
        else:
            hm += 1
    return ArgMatchCounts(
        hm=hm,
        fm=fm,
        gold_count=len(gold.arguments),
        pred_count=len(pred.arguments),
    )


def argument_f1(gold: ApiRequest, pred: ApiRequest) -> float:
    """Half credit for right-name-wrong-value, full credit for both right.

    Recall divides by the gold argument count, precision by the predicted
    one. Two empty argument lists score 1.0; predicting arguments against
    an empty gold list (or matching nothing at all) scores 0.0.
    """
    counts = arg_match_counts(gold, pred)
    if counts.gold_count == 0 and counts.pred_count == 0:
        return 1.0
    matched = 0.5 * counts.hm + counts.fm
    if matched == 0:
        return 0.0
    recall = matched / counts.gold_count
    precision = matched / counts.pred_count
    return 2 * recall * precision / (recall + precision)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, standard two-row DP."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b):
            if x == y:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    return previous[len(b)]


def rouge_l(reference: str, hypothesis: str) -> float:
    """LCS-based F-score over tokens, in [0, 1]; 0 when either side is empty."""
    ref = tokenize(reference)
    hyp = tokenize(hypothesis)
    if not ref or not hyp:
        return 0.0
    lcs = lcs_length(ref, hyp)
    if lcs == 0:
        return 0.0
    recall = lcs / len(ref)
    precision = lcs / len(hyp)
    return 2 * recall * precision / (recall + precision)


@dataclass(frozen=True)
class ConversationScore:
    """Per-conversation breakdown; metric fields are None when that
    conversation contributed no turns of the kind."""

    conversation_id: str
    action_em: float | None
    argument_f1: float | None
    rouge_l: float | None
    request_turns: int
    text_turns: int
    missing_turns: int
    extra_pred_requests: int

    def to_dict(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "action_em": self.action_em,
            "argument_f1": self.argument_f1,
            "rouge_l": self.rouge_l,
            "request_turns": self.request_turns,
            "text_turns": self.text_turns,
            "missing_turns": self.missing_turns,
            "extra_pred_requests": self.extra_pred_requests,
        }


@dataclass(frozen=True)
class EvalReport:
    """Aggregate percentages in [0, 100] plus the per-conversation detail."""

    action_em: float
    argument_f1: float
    rouge_l: float
    breakdown: tuple[ConversationScore, ...]

    def to_dict(self) -> dict:
        return {
            "action_em": self.action_em,
            "argument_f1": self.argument_f1,
            "rouge_l": self.rouge_l,
            "breakdown": [score.to_dict() for score in self.breakdown],
        }


def _mean_pct(scores: list[float]) -> float:
    if not scores:
        return 0.0
    return 100.0 * sum(scores) / len(scores)


def _mean_or_none(scores: list[float]) -> float | None:
    if not scores:
        return None
    return sum(scores) / len(scores)


def evaluate(
    gold: Sequence[Conversation],
    predictions: Sequence[Conversation],
    micro_f1: bool = False,
) -> EvalReport:
    """Score predictions against an annotated test set.

    Conversations pair up by id (exactly one prediction per gold
    conversation). Gold assistant turns carrying a request are scored with
    action EM and argument F1 against the predicted assistant turn at the
    same message index; gold plain-text assistant turns are scored with
    the LCS overlap. A missing or mismatched predicted turn scores 0.
    Aggregates are unweighted means over scored turns, times 100; with
    ``micro_f1=True`` the argument counts are pooled across all requests
    before the F1 formula is applied once.
    """
    gold_ids = [conv.id for conv in gold]
    if len(set(gold_ids)) != len(gold_ids):
        raise AlignmentError("duplicate conversation ids in the gold set")
    pred_by_id: dict[str, Conversation] = {}
    for conv in predictions:
        if conv.id in pred_by_id:
            raise AlignmentError(f"duplicate prediction for id {conv.id!r}")
        pred_by_id[conv.id] = conv
    missing_ids = [cid for cid in gold_ids if cid not in pred_by_id]
    if missing_ids:
        raise AlignmentError(f"no prediction for conversation(s): {missing_ids}")
    extra_ids = [cid for cid in pred_by_id if cid not in set(gold_ids)]
    if extra_ids:
        raise AlignmentError(f"prediction(s) without gold: {extra_ids}")

    em_scores: list[float] = []
    f1_scores: list[float] = []
    rouge_scores: list[float] = []
    pooled = {"hm": 0, "fm": 0, "gold": 0, "pred": 0}
    breakdown: list[ConversationScore] = []

    for conv in gold:
        pred = pred_by_id[conv.id]
        conv_em: list[float] = []
        conv_f1: list[float] = []
        conv_rouge: list[float] = []
        missing_turns = 0
        for index, gold_msg in enumerate(conv.messages):
            if gold_msg.role != "assistant":
                continue
            pred_msg = (
                pred.messages[index] if index < len(pred.messages) else None
            )
            aligned = pred_msg is not None and pred_msg.role == "assistant"
            if gold_msg.request is not None:
                if aligned and pred_msg.request is not None:
                    conv_em.append(action_em(gold_msg.request, pred_msg.request))
                    conv_f1.append(
                        argument_f1(gold_msg.request, pred_msg.request)
                    )
                    counts = arg_match_counts(gold_msg.request, pred_msg.request)
                    pooled["hm"] += counts.hm
                    pooled["fm"] += counts.fm
                    pooled["gold"] += counts.gold_count
                    pooled["pred"] += counts.pred_count
                else:
                    missing_turns += 1
                    conv_em.append(0.0)
                    conv_f1.append(0.0)
                    pooled["gold"] += len(gold_msg.request.arguments)
            else:
                if aligned:
                    conv_rouge.append(rouge_l(gold_msg.content, pred_msg.content))
                else:
                    missing_turns += 1
                    conv_rouge.append(0.0)
        extra_requests = sum(
            1
            for index, msg in enumerate(pred.messages)
            if msg.role == "assistant"
            and msg.request is not None
            and (
                index >= len(conv.messages)
                or conv.messages[index].role != "assistant"
                or conv.messages[index].request is None
            )
        )
        breakdown.append(
            ConversationScore(
                conversation_id=conv.id,
                action_em=_mean_or_none(conv_em),
                argument_f1=_mean_or_none(conv_f1),
                rouge_l=_mean_or_none(conv_rouge),
                request_turns=len(conv_em),
                text_turns=len(conv_rouge),
                missing_turns=missing_turns,
                extra_pred_requests=extra_requests,
            )
        )
        em_scores.extend(conv_em)
        f1_scores.extend(conv_f1)
        rouge_scores.extend(conv_rouge)

    if micro_f1:
        if pooled["gold"] == 0 and pooled["pred"] == 0:
            f1_pct = 100.0 if em_scores else 0.0
        else:
            matched = 0.5 * pooled["hm"] + pooled["fm"]
            if matched == 0:
                f1_pct = 0.0
            else:
                recall = matched / pooled["gold"]
                precision = matched / pooled["pred"]
                f1_pct = 100.0 * 2 * recall * precision / (recall + precision)
    else:
        f1_pct = _mean_pct(f1_scores)

    return EvalReport(
        action_em=_mean_pct(em_scores),
        argument_f1=f1_pct,
        rouge_l=_mean_pct(rouge_scores),
        breakdown=tuple(breakdown),
    )


# ---------------------------------------------------------------------------
# Test-set files: one conversation per JSONL line
# ---------------------------------------------------------------------------


def load_conversations_jsonl(path: str | Path) -> list[Conversation]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read conversations: {exc}") from exc
    conversations = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            conversations.append(parse_conversation(line))
        except AgentError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from exc
    return conversations


def save_conversations_jsonl(
    conversations: Iterable[Conversation], path: str | Path
) -> None:
    lines = [
        json.dumps(
            conversation_to_dict(conv),
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        for conv in conversations
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
