"""Anonymous head-to-head battles with Elo ratings.

Two agents from a pool answer the same instruction; a human votes without
knowing which trace came from which agent, and the vote moves both Elo
ratings. Every decided battle is appended to a JSONL log, and replaying
the log from scratch reproduces the rating table exactly.
"""

from __future__ import annotations

import json
import random
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import (
    AgentError,
    Conversation,
    DocumentError,
    ValidationError,
    assistant_message,
    user_message,
)
from .executor import Agent, AgentRunRecord

OUTCOMES = ("a_wins", "b_wins", "tie")

_SCORE = {"a_wins": 1.0, "tie": 0.5, "b_wins": 0.0}


class ArenaError(AgentError):
    """Battle bookkeeping violation, e.g. voting twice."""


@dataclass
class RatingTable:
    """Elo ratings and game counts per agent id.

    Agents enter at ``initial_rating`` on their first recorded battle.
    """

    initial_rating: float = 1000.0
    k_factor: float = 32.0
    ratings: dict[str, float] = field(default_factory=dict)
    games: dict[str, int] = field(default_factory=dict)

    def rating(self, agent_id: str) -> float:
        return self.ratings.get(agent_id, self.initial_rating)

    def update(self, agent_a: str, agent_b: str, outcome: str) -> None:
        """Apply one battle outcome to both ratings.

        The rating change is computed once and applied with opposite
        signs, so the rating sum is conserved exactly.
        """
        if agent_a == agent_b:
            raise ArenaError("a battle needs two distinct agents")
        if outcome not in OUTCOMES:
            raise ArenaError(f"unknown outcome {outcome!r}")
        rating_a = self.rating(agent_a)
        rating_b = self.rating(agent_b)
        expected_a = expected_score(rating_a, rating_b)
        delta = self.k_factor * (_SCORE[outcome] - expected_a)
        self.ratings[agent_a] = rating_a + delta
        self.ratings[agent_b] = rating_b - delta
        self.games[agent_a] = self.games.get(agent_a, 0) + 1
        self.games[agent_b] = self.games.get(agent_b, 0) + 1


def expected_score(rating_a: float, rating_b: float) -> float:
    """Probability the first player wins under the Elo model."""
    return 1.0 / (1.0 + 10.0 ** ((rating_b - rating_a) / 400.0))


@dataclass(frozen=True)
class LeaderboardRow:
    agent_id: str
    rating: float
    games: int


def leaderboard(table: RatingTable) -> list[LeaderboardRow]:
    """Rows sorted by rating descending, ties by agent id ascending."""
    rows = [
        LeaderboardRow(
            agent_id=agent_id,
            rating=rating,
            games=table.games.get(agent_id, 0),
        )
        for agent_id, rating in table.ratings.items()
    ]
    rows.sort(key=lambda row: (-row.rating, row.agent_id))
    return rows


@dataclass
class Battle:
    """One anonymous comparison. ``outcome`` moves from pending to one of
    a_wins, b_wins, or tie exactly once."""

    battle_id: str
    agent_a: str
    agent_b: str
    instruction: str
    trace_a: AgentRunRecord
    trace_b: AgentRunRecord
    outcome: str = "pending"


@dataclass(frozen=True)
class ArenaAgent:
    agent_id: str
    agent: Agent


def _safe_run(entry: ArenaAgent, instruction: str, battle_id: str) -> AgentRunRecord:
    try:
        return entry.agent.run(
            instruction, conversation_id=f"{battle_id}-{entry.agent_id}"
        )
    except Exception as exc:  # an errored trace must still be votable
        conversation = Conversation(
            id=f"{battle_id}-{entry.agent_id}",
            messages=(
                user_message(instruction),
                assistant_message(f"[agent failed to respond: {exc}]"),
            ),
        )
        return AgentRunRecord(
            conversation=conversation, steps_taken=0, terminated_by="final_answer"
        )


def start_battle(
    pool: Sequence[ArenaAgent],
    instruction: str,
    rng: random.Random | None = None,
    battle_id: str | None = None,
) -> Battle:
    """Pick two distinct agents uniformly at random and run both."""
    if len(pool) < 2:
        raise ArenaError("the agent pool needs at least two agents")
    if not instruction:
        raise ValidationError("instruction must be non-empty")
    rng = rng or random.Random()
    entry_a, entry_b = rng.sample(list(pool), 2)
    battle_id = battle_id or f"battle-{uuid.uuid4().hex[:12]}"
    return Battle(
        battle_id=battle_id,
        agent_a=entry_a.agent_id,
        agent_b=entry_b.agent_id,
        instruction=instruction,
        trace_a=_safe_run(entry_a, instruction, battle_id),
        trace_b=_safe_run(entry_b, instruction, battle_id),
    )


def record_battle(table: RatingTable, battle: Battle, outcome: str) -> None:
    """Decide a pending battle and update the ratings.

    A second vote on the same battle is rejected.
    """
    if battle.outcome != "pending":
        raise ArenaError(
            f"battle {battle.battle_id} already decided as {battle.outcome}"
        )
    if outcome not in OUTCOMES:
        raise ArenaError(f"unknown outcome {outcome!r}")
    table.update(battle.agent_a, battle.agent_b, outcome)
    battle.outcome = outcome


# ---------------------------------------------------------------------------
# Persistence: append-only battle log plus rating snapshots
# ---------------------------------------------------------------------------


def append_battle_log(path: str | Path, battle: Battle) -> None:
    """Append one decided battle to the JSONL log."""
    if battle.outcome == "pending":
        raise ArenaError("only decided battles are logged")
    entry = {
        "battle_id": battle.battle_id,
        "agent_a": battle.agent_a,
        "agent_b": battle.agent_b,
        "instruction": battle.instruction,
        "outcome": battle.outcome,
    }
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")


def replay_battle_log(
    path: str | Path, initial_rating: float = 1000.0, k_factor: float = 32.0
) -> RatingTable:
    """Rebuild a rating table by folding the log in order.

    The fold applies the same arithmetic as live voting, so the replayed
    table matches the live one bit for bit.
    """
    table = RatingTable(initial_rating=initial_rating, k_factor=k_factor)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read battle log: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"battle log line {lineno}: {exc}") from exc
        for key in ("agent_a", "agent_b", "outcome"):
            if not isinstance(entry.get(key), str):
                raise DocumentError(
                    f"battle log line {lineno}: missing field {key!r}"
                )
        table.update(entry["agent_a"], entry["agent_b"], entry["outcome"])
    return table


def save_ratings(table: RatingTable, path: str | Path) -> None:
    snapshot = {
        "initial_rating": table.initial_rating,
        "k_factor": table.k_factor,
        "ratings": table.ratings,
        "games": table.games,
    }
    Path(path).write_text(
        json.dumps(snapshot, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_ratings(path: str | Path) -> RatingTable:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DocumentError(f"cannot read ratings snapshot: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"ratings snapshot is not valid JSON: {exc}") from exc
    return RatingTable(
        initial_rating=float(obj.get("initial_rating", 1000.0)),
        k_factor=float(obj.get("k_factor", 32.0)),
        ratings={str(k): float(v) for k, v in obj.get("ratings", {}).items()},
        games={str(k): int(v) for k, v in obj.get("games", {}).items()},
    )
