"""HTTP service exposing battles, voting, the leaderboard, and chat.

All rating math lives in :mod:`toolagent.arena`; clients only see the
JSON endpoints below. Writes to the rating table are serialized through a
single lock, so concurrent votes on different battles apply one at a time.
"""

from __future__ import annotations

import random
import threading
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .arena import (
    ArenaAgent,
    Battle,
    RatingTable,
    append_battle_log,
    leaderboard,
    record_battle,
    start_battle,
)
from .core import AgentError, Message, message_to_dict
from .executor import Agent, AgentRunRecord


class BattleRequest(BaseModel):
    instruction: str


class VoteRequest(BaseModel):
    outcome: str


class ChatRequest(BaseModel):
    session_id: str
    message: str


_VOTE_TO_OUTCOME = {"a": "a_wins", "b": "b_wins", "tie": "tie"}


def _trace_payload(record: AgentRunRecord) -> dict:
    return {
        "messages": [
            message_to_dict(m) for m in record.conversation.messages
        ],
        "answer": record.final_answer(),
        "steps_taken": record.steps_taken,
        "terminated_by": record.terminated_by,
    }


def create_app(
    pool: Sequence[ArenaAgent],
    chat_agent: Agent | None = None,
    table: RatingTable | None = None,
    log_path: str | Path | None = None,
    seed: int | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service around an agent pool.

    ``chat_agent`` defaults to the first pool agent. When ``log_path`` is
    set, every decided battle is appended there.
    """
    pool = list(pool)
    if len(pool) < 2:
        raise AgentError("the arena needs at least two agents")
    chat = chat_agent or pool[0].agent
    state_table = table if table is not None else RatingTable()
    rng = random.Random(seed)
    battles: dict[str, Battle] = {}
    sessions: dict[str, tuple[Message, ...]] = {}
    lock = threading.Lock()
    counter = {"next": 1}

    app = FastAPI(title="agent arena")
    # The web frontend may be served by any static host, so the JSON API
    # must answer cross-origin requests.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/api/battles")
    def create_battle(body: BattleRequest) -> dict:
        if not body.instruction.strip():
            raise HTTPException(status_code=400, detail="instruction is empty")
        with lock:
            battle_id = f"battle-{counter['next']:06d}"
            counter["next"] += 1
        battle = start_battle(
            pool, body.instruction, rng=rng, battle_id=battle_id
        )
        with lock:
            battles[battle.battle_id] = battle
        return {
            "battle_id": battle.battle_id,
            "response_a": _trace_payload(battle.trace_a),
            "response_b": _trace_payload(battle.trace_b),
        }

    @app.post("/api/battles/{battle_id}/vote")
    def vote(battle_id: str, body: VoteRequest) -> dict:
        outcome = _VOTE_TO_OUTCOME.get(body.outcome)
        if outcome is None:
            raise HTTPException(
                status_code=400, detail="outcome must be 'a', 'b', or 'tie'"
            )
        with lock:
            battle = battles.get(battle_id)
            if battle is None:
                raise HTTPException(status_code=404, detail="unknown battle")
            if battle.outcome != "pending":
                raise HTTPException(
                    status_code=409, detail="battle already decided"
                )
            record_battle(state_table, battle, outcome)
            if log_path is not None:
                append_battle_log(log_path, battle)
            return {
                "revealed": {"a": battle.agent_a, "b": battle.agent_b},
                "new_ratings": {
                    battle.agent_a: state_table.rating(battle.agent_a),
                    battle.agent_b: state_table.rating(battle.agent_b),
                },
            }

    @app.get("/api/leaderboard")
    def get_leaderboard() -> list[dict]:
        with lock:
            rows = leaderboard(state_table)
        return [
            {"agent_id": row.agent_id, "rating": row.rating, "games": row.games}
            for row in rows
        ]

    @app.get("/api/agents")
    def get_agents() -> list[dict]:
        return [{"agent_id": entry.agent_id} for entry in pool]

    @app.post("/api/chat")
    def chat_turn(body: ChatRequest) -> dict:
        if not body.session_id:
            raise HTTPException(status_code=400, detail="session_id is empty")
        if not body.message.strip():
            raise HTTPException(status_code=400, detail="message is empty")
        with lock:
            history = sessions.get(body.session_id, ())
        try:
            record = chat.run(
                body.message,
                history=history,
                conversation_id=body.session_id,
            )
        except AgentError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        with lock:
            sessions[body.session_id] = record.conversation.messages
        return {
            "session_id": body.session_id,
            "reply": record.final_answer(),
            "messages": [
                message_to_dict(m) for m in record.conversation.messages
            ],
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True))

    return app
