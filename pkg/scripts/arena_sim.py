"""Simulate arena battles between the bundled scripted agents.

Runs seeded battles with random votes, appends them to a replayable
log, and prints the resulting leaderboard:

    python3 scripts/arena_sim.py --battles 20 --seed 7
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

from toolagent.arena import (
    RatingTable,
    append_battle_log,
    leaderboard,
    record_battle,
    replay_battle_log,
    start_battle,
)
from toolagent.cli import load_arena_pool

POOL_PATH = Path(__file__).resolve().parents[1] / "data" / "arena_pool.json"

INSTRUCTIONS = [
    "Draw a logo image of agent",
    "Show me a mountain at dawn",
    "Describe a quiet library",
    "Paint a fox in the snow",
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--battles", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pool", default=str(POOL_PATH))
    parser.add_argument("--log", default="arena_battles.jsonl")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    pool = load_arena_pool(args.pool)
    table = RatingTable()
    log_path = Path(args.log)
    for _ in range(args.battles):
        battle = start_battle(pool, rng.choice(INSTRUCTIONS), rng=rng)
        outcome = rng.choice(["a_wins", "b_wins", "tie"])
        record_battle(table, battle, outcome)
        append_battle_log(log_path, battle)

    replayed = replay_battle_log(log_path)
    assert replayed.ratings == table.ratings, "log replay diverged"

    print(f"{args.battles} battles appended to {log_path}")
    for row in leaderboard(table):
        print(f"{row.agent_id:12s} rating={row.rating:8.2f} games={row.games}")


if __name__ == "__main__":
    main()
