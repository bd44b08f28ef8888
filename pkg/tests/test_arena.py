"""Pairwise ratings: update math, battles, logs, and leaderboards."""

from __future__ import annotations

import math
import random

import pytest

from toolagent.arena import (
    ArenaAgent,
    ArenaError,
    RatingTable,
    append_battle_log,
    expected_score,
    leaderboard,
    load_ratings,
    record_battle,
    replay_battle_log,
    save_ratings,
    start_battle,
)
from toolagent.executor import Agent
from toolagent.llm import ScriptedBackend
from toolagent.toolkit import default_registry


def _pool(n: int = 2) -> list[ArenaAgent]:
    agents = []
    for i in range(n):
        backend = ScriptedBackend([f"answer from agent {i}"], cycle=True)
        agents.append(
            ArenaAgent(
                agent_id=f"agent-{i}",
                agent=Agent(backend=backend, registry=default_registry()),
            )
        )
    return agents


# -------------------------------------------------------------------- updates


def test_expected_score_is_half_at_equal_ratings():
    assert expected_score(1000.0, 1000.0) == 0.5


def test_expected_scores_sum_to_one():
    assert math.isclose(
        expected_score(1100.0, 900.0) + expected_score(900.0, 1100.0),
        1.0,
        abs_tol=1e-12,
    )


def test_first_win_moves_sixteen_points():
    table = RatingTable()
    table.update("a", "b", "a_wins")
    assert table.rating("a") == 1016.0
    assert table.rating("b") == 984.0


def test_upset_win_moves_more_than_expected_win():
    # 32 * (1 - 1 / (1 + 10 ** (-200 / 400))) = 7.688098...
    table = RatingTable(ratings={"a": 1200.0, "b": 1000.0})
    table.update("a", "b", "a_wins")
    assert math.isclose(table.rating("a"), 1207.688098, abs_tol=5e-7)
    assert math.isclose(table.rating("b"), 992.311902, abs_tol=5e-7)


def test_tie_at_equal_ratings_changes_nothing():
    table = RatingTable()
    table.update("a", "b", "tie")
    assert table.rating("a") == 1000.0
    assert table.rating("b") == 1000.0


def test_tie_pulls_unequal_ratings_together():
    table = RatingTable(ratings={"a": 1200.0, "b": 1000.0})
    table.update("a", "b", "tie")
    assert table.rating("a") < 1200.0
    assert table.rating("b") > 1000.0


def test_update_rejects_self_play_and_unknown_outcome():
    table = RatingTable()
    with pytest.raises(ArenaError):
        table.update("a", "a", "a_wins")
    with pytest.raises(ArenaError):
        table.update("a", "b", "a_draws")


def test_rating_sum_is_conserved_under_many_updates():
    rng = random.Random(5)
    table = RatingTable()
    ids = [f"p{i}" for i in range(8)]
    for _ in range(2000):
        a, b = rng.sample(ids, 2)
        table.update(a, b, rng.choice(["a_wins", "b_wins", "tie"]))
    total = sum(table.rating(i) for i in ids)
    assert abs(total - 8 * 1000.0) < 1e-9


def test_games_are_counted_per_agent():
    table = RatingTable()
    table.update("a", "b", "a_wins")
    table.update("a", "c", "tie")
    assert table.games["a"] == 2
    assert table.games["b"] == 1
    assert table.games["c"] == 1


def test_win_streak_widens_the_gap_monotonically():
    table = RatingTable()
    gaps = []
    for _ in range(50):
        table.update("a", "b", "a_wins")
        gaps.append(table.rating("a") - table.rating("b"))
    assert all(later > earlier for earlier, later in zip(gaps, gaps[1:]))


# ---------------------------------------------------------------- leaderboard


def test_leaderboard_empty_before_any_battle():
    assert leaderboard(RatingTable()) == []


def test_leaderboard_orders_by_rating_then_id():
    table = RatingTable()
    table.update("beta", "alpha", "a_wins")
    table.update("gamma", "delta", "tie")
    rows = leaderboard(table)
    assert [r.agent_id for r in rows] == ["beta", "delta", "gamma", "alpha"]
    assert rows[0].rating == 1016.0
    assert rows[1].games == 1


# -------------------------------------------------------------------- battles


def test_start_battle_needs_two_agents():
    with pytest.raises(ArenaError):
        start_battle(_pool(1), "do something")


def test_start_battle_picks_two_distinct_agents():
    pool = _pool(4)
    battle = start_battle(pool, "say hi", rng=random.Random(0))
    assert battle.agent_a != battle.agent_b
    assert battle.outcome == "pending"
    assert battle.trace_a.final_answer()
    assert battle.trace_b.final_answer()


def test_start_battle_is_seed_deterministic():
    pair_one = start_battle(_pool(5), "q", rng=random.Random(9))
    pair_two = start_battle(_pool(5), "q", rng=random.Random(9))
    assert (pair_one.agent_a, pair_one.agent_b) == (
        pair_two.agent_a,
        pair_two.agent_b,
    )


def test_failing_agent_still_produces_a_votable_trace():
    broken = ArenaAgent(
        agent_id="broken",
        agent=Agent(backend=ScriptedBackend([]), registry=default_registry()),
    )
    ok = _pool(1)[0]
    battle = start_battle([broken, ok], "hello", rng=random.Random(1))
    answers = [battle.trace_a.final_answer(), battle.trace_b.final_answer()]
    assert any("failed to respond" in (a or "") for a in answers)
    table = RatingTable()
    record_battle(table, battle, "a_wins")
    assert battle.outcome == "a_wins"


def test_record_battle_rejects_double_votes():
    table = RatingTable()
    battle = start_battle(_pool(2), "q", rng=random.Random(2))
    record_battle(table, battle, "b_wins")
    with pytest.raises(ArenaError):
        record_battle(table, battle, "a_wins")


def test_record_battle_updates_both_ratings():
    table = RatingTable()
    battle = start_battle(_pool(2), "q", rng=random.Random(3))
    record_battle(table, battle, "a_wins")
    assert table.rating(battle.agent_a) == 1016.0
    assert table.rating(battle.agent_b) == 984.0


# ------------------------------------------------------------------------ logs


def test_log_replay_is_bit_exact(tmp_path):
    log = tmp_path / "battles.jsonl"
    table = RatingTable()
    rng = random.Random(17)
    pool = _pool(3)
    for _ in range(40):
        battle = start_battle(pool, "prompt", rng=rng)
        outcome = rng.choice(["a_wins", "b_wins", "tie"])
        record_battle(table, battle, outcome)
        append_battle_log(log, battle)
    replayed = replay_battle_log(log)
    assert replayed.ratings == table.ratings
    assert replayed.games == table.games


def test_log_rejects_pending_battles(tmp_path):
    battle = start_battle(_pool(2), "q", rng=random.Random(4))
    with pytest.raises(ArenaError):
        append_battle_log(tmp_path / "log.jsonl", battle)


def test_ratings_snapshot_round_trip(tmp_path):
    table = RatingTable(initial_rating=1200.0, k_factor=24.0)
    table.update("a", "b", "a_wins")
    path = tmp_path / "ratings.json"
    save_ratings(table, path)
    loaded = load_ratings(path)
    assert loaded.ratings == table.ratings
    assert loaded.games == table.games
    assert loaded.initial_rating == 1200.0
    assert loaded.k_factor == 24.0
