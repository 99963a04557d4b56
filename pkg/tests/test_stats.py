import pytest

from src.db.episode_store import Episode
from src.db.synthetic import generate_synthetic_split
from src.eval.stats import merge_sweep, merged_token_counts, preprocess_stats
from src.flight.kinematics import AERIALVLN, ActionKind, Pose

MF = ActionKind.MOVE_FORWARD
TL = ActionKind.TURN_LEFT


def _episode(episode_id, actions):
    return Episode(episode_id, "aerialvln", "", Pose(0, 0, 0), actions, (0.0, 0.0, 0.0))


def test_nine_forward_become_three_segments():
    stats = preprocess_stats([_episode("a", [MF] * 9)], 3)
    assert stats["per_episode"] == [{"episode_id": "a", "before": 9, "after": 3}]
    assert stats["after"]["tokens"] == {"move_forward_x3": 3}
    assert stats["before"]["actions"] == {"move_forward": 9}
    assert stats["max_run_after"] == 3


def test_distinct_actions_are_unchanged():
    actions = [MF, TL, ActionKind.ASCEND, ActionKind.TURN_RIGHT, ActionKind.STOP]
    stats = preprocess_stats([_episode("a", actions)], 3)
    assert stats["per_episode"][0]["before"] == stats["per_episode"][0]["after"] == 5
    assert stats["max_run_after"] == 1


def test_merging_never_lengthens():
    episodes = generate_synthetic_split(40, AERIALVLN, seed=9)
    stats = preprocess_stats(episodes, 3)
    assert stats["episodes"] == 40
    assert all(row["after"] <= row["before"] for row in stats["per_episode"])
    assert stats["max_run_after"] <= 3
    assert stats["after"]["lengths"]["mean"] < stats["before"]["lengths"]["mean"]
    assert sum(stats["before"]["actions"].values()) == sum(len(e.gt_actions) for e in episodes)


def test_length_summary_histogram():
    stats = preprocess_stats([_episode("a", [MF] * 4), _episode("b", [MF] * 4), _episode("c", [TL])], 3)
    lengths = stats["before"]["lengths"]
    assert lengths["histogram"] == {"1": 1, "4": 2}
    assert lengths["min"] == 1 and lengths["max"] == 4
    assert lengths["median"] == 4.0


def test_empty_corpus():
    stats = preprocess_stats([], 3)
    assert stats["episodes"] == 0
    assert stats["before"]["lengths"]["count"] == 0


def test_merged_token_counts():
    counts = merged_token_counts([_episode("a", [TL] * 4 + [ActionKind.STOP])], 3)
    assert counts == {"stop": 1, "turn_left_x1": 1, "turn_left_x3": 1}


def test_merge_sweep():
    episodes = [_episode("a", [MF] * 6 + [TL] * 2)]
    rows = merge_sweep(episodes, [1, 2, 3, 6])
    assert [row["segments"] for row in rows] == [8, 4, 3, 2]
    assert [row["max_run_after"] for row in rows] == [1, 2, 3, 6]
    assert rows[0]["vocabulary"] == 2
    assert rows[2]["mean_length"] == pytest.approx(3.0)
