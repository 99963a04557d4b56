import json
import pytest

from src.db.episode_store import Episode, EpisodeStore, load_episodes, save_episodes
from src.db.synthetic import GeometryOptions, generate_synthetic_split
from src.errors import SchemaViolation
from src.flight.kinematics import AERIALVLN, OPENFLY, ActionKind, ObstacleBox, Pose


@pytest.fixture
def episode():
    return Episode(
        id="ep-1",
        action_space="aerialvln",
        instruction="Take off and fly to the red roof.",
        start=Pose(1.5, -2.25, 30.0, 90.0),
        gt_actions=[ActionKind.MOVE_FORWARD, ActionKind.TURN_LEFT, ActionKind.STOP],
        goal=(1.5, 2.75, 30.0),
        obstacles=[ObstacleBox((10, 10, 0), (20, 20, 40))],
        frames=["f0.png", "f1.png", "f2.png", "f3.png"],
        shortest_length=5.0,
        extra={"scene": "village_03", "annotator": {"id": 7}},
    )


def test_round_trip_preserves_fields(tmp_path, episode):
    path = tmp_path / "episodes.jsonl"
    save_episodes([episode], str(path))
    result = load_episodes(str(path))
    assert result.diagnostics == []
    assert result.episodes == [episode]


def test_round_trip_of_generated_split(tmp_path):
    episodes = generate_synthetic_split(50, AERIALVLN, seed=1, options=GeometryOptions(obstacles=2))
    episodes += generate_synthetic_split(50, OPENFLY, seed=2)
    path = tmp_path / "split.jsonl"
    save_episodes(episodes, str(path))
    assert load_episodes(str(path)).episodes == episodes


def test_unknown_fields_are_written_back(tmp_path, episode):
    path = tmp_path / "episodes.jsonl"
    save_episodes([episode], str(path))
    record = json.loads(path.read_text(encoding="utf-8"))
    assert record["schema_version"] == 1
    assert record["scene"] == "village_03"
    assert record["annotator"] == {"id": 7}


def test_malformed_line_is_reported(tmp_path, episode):
    path = tmp_path / "episodes.jsonl"
    lines = []
    for i in range(10):
        record = dict(episode.to_record(), id=f"ep-{i}")
        if i == 4:
            del record["goal"]
        lines.append(json.dumps(record))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    result = load_episodes(str(path))
    assert len(result.episodes) == 9
    assert len(result.diagnostics) == 1
    line_number, message = result.diagnostics[0]
    assert line_number == 5
    assert "Schema Validation Failed" in message
    assert [e.id for e in result.episodes] == [f"ep-{i}" for i in range(10) if i != 4]


def test_invalid_json_and_bad_values(tmp_path, episode):
    bad_action = dict(episode.to_record(), gt_actions=["hover"])
    bad_space = dict(episode.to_record(), action_space="habitat")
    path = tmp_path / "episodes.jsonl"
    path.write_text("{not json\n" + json.dumps(bad_action) + "\n" + json.dumps(bad_space) + "\n[]\n",
                    encoding="utf-8")
    result = load_episodes(str(path))
    assert result.episodes == []
    assert [line for line, _ in result.diagnostics] == [1, 2, 3, 4]
    assert result.diagnostics[0][1].startswith("Invalid JSON")


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    result = EpisodeStore(str(path)).load()
    assert result.episodes == []
    assert result.diagnostics == []


def test_missing_file_raises(tmp_path):
    with pytest.raises(OSError):
        load_episodes(str(tmp_path / "missing.jsonl"))


def test_from_record_validation(episode):
    record = episode.to_record()
    record["start"] = {"x": 0, "y": 0}
    with pytest.raises(SchemaViolation):
        Episode.from_record(record)


def test_reference_rollout(episode):
    result = episode.reference_rollout()
    assert len(result.trajectory) == 4
    assert result.final.position == pytest.approx(episode.goal)
    assert not result.collided


def test_invalid_utf8_line_is_reported(tmp_path, episode):
    path = tmp_path / "episodes.jsonl"
    good = [json.dumps(dict(episode.to_record(), id=f"ep-{i}")).encode("utf-8") for i in range(2)]
    path.write_bytes(good[0] + b"\n" + b'{"id": "\xff\xfe"}\n' + good[1] + b"\n")

    result = load_episodes(str(path))
    assert [e.id for e in result.episodes] == ["ep-0", "ep-1"]
    assert len(result.diagnostics) == 1
    line_number, message = result.diagnostics[0]
    assert line_number == 2
    assert message.startswith("Invalid UTF-8")


@pytest.mark.parametrize("change", [
    {"goal": [float("nan"), 0.0, 0.0]},
    {"goal": [0.0, float("inf"), 0.0]},
    {"obstacles": [{"min": [0, 0, 0], "max": [1, float("inf"), 1]}]},
    {"shortest_length": float("nan")},
])
def test_non_finite_values_are_rejected(tmp_path, episode, change):
    path = tmp_path / "episodes.jsonl"
    record = dict(episode.to_record(), **change)
    path.write_text(json.dumps(episode.to_record()) + "\n" + json.dumps(record) + "\n", encoding="utf-8")

    result = load_episodes(str(path))
    assert result.episodes == [episode]
    assert [line for line, _ in result.diagnostics] == [2]
    assert "Schema Validation Failed" in result.diagnostics[0][1]
    with pytest.raises(SchemaViolation):
        Episode.from_record(record)
