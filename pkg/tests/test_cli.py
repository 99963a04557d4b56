import json

import numpy as np
import pytest

import cli
from src.db.episode_store import Episode, load_episodes, save_episodes
from src.flight.kinematics import ActionKind, Pose
from src.version import __version__

MF = ActionKind.MOVE_FORWARD
TL = ActionKind.TURN_LEFT


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("AVLN_EPISODES", raising=False)
    monkeypatch.delenv("AVLN_OUTPUT", raising=False)


@pytest.fixture
def small_split(tmp_path):
    path = tmp_path / "small.jsonl"
    episode = Episode("ep-1", "aerialvln", "Fly ahead then turn left.", Pose(0, 0, 50, 0),
                      [MF] * 4 + [TL] * 2, (20.0, 0.0, 50.0))
    save_episodes([episode], str(path))
    return str(path)


@pytest.fixture
def synthetic_split(tmp_path):
    path = tmp_path / "synthetic.jsonl"
    assert cli.main(["gen-synthetic", "--count", "30", "--seed", "2", "--max-actions", "70",
                     "--output", str(path)]) == 0
    return str(path)


def _jsonl(path):
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f]


def test_preprocess_segments_and_keyframes(tmp_path, small_split):
    out = tmp_path / "pre.jsonl"
    assert cli.main(["preprocess", "--episodes", small_split, "--output", str(out)]) == 0
    record = _jsonl(out)[0]
    assert [(s["kind"], s["count"]) for s in record["segments"]] == [
        ("move_forward", 3), ("move_forward", 1), ("turn_left", 2)]
    assert record["keyframes"] == [0, 3, 4, 6]
    assert record["commands"][0] == "The next action is move forward 15 units"


def test_preprocess_ablations(tmp_path, small_split):
    out = tmp_path / "pre.jsonl"
    assert cli.main(["preprocess", "--episodes", small_split, "--output", str(out),
                     "--no-merge", "--no-keyframes"]) == 0
    record = _jsonl(out)[0]
    assert len(record["segments"]) == 6
    assert record["keyframes"] == list(range(7))


def test_preprocess_uniform_keyframes(tmp_path, small_split):
    out = tmp_path / "pre.jsonl"
    assert cli.main(["preprocess", "--episodes", small_split, "--output", str(out),
                     "--uniform-keyframes", "4"]) == 0
    assert _jsonl(out)[0]["keyframes"] == [0, 2, 4, 6]

    assert cli.main(["preprocess", "--episodes", small_split, "--output", str(out),
                     "--uniform-keyframes", "1"]) == 1
    assert cli.main(["preprocess", "--episodes", small_split, "--output", str(out),
                     "--uniform-keyframes", "4", "--no-keyframes"]) == 1


def test_episodes_from_environment(tmp_path, small_split, monkeypatch):
    out = tmp_path / "pre.jsonl"
    monkeypatch.setenv("AVLN_EPISODES", small_split)
    monkeypatch.setenv("AVLN_OUTPUT", str(out))
    assert cli.main(["preprocess"]) == 0
    assert _jsonl(out)[0]["episode_id"] == "ep-1"


def test_weights_from_counts(tmp_path, capsys):
    counts = tmp_path / "counts.txt"
    counts.write_text("move_forward 80\nturn_left 20\n", encoding="utf-8")
    assert cli.main(["weights", "--dist", str(counts)]) == 0
    captured = capsys.readouterr()
    rows = {row["action"]: row for row in map(json.loads, captured.out.splitlines())}
    assert rows["move_forward"]["p"] == pytest.approx(0.8)
    assert rows["move_forward"]["weight"] == pytest.approx(0.63246, abs=1e-5)
    assert rows["turn_left"]["weight"] == pytest.approx(1.26491, abs=1e-5)
    assert "0.63246" in captured.err

    assert cli.main(["weights", "--counts", str(counts)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_weights_without_reweighting(tmp_path, small_split):
    out = tmp_path / "weights.jsonl"
    assert cli.main(["weights", "--episodes", small_split, "--no-reweight", "--output", str(out)]) == 0
    rows = _jsonl(out)
    assert {row["action"] for row in rows} == {"move_forward_x3", "move_forward_x1", "turn_left_x2"}
    assert all(row["weight"] == 1.0 for row in rows)


def test_evaluate_is_reproducible(tmp_path, synthetic_split, capsys):
    paths = [tmp_path / name for name in ("a.jsonl", "b.jsonl", "c.jsonl")]
    for path, workers in zip(paths, ("1", "1", "4")):
        assert cli.main(["evaluate", "--episodes", synthetic_split, "--policy", "random", "--seed", "5",
                         "--workers", workers, "--output", str(path)]) == 0
    first = paths[0].read_bytes()
    assert paths[1].read_bytes() == first
    assert paths[2].read_bytes() == first

    records = [json.loads(line) for line in first.decode("utf-8").splitlines()]
    assert records[0]["version"] == __version__
    assert "workers" not in records[0]["config"]
    assert sum(1 for r in records if r["type"] == "episode") == 30
    assert "Overall" in capsys.readouterr().out


def test_evaluate_side_outputs(tmp_path, synthetic_split, capsys):
    table, scores = tmp_path / "table.txt", tmp_path / "scores.csv"
    assert cli.main(["evaluate", "--episodes", synthetic_split, "--policy", "replay",
                     "--table", str(table), "--csv", str(scores)]) == 0
    captured = capsys.readouterr()
    aggregate = next(json.loads(line) for line in captured.out.splitlines() if '"aggregate"' in line)
    assert aggregate["sr"] == 100.0
    assert "Overall" in captured.err
    assert table.read_text(encoding="utf-8").splitlines()[1].split()[0] == "split"
    assert len(scores.read_text(encoding="utf-8").splitlines()) == 31


def test_classify_failures(tmp_path, synthetic_split, capsys):
    report = tmp_path / "report.jsonl"
    labels = tmp_path / "labels.jsonl"
    assert cli.main(["evaluate", "--episodes", synthetic_split, "--policy", "random",
                     "--output", str(report)]) == 0
    assert cli.main(["classify-failures", "--input", str(report), "--output", str(labels)]) == 0
    labelled = _jsonl(labels)
    assert len(labelled) == 30
    failed = [r for r in _jsonl(report) if r.get("type") == "episode" and r["sr"] == 0]
    assert sum(1 for r in labelled if r["failure"]) == len(failed)
    assert "total" in capsys.readouterr().out


def test_stats_and_sweep(tmp_path, small_split, capsys):
    assert cli.main(["stats", "--episodes", small_split]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["per_episode"] == [{"episode_id": "ep-1", "before": 6, "after": 3}]

    assert cli.main(["stats", "--episodes", small_split, "--sweep", "1,6"]) == 0
    sweep = json.loads(capsys.readouterr().out)["sweep"]
    assert [row["segments"] for row in sweep] == [6, 2]


def test_simulate_and_tuples(tmp_path, small_split):
    runs, tuples = tmp_path / "runs.jsonl", tmp_path / "tuples.jsonl"
    assert cli.main(["simulate", "--episodes", small_split, "--policy", "replay", "--output", str(runs)]) == 0
    assert _jsonl(runs)[0]["actions"] == ["move_forward"] * 4 + ["turn_left"] * 2 + ["stop"]
    assert cli.main(["tuples", "--episodes", small_split, "--output", str(tuples)]) == 0
    assert [t["action_token"] for t in _jsonl(tuples)] == ["move_forward_x3", "move_forward_x1", "turn_left_x2"]


def test_stc_round_trip(tmp_path, capsys):
    tokens = np.arange(60, dtype=np.float32).reshape(12, 5)
    source, packed, unpacked = tmp_path / "t.npy", tmp_path / "c.npy", tmp_path / "d.npy"
    np.save(source, tokens)
    assert cli.main(["stc", "--input", str(source), "--height", "4", "--width", "3",
                     "--output", str(packed)]) == 0
    assert np.load(packed).shape == (4, 20)
    assert cli.main(["stc", "--input", str(packed), "--height", "4", "--width", "3", "--decompress",
                     "--output", str(unpacked)]) == 0
    np.testing.assert_array_equal(np.load(unpacked), tokens)
    assert "(12, 5) -> (4, 20)" in capsys.readouterr().out


def test_parse(capsys):
    assert cli.main(["parse", "The next action is move forward 15 units"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["kind"] == "move_forward"
    assert record["primitives"] == 3

    assert cli.main(["parse", "move forward 2.5 units"]) == 1
    assert "InvalidMagnitude" in capsys.readouterr().out


def test_parse_check(capsys):
    assert cli.main(["parse", "--check", "--action-space", "openfly"]) == 0
    assert "openfly: 16/16" in capsys.readouterr().out


def test_import(tmp_path):
    source = tmp_path / "annotations.jsonl"
    source.write_text(json.dumps({"episode_id": 7, "instruction": "Go up.", "start_position": [0, 0, 10],
                                  "start_rotation": [0, 0, 0, 1], "actions": [4, 4, 0]}) + "\n{broken\n",
                      encoding="utf-8")
    out = tmp_path / "episodes.jsonl"
    assert cli.main(["import", "--input", str(source), "--output", str(out)]) == 0
    episodes = load_episodes(str(out)).episodes
    assert [e.id for e in episodes] == ["7"]
    assert episodes[0].goal == (0.0, 0.0, 14.0)


def test_usage_errors(tmp_path):
    assert cli.main([]) == 1
    assert cli.main(["evaluate", "--bogus"]) == 1
    assert cli.main(["evaluate", "--merge-cap", "0", "--episodes", "x.jsonl"]) == 1
    assert cli.main(["preprocess"]) == 1
    assert cli.main(["gen-synthetic", "--count", "3"]) == 1


def test_missing_file_is_io_error(tmp_path):
    assert cli.main(["evaluate", "--episodes", str(tmp_path / "missing.jsonl")]) == 2
    assert cli.main(["stc", "--input", str(tmp_path / "missing.npy"), "--height", "2", "--width", "2",
                     "--output", str(tmp_path / "o.npy")]) == 2
