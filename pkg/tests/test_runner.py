import pytest
from dataclasses import replace
from unittest.mock import patch

from src.db.synthetic import GeometryOptions, generate_synthetic_split
from src.errors import EmptyEvaluation
from src.eval.agents import OracleGreedy, RandomSampler, ReplayPolicy
from src.eval.runner import EvalOptions, EvaluationRunner, evaluate_split
from src.flight.kinematics import AERIALVLN, OPENFLY


@pytest.fixture(scope="module")
def far_split():
    options = GeometryOptions(min_actions=60, max_actions=120, min_goal_distance=150.0)
    return generate_synthetic_split(200, AERIALVLN, seed=11, options=options)


@pytest.fixture(scope="module")
def open_split():
    return generate_synthetic_split(40, AERIALVLN, seed=4) + generate_synthetic_split(20, OPENFLY, seed=4)


def test_random_sampler_rarely_succeeds(far_split):
    report = evaluate_split(far_split, RandomSampler(0), EvalOptions(max_steps=500))
    assert len(report.scores) == 200
    assert report.aggregate["sr"] <= 1.0


def test_oracle_solves_open_terrain(open_split):
    report = evaluate_split(open_split, OracleGreedy(), EvalOptions(max_steps=500))
    assert report.aggregate["sr"] == 100.0
    assert report.diagnostics == []


def test_self_evaluation_is_perfect(open_split):
    report = evaluate_split(open_split, ReplayPolicy())
    for score in report.scores:
        assert score.sr == 1
        assert score.ne == pytest.approx(0.0, abs=1e-9)
        assert score.ndtw == pytest.approx(1.0, abs=1e-9)
    assert report.aggregate["sr"] == 100.0
    assert report.aggregate["ndtw"] == pytest.approx(100.0, abs=1e-7)


def test_shortest_length_proxy_flag(open_split):
    episodes = [open_split[0], replace(open_split[1], shortest_length=123.0)]
    report = evaluate_split(episodes, ReplayPolicy())
    assert [s.shortest_is_proxy for s in report.scores] == [True, False]
    assert report.aggregate["shortest_proxy_episodes"] == 1


def test_results_independent_of_worker_count(open_split):
    serial = evaluate_split(open_split, RandomSampler(3), EvalOptions(workers=1))
    parallel = evaluate_split(open_split, RandomSampler(3), EvalOptions(workers=4))
    assert serial.scores == parallel.scores
    assert serial.aggregate == parallel.aggregate
    assert [s.episode_id for s in parallel.scores] == [e.id for e in open_split]


def test_failed_episode_becomes_diagnostic(open_split):
    episodes = open_split[:5]
    original = EvaluationRunner._execute_job

    def flaky(self, job):
        if job.index == 2:
            with patch("src.eval.runner.run_agent", side_effect=ValueError("simulator exploded")):
                return original(self, job)
        return original(self, job)

    with patch.object(EvaluationRunner, "_execute_job", flaky):
        report = evaluate_split(episodes, ReplayPolicy())
    assert len(report.scores) == 4
    assert report.diagnostics == [(episodes[2].id, "ValueError: simulator exploded")]
    assert report.aggregate["episodes"] == 4


def test_all_failures_leave_no_aggregate(open_split):
    with patch("src.eval.runner.run_agent", side_effect=ValueError("boom")):
        report = evaluate_split(open_split[:3], ReplayPolicy(), EvalOptions(workers=2))
    assert report.scores == []
    assert report.aggregate is None
    assert len(report.diagnostics) == 3


def test_keep_runs(open_split):
    report = evaluate_split(open_split[:3], ReplayPolicy(), EvalOptions(keep_runs=True))
    assert [run.episode_id for run in report.runs] == [e.id for e in open_split[:3]]


def test_empty_split_and_options():
    with pytest.raises(EmptyEvaluation):
        evaluate_split([], RandomSampler())
    with pytest.raises(ValueError):
        EvalOptions(workers=0)
    with pytest.raises(ValueError):
        EvalOptions(max_steps=0)
