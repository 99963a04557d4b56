"""
Closed-loop split evaluation.
Episodes are independent jobs on a thread-backed queue; scores are collected
by episode index and reduced in canonical order so the report does not
depend on the worker count.
"""

import queue
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from src.errors import EmptyEvaluation
from src.eval.agents import AgentPolicy, AgentRun, run_agent
from src.eval.metrics import (
    DEFAULT_DRIFT_THRESHOLD,
    DEFAULT_SUCCESS_RADIUS,
    EpisodeScore,
    EvalInput,
    aggregate,
    score_episode,
)
from src.flight.kinematics import shortest_path_length, Pose

logger = logging.getLogger(__name__)


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Job:
    index: int
    episode: object
    status: JobStatus = JobStatus.PENDING
    score: Optional[EpisodeScore] = None
    run: Optional[AgentRun] = None
    error_message: Optional[str] = None


@dataclass
class EvalOptions:
    max_steps: int = 500
    success_radius: float = DEFAULT_SUCCESS_RADIUS
    drift_threshold: float = DEFAULT_DRIFT_THRESHOLD
    workers: int = 1
    progress: bool = False
    keep_runs: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class EvalReport:
    policy: str
    scores: List[EpisodeScore] = field(default_factory=list)
    aggregate: Optional[Dict] = None
    diagnostics: List[Tuple[str, str]] = field(default_factory=list)
    runs: List[AgentRun] = field(default_factory=list)

    @property
    def failure_table(self) -> Dict[str, int]:
        return self.aggregate["failures"] if self.aggregate else {}


def score_run(episode, run: AgentRun, options: EvalOptions) -> EpisodeScore:
    """Score one executed run against the episode's reference rollout."""
    reference = episode.reference_rollout()
    if episode.shortest_length is not None:
        shortest, proxy = float(episode.shortest_length), False
    else:
        shortest = shortest_path_length(episode.start, Pose(*episode.goal, yaw=0.0))
        proxy = True

    return score_episode(EvalInput(
        predicted=run.trajectory,
        reference=reference.trajectory,
        goal=episode.goal,
        shortest_length=shortest,
        collided=run.result.collided,
        success_radius=options.success_radius,
        drift_threshold=options.drift_threshold,
        episode_id=episode.id,
        num_actions=len(episode.gt_actions),
        shortest_is_proxy=proxy,
    ))


class EvaluationRunner:
    """Runs one policy over a split with a fixed pool of worker threads."""

    def __init__(self, policy: AgentPolicy, options: EvalOptions = None):
        self.policy = policy
        self.options = options or EvalOptions()
        self.job_queue: "queue.Queue[Job]" = queue.Queue()
        self.lock = threading.Lock()
        self.stats = {
            'total_jobs': 0,
            'completed_jobs': 0,
            'failed_jobs': 0,
        }
        self._progress = None

    def _execute_job(self, job: Job):
        job.status = JobStatus.RUNNING
        try:
            job.run = run_agent(job.episode, self.policy, self.options.max_steps)
            job.score = score_run(job.episode, job.run, self.options)
            job.status = JobStatus.COMPLETED
            with self.lock:
                self.stats['completed_jobs'] += 1
        except Exception as e:
            job.status = JobStatus.FAILED
            job.error_message = f"{type(e).__name__}: {e}"
            with self.lock:
                self.stats['failed_jobs'] += 1
            logger.error(f"Episode {job.episode.id} failed: {job.error_message}")
        finally:
            if self._progress is not None:
                with self.lock:
                    self._progress.update(1)

    def _worker(self):
        while True:
            try:
                job = self.job_queue.get_nowait()
            except queue.Empty:
                return
            try:
                self._execute_job(job)
            finally:
                self.job_queue.task_done()

    def run(self, episodes: Sequence) -> EvalReport:
        """
        Evaluate every episode and aggregate in input order.

        Args:
            episodes: Non-empty episode sequence

        Returns:
            EvalReport with per-episode scores, the aggregate and
            (episode_id, message) diagnostics for episodes that failed
        """
        if not episodes:
            raise EmptyEvaluation("evaluate_split needs at least one episode")

        jobs = [Job(index=i, episode=episode) for i, episode in enumerate(episodes)]
        for job in jobs:
            self.job_queue.put(job)
        self.stats['total_jobs'] += len(jobs)

        workers = min(self.options.workers, len(jobs))
        logger.info(f"Evaluating {len(jobs)} episodes with policy {self.policy.name} on {workers} worker(s)")
        with tqdm(total=len(jobs), desc="evaluate", disable=not self.options.progress) as progress:
            self._progress = progress
            threads = [threading.Thread(target=self._worker, daemon=True) for _ in range(workers)]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()
            self._progress = None

        report = EvalReport(policy=self.policy.name)
        for job in jobs:
            if job.status is JobStatus.COMPLETED:
                report.scores.append(job.score)
                if self.options.keep_runs:
                    report.runs.append(job.run)
            else:
                report.diagnostics.append((job.episode.id, job.error_message))

        if report.scores:
            report.aggregate = aggregate(report.scores)
        else:
            logger.error("No episode could be scored")

        logger.info(
            f"Evaluation finished: {self.stats['completed_jobs']} scored, {self.stats['failed_jobs']} failed"
        )
        return report


def evaluate_split(episodes: Sequence, policy: AgentPolicy, options: EvalOptions = None) -> EvalReport:
    return EvaluationRunner(policy, options).run(episodes)
