"""
Episode scoring for aerial navigation.
NE, SR, OSR, nDTW, SDTW, SPL per episode, the four-way failure classifier
and split-level aggregation with difficulty buckets.
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from src.errors import EmptyEvaluation
from src.flight.kinematics import Point, Pose, path_length

logger = logging.getLogger(__name__)

DEFAULT_SUCCESS_RADIUS = 20.0
DEFAULT_DRIFT_THRESHOLD = 0.3

# Action-count difficulty buckets: Easy < 30, Moderate 30-60, Hard > 60
EASY_MAX_ACTIONS = 30
HARD_MIN_ACTIONS = 60
DIFFICULTIES = ("Easy", "Moderate", "Hard")

SDTW_NOTE = "SDTW is weighted by per-episode success, not split-level success rate."
SPL_PROXY_NOTE = "SPL uses straight-line start-goal distance where no shortest path length was given."


class FailureKind(Enum):
    STOP_FAILURE = "StopFailure"
    COLLISION = "Collision"
    LONG_HORIZON_DRIFT = "LongHorizonDrift"
    PERCEPTION_RELATED = "PerceptionRelated"


@dataclass
class EvalInput:
    predicted: Sequence[Pose]
    reference: Sequence[Pose]
    goal: Point
    shortest_length: float
    collided: bool = False
    success_radius: float = DEFAULT_SUCCESS_RADIUS
    drift_threshold: float = DEFAULT_DRIFT_THRESHOLD
    episode_id: str = ""
    num_actions: int = 0
    shortest_is_proxy: bool = False

    def __post_init__(self):
        if not self.predicted or not self.reference:
            raise ValueError("predicted and reference trajectories must be non-empty")
        if self.shortest_length < 0:
            raise ValueError(f"shortest_length must be >= 0, got {self.shortest_length}")
        if not self.success_radius > 0:
            raise ValueError(f"success_radius must be > 0, got {self.success_radius}")


@dataclass
class EpisodeScore:
    ne: float
    sr: int
    osr: int
    ndtw: float
    sdtw: float
    spl: float
    failure: Optional[FailureKind] = None
    episode_id: str = ""
    num_actions: int = 0
    path_length: float = 0.0
    collided: bool = False
    shortest_is_proxy: bool = False

    @property
    def difficulty(self) -> str:
        return difficulty_bucket(self.num_actions)

    def to_dict(self) -> Dict:
        return {
            "episode_id": self.episode_id,
            "ne": self.ne,
            "sr": self.sr,
            "osr": self.osr,
            "ndtw": self.ndtw,
            "sdtw": self.sdtw,
            "spl": self.spl,
            "failure": self.failure.value if self.failure else None,
            "num_actions": self.num_actions,
            "difficulty": self.difficulty,
            "path_length": self.path_length,
            "collided": self.collided,
            "shortest_is_proxy": self.shortest_is_proxy,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EpisodeScore":
        failure = data.get("failure")
        return cls(
            ne=data["ne"], sr=int(data["sr"]), osr=int(data["osr"]),
            ndtw=data["ndtw"], sdtw=data["sdtw"], spl=data["spl"],
            failure=FailureKind(failure) if failure else None,
            episode_id=data.get("episode_id", ""),
            num_actions=data.get("num_actions", 0),
            path_length=data.get("path_length", 0.0),
            collided=bool(data.get("collided", False)),
            shortest_is_proxy=bool(data.get("shortest_is_proxy", False)),
        )


def _positions(poses: Sequence[Pose]) -> np.ndarray:
    return np.array([pose.position for pose in poses], dtype=np.float64).reshape(-1, 3)


def navigation_error(final: Pose, goal: Point) -> float:
    return math.dist(final.position, tuple(goal))


def success_flags(predicted: Sequence[Pose], goal: Point, radius: float = DEFAULT_SUCCESS_RADIUS) -> Tuple[int, int]:
    """(sr, osr); a distance equal to the radius counts as success."""
    if not predicted:
        raise ValueError("predicted trajectory must be non-empty")
    distances = cdist(_positions(predicted), np.array([goal], dtype=np.float64))[:, 0]
    sr = int(distances[-1] <= radius)
    osr = int(distances.min() <= radius)
    return sr, osr


def pairwise_costs(predicted: Sequence[Pose], reference: Sequence[Pose]) -> np.ndarray:
    """Euclidean point costs, shape (len(predicted), len(reference))."""
    return cdist(_positions(predicted), _positions(reference))


def dtw_distance(predicted: Sequence[Pose], reference: Sequence[Pose]) -> float:
    """
    Classic DTW with match/insert/delete steps, anchored at both ends.

    Args:
        predicted: Predicted trajectory
        reference: Reference trajectory

    Returns:
        Minimum accumulated Euclidean cost over monotone alignments
    """
    if not predicted or not reference:
        raise ValueError("DTW needs two non-empty trajectories")
    cost = pairwise_costs(predicted, reference).tolist()
    n, m = len(cost), len(cost[0])

    inf = float("inf")
    previous = [inf] * (m + 1)
    previous[0] = 0.0
    for i in range(n):
        row = cost[i]
        current = [inf] * (m + 1)
        for j in range(m):
            current[j + 1] = row[j] + min(
                previous[j + 1],  # insertion
                current[j],       # deletion
                previous[j],      # match
            )
        previous = current
    return previous[m]


def normalized_dtw(dtw: float, reference_length: int, radius: float = DEFAULT_SUCCESS_RADIUS) -> float:
    return math.exp(-dtw / (reference_length * radius))


def classify_failure(osr: int, collided: bool, ndtw: float,
                     drift_threshold: float = DEFAULT_DRIFT_THRESHOLD) -> FailureKind:
    """Precedence: StopFailure > Collision > LongHorizonDrift > PerceptionRelated. Call only when sr = 0."""
    if osr:
        return FailureKind.STOP_FAILURE
    if collided:
        return FailureKind.COLLISION
    if ndtw < drift_threshold:
        return FailureKind.LONG_HORIZON_DRIFT
    return FailureKind.PERCEPTION_RELATED


def score_episode(data: EvalInput) -> EpisodeScore:
    ne = navigation_error(data.predicted[-1], data.goal)
    sr, osr = success_flags(data.predicted, data.goal, data.success_radius)
    ndtw = normalized_dtw(dtw_distance(data.predicted, data.reference), len(data.reference), data.success_radius)
    executed = path_length(data.predicted)

    if executed == 0 and data.shortest_length == 0:
        spl = float(sr)
    else:
        spl = sr * data.shortest_length / max(executed, data.shortest_length)

    return EpisodeScore(
        ne=ne,
        sr=sr,
        osr=osr,
        ndtw=ndtw,
        sdtw=sr * ndtw,
        spl=spl,
        failure=None if sr else classify_failure(osr, data.collided, ndtw, data.drift_threshold),
        episode_id=data.episode_id,
        num_actions=data.num_actions,
        path_length=executed,
        collided=data.collided,
        shortest_is_proxy=data.shortest_is_proxy,
    )


def difficulty_bucket(num_actions: int) -> str:
    if num_actions < EASY_MAX_ACTIONS:
        return "Easy"
    if num_actions <= HARD_MIN_ACTIONS:
        return "Moderate"
    return "Hard"


def _mean(values: List[float]) -> float:
    return math.fsum(values) / len(values)


def _summarize(scores: Sequence[EpisodeScore]) -> Dict:
    return {
        "episodes": len(scores),
        "ne": _mean([s.ne for s in scores]),
        "sr": 100.0 * _mean([s.sr for s in scores]),
        "osr": 100.0 * _mean([s.osr for s in scores]),
        "ndtw": 100.0 * _mean([s.ndtw for s in scores]),
        "sdtw": 100.0 * _mean([s.sdtw for s in scores]),
        "spl": 100.0 * _mean([s.spl for s in scores]),
    }


def aggregate(scores: Sequence[EpisodeScore]) -> Dict:
    """
    Split-level summary.

    Means are taken in the given (canonical) episode order; SR, OSR, nDTW,
    SDTW and SPL are reported in percent, NE in units.

    Returns:
        Dictionary with overall metrics, failure counts and per-difficulty metrics
    """
    if not scores:
        raise EmptyEvaluation("cannot aggregate zero episode scores")

    summary = _summarize(scores)
    summary["failures"] = {kind.value: 0 for kind in FailureKind}
    for score in scores:
        if score.failure is not None:
            summary["failures"][score.failure.value] += 1

    buckets = {name: [s for s in scores if s.difficulty == name] for name in DIFFICULTIES}
    summary["difficulty"] = {
        name: _summarize(members) if members else {"episodes": 0}
        for name, members in buckets.items()
    }
    summary["shortest_proxy_episodes"] = sum(1 for s in scores if s.shortest_is_proxy)
    return summary
