"""
Supervision weighting for multi-task training.
Normalized inverse-frequency label weights for navigation actions and the
task-weighted cross-entropy batch loss over caller-supplied predictions.
"""

import math
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from src.errors import DegenerateDistribution, EmptyBatch, NumericalUnderflow, ShapeMismatch, UnknownAction

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_SP = 1.0
DEFAULT_LAMBDA_TR = 0.5

# Keys are action tokens: primitive names ("move_forward") or merged tokens ("turn_left_x3").
ActionDistribution = Dict[str, float]
WeightTable = Dict[str, float]


class TaskKind(Enum):
    NAVIGATION = "navigation"
    SPATIAL_PERCEPTION = "spatial_perception"
    TRAJECTORY_REASONING = "trajectory_reasoning"


@dataclass
class TrainSample:
    """One supervised answer: target token ids and one probability row per target."""

    task: TaskKind
    target_tokens: Sequence[int]
    predicted_rows: np.ndarray
    action: Optional[str] = None

    def __post_init__(self):
        self.predicted_rows = np.asarray(self.predicted_rows, dtype=np.float64)
        if self.predicted_rows.ndim != 2:
            raise ShapeMismatch(f"predicted_rows must be 2D, got shape {self.predicted_rows.shape}")
        if len(self.target_tokens) != self.predicted_rows.shape[0]:
            raise ShapeMismatch(
                f"{len(self.target_tokens)} target tokens but {self.predicted_rows.shape[0]} prediction rows"
            )
        if len(self.target_tokens) == 0:
            raise ShapeMismatch("sample has no target tokens")
        sums = self.predicted_rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ShapeMismatch("every prediction row must sum to 1 (+/- 1e-6)")
        if self.task is TaskKind.NAVIGATION and self.action is None:
            raise UnknownAction("navigation samples need an action token")


def distribution_from_counts(counts: Mapping[str, float]) -> ActionDistribution:
    total = math.fsum(counts.values())
    if total <= 0:
        raise DegenerateDistribution("action counts sum to zero")
    return {action: count / total for action, count in counts.items()}


def token_distribution(tokens: Iterable[str]) -> ActionDistribution:
    """Empirical distribution of a token stream."""
    return distribution_from_counts(Counter(tokens))


def compute_weights(dist: Mapping[str, float]) -> WeightTable:
    """
    Normalized inverse-frequency weights.

    w(a) = sqrt( (1/p(a)) / mean_b(1/p(b)) ), so the mean of w(a)^2 is 1.

    Args:
        dist: Action token -> probability, all positive, summing to 1

    Returns:
        Action token -> weight, same key order as dist
    """
    if not dist:
        raise DegenerateDistribution("empty action distribution")
    actions = list(dist)
    p = np.array([dist[a] for a in actions], dtype=np.float64)
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise DegenerateDistribution(f"all probabilities must be > 0: {dict(zip(actions, p.tolist()))}")
    if abs(math.fsum(p.tolist()) - 1.0) > 1e-9:
        raise DegenerateDistribution(f"probabilities sum to {math.fsum(p.tolist())}, expected 1")

    inverse = 1.0 / p
    weights = np.sqrt(inverse / (math.fsum(inverse.tolist()) / len(inverse)))
    return {action: float(w) for action, w in zip(actions, weights)}


def uniform_weights(actions: Iterable[str]) -> WeightTable:
    """All-ones table, used when label reweighting is switched off."""
    return {action: 1.0 for action in actions}


def sample_weight(sample: TrainSample, weights: Mapping[str, float],
                  lambda_sp: float = DEFAULT_LAMBDA_SP, lambda_tr: float = DEFAULT_LAMBDA_TR) -> float:
    """W(u): w(a_t) for navigation, lambda_sp / lambda_tr for the auxiliary tasks."""
    if sample.task is TaskKind.NAVIGATION:
        try:
            return weights[sample.action]
        except KeyError:
            raise UnknownAction(f"no weight for action token {sample.action!r}")
    if sample.task is TaskKind.SPATIAL_PERCEPTION:
        return lambda_sp
    return lambda_tr


def cross_entropy(sample: TrainSample) -> float:
    """Mean negative log-likelihood over the sample's target tokens."""
    rows = sample.predicted_rows
    targets = np.asarray(sample.target_tokens, dtype=np.int64)
    if np.any(targets < 0) or np.any(targets >= rows.shape[1]):
        raise ShapeMismatch(f"target token ids outside vocabulary of size {rows.shape[1]}")
    probs = rows[np.arange(len(targets)), targets]
    if np.any(probs <= 0):
        raise NumericalUnderflow("zero probability assigned to a target token")
    return -math.fsum(np.log(probs).tolist()) / len(targets)


def batch_loss(batch: Sequence[TrainSample], weights: Mapping[str, float],
               lambda_sp: float = DEFAULT_LAMBDA_SP, lambda_tr: float = DEFAULT_LAMBDA_TR) -> float:
    """
    Multi-task loss L = (1/|B|) * sum_u W(u) * CE(y_u, z_u).

    The reduction uses math.fsum, which is correctly rounded and therefore
    independent of batch order.
    """
    if not batch:
        raise EmptyBatch("batch_loss needs at least one sample")
    terms: List[float] = [
        sample_weight(sample, weights, lambda_sp, lambda_tr) * cross_entropy(sample)
        for sample in batch
    ]
    return math.fsum(terms) / len(batch)
