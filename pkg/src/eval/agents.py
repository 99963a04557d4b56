"""
Baseline agents and the closed-loop episode driver.

Agents choose one primitive per step from the current pose. The episode
ends on STOP or at the step cap; the executed trajectory is always produced
by a kinematics rollout of the action log.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Union

import numpy as np

from src.errors import DegenerateDistribution, InvalidPolicy
from src.eval.metrics import DEFAULT_SUCCESS_RADIUS
from src.flight.kinematics import ActionKind, ActionSpace, Pose, RolloutResult, apply_action, get_action_space, rollout
from src.utils.seeding import episode_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RandomSampler:
    """Uniform draws from the full vocabulary, STOP included."""

    seed: int = 0
    name = "random"

    def act(self, pose: Pose, episode, space: ActionSpace, step: int, rng: np.random.Generator) -> ActionKind:
        vocabulary = space.ordered_vocabulary()
        return vocabulary[int(rng.integers(len(vocabulary)))]


@dataclass(frozen=True)
class ActionSampler:
    """Draws from a fixed action distribution (e.g. the training-set frequencies)."""

    distribution: Mapping[ActionKind, float] = field(default_factory=dict)
    seed: int = 0
    name = "action"

    def __post_init__(self):
        if not self.distribution:
            raise InvalidPolicy("ActionSampler needs a non-empty distribution")
        p = np.array(list(self.distribution.values()), dtype=np.float64)
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
            raise DegenerateDistribution(f"ActionSampler distribution must be non-negative and sum to 1: {p}")

    def kinds_and_probs(self, space: ActionSpace):
        kinds = [kind for kind in space.ordered_vocabulary() if kind in self.distribution]
        missing = set(self.distribution) - set(kinds)
        if missing:
            raise InvalidPolicy(f"distribution has actions outside {space.name}: {sorted(k.value for k in missing)}")
        return kinds, np.array([self.distribution[kind] for kind in kinds], dtype=np.float64)

    def draw(self, n: int, space: ActionSpace, rng: np.random.Generator) -> List[ActionKind]:
        kinds, p = self.kinds_and_probs(space)
        return [kinds[i] for i in rng.choice(len(kinds), size=n, p=p)]

    def act(self, pose: Pose, episode, space: ActionSpace, step: int, rng: np.random.Generator) -> ActionKind:
        return self.draw(1, space, rng)[0]


@dataclass(frozen=True)
class OracleGreedy:
    """
    Picks the action whose resulting pose is closest to the goal.

    Emits STOP once within the success radius; ties break by vocabulary order.
    """

    success_radius: float = DEFAULT_SUCCESS_RADIUS
    seed: Optional[int] = None
    name = "oracle"

    def act(self, pose: Pose, episode, space: ActionSpace, step: int, rng=None) -> ActionKind:
        if math.dist(pose.position, episode.goal) <= self.success_radius:
            return ActionKind.STOP
        best, best_distance = None, math.inf
        for kind in space.ordered_vocabulary():
            if kind is ActionKind.STOP:
                continue
            distance = math.dist(apply_action(pose, kind, space).position, episode.goal)
            if distance < best_distance:
                best, best_distance = kind, distance
        return best


@dataclass(frozen=True)
class ReplayPolicy:
    """Replays the episode's ground-truth actions (self-evaluation)."""

    seed: Optional[int] = None
    name = "replay"

    def act(self, pose: Pose, episode, space: ActionSpace, step: int, rng=None) -> ActionKind:
        if step < len(episode.gt_actions):
            return episode.gt_actions[step]
        return ActionKind.STOP


AgentPolicy = Union[RandomSampler, ActionSampler, OracleGreedy, ReplayPolicy]


def make_policy(name: str, seed: int = 0, distribution: Dict[ActionKind, float] = None,
                success_radius: float = DEFAULT_SUCCESS_RADIUS) -> AgentPolicy:
    name = name.lower()
    if name == RandomSampler.name:
        return RandomSampler(seed)
    if name == ActionSampler.name:
        return ActionSampler(distribution or {}, seed)
    if name == OracleGreedy.name:
        return OracleGreedy(success_radius)
    if name == ReplayPolicy.name:
        return ReplayPolicy()
    raise InvalidPolicy(f"Unknown agent policy: {name}")


@dataclass
class AgentRun:
    episode_id: str
    actions: List[ActionKind]
    result: RolloutResult

    @property
    def trajectory(self) -> List[Pose]:
        return self.result.trajectory

    @property
    def stopped(self) -> bool:
        return bool(self.actions) and self.actions[-1] is ActionKind.STOP

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "actions": [kind.value for kind in self.actions],
            "trajectory": [pose.to_dict() for pose in self.trajectory],
            "collided": self.result.collided,
            "first_collision_step": self.result.first_collision_step,
            "stopped": self.stopped,
        }


def run_agent(episode, policy: AgentPolicy, max_steps: int) -> AgentRun:
    """
    Drive one episode closed-loop.

    Args:
        episode: Episode to run
        policy: Agent policy; seeded policies draw from hash(seed, episode id)
        max_steps: Step cap (>= 1)

    Returns:
        AgentRun with the action log and the rollout of that log
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    space = get_action_space(episode.action_space)
    rng = episode_rng(policy.seed, episode.id) if policy.seed is not None else None

    pose = episode.start
    actions: List[ActionKind] = []
    for step in range(max_steps):
        kind = policy.act(pose, episode, space, step, rng)
        actions.append(kind)
        if kind is ActionKind.STOP:
            break
        pose = apply_action(pose, kind, space)

    result = rollout(episode.start, actions, space, episode.obstacles)
    logger.debug(f"{episode.id}: {policy.name} took {len(actions)} actions, collided={result.collided}")
    return AgentRun(episode_id=episode.id, actions=actions, result=result)
