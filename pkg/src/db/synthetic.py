"""
Synthetic episode splits for desk-scale evaluation.
Goals sit at the endpoint of a random feasible action sequence, so every
episode is reachable; optional obstacle boxes are rejection-sampled so the
reference trajectory never touches them.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from src.brain.actionlang import segment_command, verb_clause
from src.brain.preprocess import merge_actions
from src.db.episode_store import Episode
from src.flight.kinematics import ActionKind, ActionSpace, ObstacleBox, Pose, rollout

logger = logging.getLogger(__name__)

# Relative draw weights for the next run's action; forward flight dominates real trajectories.
RUN_WEIGHTS = {
    ActionKind.MOVE_FORWARD: 0.55,
    ActionKind.TURN_LEFT: 0.12,
    ActionKind.TURN_RIGHT: 0.12,
    ActionKind.ASCEND: 0.06,
    ActionKind.DESCEND: 0.05,
    ActionKind.MOVE_LEFT: 0.05,
    ActionKind.MOVE_RIGHT: 0.05,
}


@dataclass
class GeometryOptions:
    min_actions: int = 20
    max_actions: int = 80
    max_run: int = 8
    min_goal_distance: float = 0.0
    obstacles: int = 0
    obstacle_size: tuple = (4.0, 15.0)
    obstacle_offset: tuple = (8.0, 40.0)
    area: float = 500.0
    max_attempts: int = 1000

    def __post_init__(self):
        if not 1 <= self.min_actions <= self.max_actions:
            raise ValueError(f"need 1 <= min_actions <= max_actions, got {self.min_actions}, {self.max_actions}")
        if self.max_run < 1:
            raise ValueError("max_run must be >= 1")


def _random_actions(rng: np.random.Generator, space: ActionSpace, options: GeometryOptions) -> List[ActionKind]:
    kinds = [kind for kind in RUN_WEIGHTS if kind in space.vocabulary]
    p = np.array([RUN_WEIGHTS[kind] for kind in kinds])
    p = p / p.sum()

    target = int(rng.integers(options.min_actions, options.max_actions + 1))
    actions: List[ActionKind] = []
    while len(actions) < target:
        kind = kinds[int(rng.choice(len(kinds), p=p))]
        run = int(rng.integers(1, options.max_run + 1))
        actions.extend([kind] * min(run, target - len(actions)))
    actions.append(ActionKind.STOP)
    return actions


def _random_obstacle(rng: np.random.Generator, anchor: Pose, options: GeometryOptions) -> ObstacleBox:
    angle = rng.uniform(0.0, 2 * np.pi)
    offset = rng.uniform(*options.obstacle_offset)
    half = rng.uniform(*options.obstacle_size, size=3) / 2.0
    center = np.array([
        anchor.x + offset * np.cos(angle),
        anchor.y + offset * np.sin(angle),
        anchor.z + rng.uniform(-5.0, 5.0),
    ])
    return ObstacleBox(tuple((center - half).tolist()), tuple((center + half).tolist()))


def _place_obstacles(rng: np.random.Generator, trajectory: List[Pose], goal, options: GeometryOptions) -> List[ObstacleBox]:
    boxes: List[ObstacleBox] = []
    attempts = 0
    while len(boxes) < options.obstacles and attempts < options.max_attempts:
        attempts += 1
        anchor = trajectory[int(rng.integers(len(trajectory)))]
        box = _random_obstacle(rng, anchor, options)
        if box.contains(goal) or any(box.contains(pose.position) for pose in trajectory):
            continue
        boxes.append(box)
    if len(boxes) < options.obstacles:
        logger.warning(f"Placed only {len(boxes)}/{options.obstacles} obstacles after {attempts} attempts")
    return boxes


def describe_actions(actions: List[ActionKind], space: ActionSpace, merge_cap: int = 3) -> str:
    """Instruction text listing the merged segments, e.g. "Move forward 15 units, then turn left 45 degrees"."""
    clauses = [verb_clause(segment_command(seg, space), space) for seg in merge_actions(actions, merge_cap)]
    text = ", then ".join(clauses)
    return text[:1].upper() + text[1:] + "."


def generate_synthetic_split(count: int, space: ActionSpace, seed: int = 0,
                             options: GeometryOptions = None) -> List[Episode]:
    """
    Deterministic synthetic split.

    Args:
        count: Number of episodes (>= 1)
        space: Action space the episodes are generated in
        seed: RNG seed; equal seeds give identical splits
        options: Geometry options (sequence lengths, goal distance, obstacles)

    Returns:
        List of episodes whose gt_actions end exactly at the goal
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    options = options or GeometryOptions()
    rng = np.random.default_rng(seed)
    turns = int(round(360.0 / space.turn_step))

    episodes = []
    for i in range(count):
        start = Pose(
            float(rng.uniform(-options.area, options.area)),
            float(rng.uniform(-options.area, options.area)),
            float(rng.uniform(20.0, 120.0)),
            float(int(rng.integers(turns)) * space.turn_step),
        )
        for attempt in range(options.max_attempts):
            actions = _random_actions(rng, space, options)
            reference = rollout(start, actions, space)
            goal = reference.final.position
            if np.linalg.norm(np.subtract(goal, start.position)) >= options.min_goal_distance:
                break
        else:
            raise ValueError(
                f"could not reach min_goal_distance {options.min_goal_distance} in {options.max_attempts} attempts"
            )

        obstacles = _place_obstacles(rng, reference.trajectory, goal, options) if options.obstacles else []

        episodes.append(Episode(
            id=f"synthetic-{seed}-{i:05d}",
            action_space=space.name,
            instruction=describe_actions(actions, space),
            start=start,
            gt_actions=actions,
            goal=goal,
            obstacles=obstacles,
        ))

    logger.info(f"Generated {count} synthetic {space.name} episodes (seed {seed})")
    return episodes
