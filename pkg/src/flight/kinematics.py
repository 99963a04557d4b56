"""
Discrete flight model for aerial navigation episodes.
Poses, environment action spaces, single-step action application and
trajectory rollout with obstacle contact detection.

Yaw convention: 0 degrees points along +x, positive yaw is counter-clockwise
in the x-y plane, TurnLeft increases yaw. Units are treated as meters.
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from src.errors import UnsupportedAction

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]


class ActionKind(Enum):
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    ASCEND = "ascend"
    DESCEND = "descend"
    MOVE_LEFT = "move_left"
    MOVE_RIGHT = "move_right"
    STOP = "stop"

    @classmethod
    def from_name(cls, name: str) -> "ActionKind":
        """Accepts enum values ("turn_left") and member names ("TURN_LEFT")."""
        key = name.strip()
        try:
            return cls(key.lower())
        except ValueError:
            pass
        try:
            return cls[key.upper()]
        except KeyError:
            raise UnsupportedAction(f"Unknown action name: {name!r}")


# Declaration order doubles as the canonical vocabulary order (tie-breaks, tables).
ACTION_ORDER: Tuple[ActionKind, ...] = tuple(ActionKind)

TRANSLATIONS = frozenset({ActionKind.MOVE_FORWARD, ActionKind.MOVE_LEFT, ActionKind.MOVE_RIGHT})
VERTICALS = frozenset({ActionKind.ASCEND, ActionKind.DESCEND})
TURNS = frozenset({ActionKind.TURN_LEFT, ActionKind.TURN_RIGHT})


YAW_DECIMALS = 9


def normalize_yaw(yaw: float) -> float:
    """
    Wrap into [0, 360) on a 1e-9 degree grid.

    The grid keeps turn sequences exact: TurnLeft then TurnRight returns the
    same float yaw for any starting heading.
    """
    wrapped = round(yaw % 360.0, YAW_DECIMALS)
    # tiny negative inputs wrap to 360.0
    if wrapped >= 360.0:
        wrapped = 0.0
    return wrapped


@dataclass(frozen=True)
class Pose:
    """Agent state: position in units and heading in degrees within [0, 360)."""

    x: float
    y: float
    z: float
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "yaw"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Pose.{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    @property
    def position(self) -> Point:
        return (self.x, self.y, self.z)

    def to_dict(self) -> Dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, data: Dict) -> "Pose":
        return cls(data["x"], data["y"], data["z"], data.get("yaw", 0.0))


@dataclass(frozen=True)
class ActionSpace:
    """Environment-specific action vocabulary and step magnitudes."""

    name: str
    vocabulary: FrozenSet[ActionKind]
    horizontal_step: float
    vertical_step: float
    turn_step: float

    def __post_init__(self):
        for attr in ("horizontal_step", "vertical_step", "turn_step"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{self.name}: {attr} must be > 0")
        if ActionKind.STOP not in self.vocabulary:
            raise ValueError(f"{self.name}: vocabulary must contain STOP")

    def ordered_vocabulary(self) -> List[ActionKind]:
        return [kind for kind in ACTION_ORDER if kind in self.vocabulary]

    def step_for(self, kind: ActionKind) -> float:
        """Magnitude of one primitive of `kind` (units or degrees); 0 for STOP."""
        if kind in TRANSLATIONS:
            return self.horizontal_step
        if kind in VERTICALS:
            return self.vertical_step
        if kind in TURNS:
            return self.turn_step
        return 0.0

    def require(self, kind: ActionKind):
        if kind not in self.vocabulary:
            raise UnsupportedAction(f"{kind.value} is not available in action space {self.name}")


AERIALVLN = ActionSpace(
    name="aerialvln",
    vocabulary=frozenset(ActionKind),
    horizontal_step=5.0,
    vertical_step=2.0,
    turn_step=15.0,
)

OPENFLY = ActionSpace(
    name="openfly",
    vocabulary=frozenset(ActionKind) - {ActionKind.MOVE_LEFT, ActionKind.MOVE_RIGHT},
    horizontal_step=3.0,
    vertical_step=3.0,
    turn_step=30.0,
)

ACTION_SPACES: Dict[str, ActionSpace] = {space.name: space for space in (AERIALVLN, OPENFLY)}


def get_action_space(name: str) -> ActionSpace:
    try:
        return ACTION_SPACES[name.lower()]
    except KeyError:
        raise ValueError(f"Unknown action space: {name} (expected one of {sorted(ACTION_SPACES)})")


@dataclass(frozen=True)
class ObstacleBox:
    """Axis-aligned box; contact includes the boundary."""

    min_corner: Point
    max_corner: Point

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min_corner)
        hi = tuple(float(v) for v in self.max_corner)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("ObstacleBox corners must be 3D points")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError(f"ObstacleBox corners must be finite, got {lo} and {hi}")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"ObstacleBox min corner {lo} exceeds max corner {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def contains(self, point: Sequence[float]) -> bool:
        return all(lo <= p <= hi for p, lo, hi in zip(point, self.min_corner, self.max_corner))

    def to_dict(self) -> Dict[str, List[float]]:
        return {"min": list(self.min_corner), "max": list(self.max_corner)}

    @classmethod
    def from_dict(cls, data: Dict) -> "ObstacleBox":
        return cls(tuple(data["min"]), tuple(data["max"]))


@dataclass(frozen=True)
class RolloutResult:
    trajectory: List[Pose]
    collided: bool = False
    first_collision_step: Optional[int] = None
    actions: List[ActionKind] = field(default_factory=list)

    @property
    def final(self) -> Pose:
        return self.trajectory[-1]


def apply_action(pose: Pose, kind: ActionKind, space: ActionSpace) -> Pose:
    """
    Apply one primitive action.

    Args:
        pose: Current pose
        kind: Primitive action
        space: Active action space (supplies the step magnitudes)

    Returns:
        The pose after the action

    Raises:
        UnsupportedAction: kind is not in space.vocabulary
    """
    space.require(kind)

    if kind is ActionKind.STOP:
        return pose
    if kind is ActionKind.TURN_LEFT:
        return Pose(pose.x, pose.y, pose.z, pose.yaw + space.turn_step)
    if kind is ActionKind.TURN_RIGHT:
        return Pose(pose.x, pose.y, pose.z, pose.yaw - space.turn_step)
    if kind is ActionKind.ASCEND:
        return Pose(pose.x, pose.y, pose.z + space.vertical_step, pose.yaw)
    if kind is ActionKind.DESCEND:
        return Pose(pose.x, pose.y, pose.z - space.vertical_step, pose.yaw)

    heading = pose.yaw
    if kind is ActionKind.MOVE_LEFT:
        heading += 90.0
    elif kind is ActionKind.MOVE_RIGHT:
        heading -= 90.0
    rad = math.radians(heading)
    step = space.horizontal_step
    return Pose(pose.x + step * math.cos(rad), pose.y + step * math.sin(rad), pose.z, pose.yaw)


def first_contact(point: Sequence[float], obstacles: Sequence[ObstacleBox]) -> Optional[ObstacleBox]:
    for box in obstacles:
        if box.contains(point):
            return box
    return None


def rollout(start: Pose, actions: Sequence[ActionKind], space: ActionSpace,
            obstacles: Sequence[ObstacleBox] = ()) -> RolloutResult:
    """
    Execute an action sequence from `start`.

    The rollout never halts on contact; it records the index of the first
    action whose resulting pose lies inside (or on) an obstacle box.

    Returns:
        RolloutResult with len(actions) + 1 poses
    """
    trajectory = [start]
    first_collision = None
    pose = start
    for step, kind in enumerate(actions):
        pose = apply_action(pose, kind, space)
        trajectory.append(pose)
        if first_collision is None and first_contact(pose.position, obstacles) is not None:
            first_collision = step
            logger.debug(f"Obstacle contact at step {step}: {pose.position}")

    return RolloutResult(
        trajectory=trajectory,
        collided=first_collision is not None,
        first_collision_step=first_collision,
        actions=list(actions),
    )


def shortest_path_length(a: Pose, b: Pose) -> float:
    """Straight-line distance between two poses (shortest-path proxy)."""
    return math.dist(a.position, b.position)


def path_length(trajectory: Sequence[Pose]) -> float:
    """Sum of consecutive-pose distances."""
    return math.fsum(math.dist(p.position, q.position) for p, q in zip(trajectory, trajectory[1:]))
