"""
Episode storage as line-delimited JSON.
One episode per line, UTF-8, validated against a Draft-7 JSON schema.
Malformed lines are reported with their line numbers and skipped; valid
lines still load. Unknown fields round-trip verbatim.
"""

import os
import math
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from jsonschema import Draft7Validator

from src.errors import SchemaViolation
from src.flight.kinematics import ActionKind, ObstacleBox, Point, Pose, rollout, get_action_space, RolloutResult

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

EPISODE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "schema_version": {"type": "integer"},
        "id": {"type": "string"},
        "action_space": {"type": "string"},
        "instruction": {"type": "string"},
        "start": {
            "type": "object",
            "properties": {
                "x": {"type": "number"},
                "y": {"type": "number"},
                "z": {"type": "number"},
                "yaw": {"type": "number"},
            },
            "required": ["x", "y", "z", "yaw"],
        },
        "gt_actions": {"type": "array", "items": {"enum": [kind.value for kind in ActionKind]}},
        "goal": _POINT,
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"min": _POINT, "max": _POINT},
                "required": ["min", "max"],
            },
        },
        "frames": {"type": ["array", "null"], "items": {"type": "string"}},
        "shortest_length": {"type": ["number", "null"], "minimum": 0},
    },
    "required": ["id", "action_space", "instruction", "start", "gt_actions", "goal"],
}

KNOWN_FIELDS = ("schema_version", "id", "action_space", "instruction", "start", "gt_actions",
                "goal", "obstacles", "frames", "shortest_length")

_validator = Draft7Validator(EPISODE_SCHEMA)


def finite_point(values, name: str = "goal") -> Point:
    """3D point with finite coordinates; json.loads lets NaN and Infinity through."""
    point = tuple(float(v) for v in values)
    if len(point) != 3 or not all(math.isfinite(v) for v in point):
        raise SchemaViolation(f"{name} must be a finite 3D point, got {list(values)}")
    return point


@dataclass
class Episode:
    id: str
    action_space: str
    instruction: str
    start: Pose
    gt_actions: List[ActionKind]
    goal: Point
    obstacles: List[ObstacleBox] = field(default_factory=list)
    frames: Optional[List[str]] = None
    shortest_length: Optional[float] = None
    extra: Dict = field(default_factory=dict)

    def reference_rollout(self) -> RolloutResult:
        """Rollout of gt_actions from start; defines the reference trajectory."""
        return rollout(self.start, self.gt_actions, get_action_space(self.action_space), self.obstacles)

    def to_record(self) -> Dict:
        record = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "action_space": self.action_space,
            "instruction": self.instruction,
            "start": self.start.to_dict(),
            "gt_actions": [kind.value for kind in self.gt_actions],
            "goal": list(self.goal),
            "obstacles": [box.to_dict() for box in self.obstacles],
            "frames": self.frames,
            "shortest_length": self.shortest_length,
        }
        record.update(self.extra)
        return record

    @classmethod
    def from_record(cls, record: Dict) -> "Episode":
        errors = sorted(_validator.iter_errors(record), key=lambda e: list(e.path))
        if errors:
            raise SchemaViolation("; ".join(_describe(e) for e in errors))
        shortest = record.get("shortest_length")
        if shortest is not None and not math.isfinite(shortest):
            raise SchemaViolation(f"shortest_length must be finite, got {shortest}")
        try:
            get_action_space(record["action_space"])
            return cls(
                id=record["id"],
                action_space=record["action_space"],
                instruction=record["instruction"],
                start=Pose.from_dict(record["start"]),
                gt_actions=[ActionKind(name) for name in record["gt_actions"]],
                goal=finite_point(record["goal"]),
                obstacles=[ObstacleBox.from_dict(box) for box in record.get("obstacles", [])],
                frames=record.get("frames"),
                shortest_length=shortest,
                extra={k: v for k, v in record.items() if k not in KNOWN_FIELDS},
            )
        except ValueError as e:
            raise SchemaViolation(str(e))


def _describe(error) -> str:
    location = "/".join(str(p) for p in error.path) or "<record>"
    return f"{location}: {error.message}"


@dataclass
class LoadResult:
    episodes: List[Episode] = field(default_factory=list)
    diagnostics: List[Tuple[int, str]] = field(default_factory=list)


class EpisodeStore:
    """JSONL episode file."""

    def __init__(self, path: str):
        self.path = path

    def iter_lines(self) -> Iterator[Tuple[int, bytes]]:
        """Raw non-blank lines; decoding is per line so one bad byte sequence stays local."""
        with open(self.path, "rb") as f:
            for line_number, line in enumerate(f, start=1):
                if line.strip():
                    yield line_number, line

    def load(self) -> LoadResult:
        """
        Load every valid episode.

        Returns:
            LoadResult with episodes in file order and (line_number, message) diagnostics
        """
        result = LoadResult()
        for line_number, raw in self.iter_lines():
            try:
                record = json.loads(raw.decode("utf-8"))
                if not isinstance(record, dict):
                    raise SchemaViolation("record is not a JSON object")
                result.episodes.append(Episode.from_record(record))
            except UnicodeDecodeError as e:
                message = f"Invalid UTF-8: {e}"
            except json.JSONDecodeError as e:
                message = f"Invalid JSON: {e}"
            except SchemaViolation as e:
                message = f"Schema Validation Failed: {e}"
            else:
                continue
            logger.warning(f"{self.path}:{line_number}: {message}")
            result.diagnostics.append((line_number, message))

        logger.info(f"Loaded {len(result.episodes)} episodes from {self.path} ({len(result.diagnostics)} rejected)")
        return result

    def save(self, episodes: Sequence[Episode]):
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as f:
            for episode in episodes:
                f.write(json.dumps(episode.to_record(), ensure_ascii=False) + "\n")
        logger.info(f"Saved {len(episodes)} episodes to {self.path}")


def load_episodes(path: str) -> LoadResult:
    return EpisodeStore(path).load()


def save_episodes(episodes: Sequence[Episode], path: str):
    EpisodeStore(path).save(episodes)
