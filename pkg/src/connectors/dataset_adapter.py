"""
Best-effort import of AerialVLN / OpenFly style annotation files.

The published annotation layout is not fixed, so records are matched by a
few common key names:

    id           episode_id | trajectory_id | id
    instruction  instruction (string, or {"instruction_text": ...})
    start        start_position [x, y, z] + start_rotation quaternion
    actions      actions | gt_actions (integer ids or action names)
    goal         goals[0].position | goal | reference_path[-1]
    frames       frames | images

Integer action ids: 0 stop, 1 move_forward, 2 turn_left, 3 turn_right,
4 ascend, 5 descend, 6 move_left, 7 move_right. Unmapped fields are kept
in Episode.extra. Files are either JSONL or one JSON document with an
"episodes" list.
"""

import json
import logging
from typing import Dict, List, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from src.db.episode_store import KNOWN_FIELDS, Episode, LoadResult, finite_point
from src.errors import SchemaViolation
from src.flight.kinematics import ActionKind, Pose, get_action_space

logger = logging.getLogger(__name__)

ACTION_IDS = {
    0: ActionKind.STOP,
    1: ActionKind.MOVE_FORWARD,
    2: ActionKind.TURN_LEFT,
    3: ActionKind.TURN_RIGHT,
    4: ActionKind.ASCEND,
    5: ActionKind.DESCEND,
    6: ActionKind.MOVE_LEFT,
    7: ActionKind.MOVE_RIGHT,
}

MAPPED_KEYS = ("episode_id", "trajectory_id", "id", "instruction", "start_position", "start_rotation",
               "actions", "gt_actions", "goals", "goal", "reference_path", "frames", "images",
               "shortest_length", "geodesic_distance")


def yaw_from_quaternion(quaternion: Sequence[float], scalar_first: bool = False) -> float:
    """Heading in degrees about +z from an [x, y, z, w] (or [w, x, y, z]) quaternion."""
    q = np.asarray(quaternion, dtype=np.float64)
    if q.shape != (4,):
        raise SchemaViolation(f"quaternion must have 4 components, got {list(quaternion)}")
    if scalar_first:
        q = np.roll(q, -1)
    return float(Rotation.from_quat(q).as_euler("zyx", degrees=True)[0])


def _first(record: Dict, *keys):
    for key in keys:
        if record.get(key) is not None:
            return record[key]
    return None


def _action(value) -> ActionKind:
    if isinstance(value, bool):
        raise SchemaViolation(f"invalid action {value!r}")
    if isinstance(value, int):
        if value not in ACTION_IDS:
            raise SchemaViolation(f"unknown action id {value}")
        return ACTION_IDS[value]
    if isinstance(value, str):
        try:
            return ActionKind.from_name(value)
        except ValueError as e:
            raise SchemaViolation(str(e))
    raise SchemaViolation(f"invalid action {value!r}")


def convert_record(record: Dict, space_name: str, scalar_first: bool = False) -> Episode:
    """
    Map one annotation record onto an Episode.

    Args:
        record: Source annotation record
        space_name: Action space the episode runs in
        scalar_first: Quaternions are stored [w, x, y, z]

    Returns:
        Episode whose gt_actions and start come from the record; the goal
        falls back to the rollout endpoint when the record carries none
    """
    space = get_action_space(space_name)
    episode_id = _first(record, "episode_id", "trajectory_id", "id")
    if episode_id is None:
        raise SchemaViolation("record has no episode id")

    instruction = record.get("instruction", "")
    if isinstance(instruction, dict):
        instruction = instruction.get("instruction_text", "")

    position = record.get("start_position")
    if position is None or len(position) != 3:
        raise SchemaViolation(f"{episode_id}: start_position must be [x, y, z]")
    rotation = record.get("start_rotation")
    yaw = yaw_from_quaternion(rotation, scalar_first) if rotation is not None else 0.0

    raw_actions = _first(record, "actions", "gt_actions")
    if raw_actions is None:
        raise SchemaViolation(f"{episode_id}: record has no actions")
    actions = [_action(a) for a in raw_actions]
    unsupported = [a.value for a in actions if a not in space.vocabulary]
    if unsupported:
        raise SchemaViolation(f"{episode_id}: actions outside {space.name}: {sorted(set(unsupported))}")

    try:
        start = Pose(float(position[0]), float(position[1]), float(position[2]), yaw)
    except (TypeError, ValueError) as e:
        raise SchemaViolation(f"{episode_id}: {e}")

    episode = Episode(
        id=str(episode_id),
        action_space=space.name,
        instruction=str(instruction),
        start=start,
        gt_actions=actions,
        goal=(0.0, 0.0, 0.0),
        frames=_first(record, "frames", "images"),
        shortest_length=_first(record, "shortest_length", "geodesic_distance"),
        extra={k: v for k, v in record.items() if k not in MAPPED_KEYS and k not in KNOWN_FIELDS},
    )

    goals = record.get("goals")
    if goals:
        goal = goals[0].get("position") if isinstance(goals[0], dict) else goals[0]
    else:
        goal = record.get("goal")
        if goal is None and record.get("reference_path"):
            goal = record["reference_path"][-1][:3]
    if goal is None:
        goal = episode.reference_rollout().final.position
    episode.goal = finite_point(goal)
    return episode


def _read_records(path: str) -> List:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError:
        document = None
    if isinstance(document, dict) and "episodes" in document:
        document = document["episodes"]
    if isinstance(document, list):
        return [(i, record, None) for i, record in enumerate(document, start=1)]

    rows = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append((line_number, json.loads(line), None))
        except json.JSONDecodeError as e:
            rows.append((line_number, None, f"Invalid JSON: {e}"))
    return rows


def import_annotations(path: str, space_name: str, scalar_first: bool = False) -> LoadResult:
    """
    Convert an annotation file into episodes.

    Records that cannot be mapped are reported as (index, message)
    diagnostics; the rest still load.
    """
    result = LoadResult()
    for index, record, error in _read_records(path):
        if error is None:
            try:
                if not isinstance(record, dict):
                    raise SchemaViolation("record is not a JSON object")
                result.episodes.append(convert_record(record, space_name, scalar_first))
                continue
            except (SchemaViolation, ValueError, TypeError, KeyError, IndexError) as e:
                error = f"Schema Validation Failed: {e}"
        logger.warning(f"{path}:{index}: {error}")
        result.diagnostics.append((index, error))

    logger.info(f"Imported {len(result.episodes)} {space_name} episodes from {path}")
    return result
