"""
Trajectory preprocessing: bounded run-length action merging, boundary
keyframe selection and history sampling.

Frame model: frame i is the observation captured before action i, so a
trajectory of n actions has n + 1 frames numbered 0..n.
"""

import logging
from dataclasses import dataclass
from itertools import chain, groupby, repeat
from typing import Iterable, List, Sequence, Union

from src.errors import EmptyHistory, InvalidPolicy, MalformedSegments
from src.flight.kinematics import ActionKind

logger = logging.getLogger(__name__)

DEFAULT_MERGE_CAP = 3


@dataclass(frozen=True)
class MergedSegment:
    kind: ActionKind
    count: int
    start_frame: int
    end_frame: int

    @property
    def token(self) -> str:
        """Merged-vocabulary token, e.g. "turn_left_x3"; STOP stays "stop"."""
        if self.kind is ActionKind.STOP:
            return self.kind.value
        return f"{self.kind.value}_x{self.count}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "count": self.count,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
        }


def merge_actions(actions: Sequence[ActionKind], merge_cap: int = DEFAULT_MERGE_CAP) -> List[MergedSegment]:
    """
    Merge consecutive identical actions into segments of at most `merge_cap`.

    Runs longer than the cap are split greedily from the front, so a run of 4
    with cap 3 becomes (3, 1).

    Args:
        actions: Primitive action sequence
        merge_cap: Maximum primitives per segment (1 disables merging)

    Returns:
        Segments whose frame spans partition [0, len(actions)]
    """
    if merge_cap < 1:
        raise ValueError(f"merge_cap must be >= 1, got {merge_cap}")

    segments = []
    frame = 0
    for kind, run in groupby(actions):
        remaining = sum(1 for _ in run)
        while remaining:
            count = min(remaining, merge_cap)
            segments.append(MergedSegment(kind, count, frame, frame + count))
            frame += count
            remaining -= count
    return segments


def expand_segments(segments: Iterable[MergedSegment]) -> List[ActionKind]:
    """Inverse of merge_actions."""
    return list(chain.from_iterable(repeat(seg.kind, seg.count) for seg in segments))


def max_run_length(actions: Sequence) -> int:
    return max((sum(1 for _ in run) for _, run in groupby(actions)), default=0)


def select_keyframes(segments: Sequence[MergedSegment], total_frames: int) -> List[int]:
    """
    Keyframes at the boundaries of merged segments.

    Boundaries introduced by the merge cap (a 4-run split 3+1) are kept.

    Args:
        segments: Output of merge_actions
        total_frames: Number of frames (len(actions) + 1)

    Returns:
        Sorted, deduplicated frame indices including 0 and total_frames - 1
    """
    if total_frames < 1:
        raise MalformedSegments(f"total_frames must be >= 1, got {total_frames}")
    if not segments:
        if total_frames != 1:
            raise MalformedSegments(f"no segments cover {total_frames} frames")
        return [0]

    expected_start = 0
    for i, seg in enumerate(segments):
        if seg.count < 1 or seg.end_frame - seg.start_frame != seg.count:
            raise MalformedSegments(f"segment {i} span [{seg.start_frame}, {seg.end_frame}] != count {seg.count}")
        if seg.start_frame != expected_start:
            raise MalformedSegments(f"segment {i} starts at {seg.start_frame}, expected {expected_start}")
        expected_start = seg.end_frame
    if expected_start != total_frames - 1:
        raise MalformedSegments(f"segments end at frame {expected_start}, trajectory has {total_frames} frames")

    boundaries = {0, total_frames - 1}
    for seg in segments:
        boundaries.add(seg.start_frame)
        boundaries.add(seg.end_frame)
    return sorted(boundaries)


# --- History policies ---

@dataclass(frozen=True)
class CurrentOnly:
    name = "current"


@dataclass(frozen=True)
class FifoBank:
    capacity: int
    name = "fifo"

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidPolicy(f"FifoBank capacity must be >= 1, got {self.capacity}")


@dataclass(frozen=True)
class LongHorizonUniform:
    budget: int = 8
    name = "uniform"

    def __post_init__(self):
        if self.budget < 2:
            raise InvalidPolicy(f"LongHorizonUniform budget must be >= 2, got {self.budget}")


HistoryPolicy = Union[CurrentOnly, FifoBank, LongHorizonUniform]


def make_history_policy(name: str, size: int = 8) -> HistoryPolicy:
    name = name.lower()
    if name == CurrentOnly.name:
        return CurrentOnly()
    if name == FifoBank.name:
        return FifoBank(size)
    if name == LongHorizonUniform.name:
        return LongHorizonUniform(size)
    raise InvalidPolicy(f"Unknown history policy: {name}")


def uniform_positions(n: int, k: int) -> List[int]:
    """
    k positions out of range(n) that always include 0 and n - 1.

    Uses floor(i * (n - 1) / (k - 1)); for n > k the spacing exceeds one so
    the positions are strictly increasing and never collide.
    """
    if n <= k:
        return list(range(n))
    return [i * (n - 1) // (k - 1) for i in range(k)]


def sample_history(frames: Sequence[int], policy: HistoryPolicy) -> List[int]:
    """
    Pick the frames shown to the model at the current step.

    Args:
        frames: Strictly increasing frame indices, last one is the current frame
        policy: CurrentOnly, FifoBank(k) or LongHorizonUniform(K)

    Returns:
        Selected frame indices in ascending order
    """
    if not frames:
        raise EmptyHistory("cannot sample history from an empty frame list")
    if any(b <= a for a, b in zip(frames, frames[1:])):
        raise ValueError("history frames must be strictly increasing")

    if isinstance(policy, CurrentOnly):
        return [frames[-1]]
    if isinstance(policy, FifoBank):
        return list(frames[-policy.capacity:])
    if isinstance(policy, LongHorizonUniform):
        return [frames[pos] for pos in uniform_positions(len(frames), policy.budget)]
    raise InvalidPolicy(f"Unsupported history policy: {policy!r}")


def uniform_keyframes(total_frames: int, k: int) -> List[int]:
    """Uniformly spaced keyframes, the baseline that boundary keyframes replace."""
    if k < 2:
        raise InvalidPolicy(f"k must be >= 2, got {k}")
    return uniform_positions(total_frames, k)
