"""
Step-wise navigation training tuples (history frames, instruction, next action)
built from an episode after action merging and keyframe selection.
"""

import logging
from dataclasses import dataclass, field
from typing import List

from src.brain.actionlang import render_command, segment_command
from src.brain.preprocess import (
    DEFAULT_MERGE_CAP,
    HistoryPolicy,
    LongHorizonUniform,
    merge_actions,
    sample_history,
    select_keyframes,
)
from src.brain.prompts import format_prompt
from src.brain.supervision import TaskKind
from src.flight.kinematics import get_action_space

logger = logging.getLogger(__name__)


@dataclass
class NavigationTuple:
    episode_id: str
    step: int
    history_frames: List[int]
    instruction: str
    prompt: str
    target: str
    action_token: str
    frame_refs: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "step": self.step,
            "history_frames": self.history_frames,
            "frame_refs": self.frame_refs,
            "instruction": self.instruction,
            "prompt": self.prompt,
            "target": self.target,
            "action_token": self.action_token,
        }


def build_navigation_tuples(episode, merge_cap: int = DEFAULT_MERGE_CAP,
                            policy: HistoryPolicy = None) -> List[NavigationTuple]:
    """
    One tuple per merged segment.

    The visual history at segment s is the set of boundary keyframes up to and
    including the segment's start frame, thinned by the history policy.

    Args:
        episode: Episode with gt_actions, instruction and optional frame refs
        merge_cap: Merge cap for action merging
        policy: History policy (default LongHorizonUniform(8))

    Returns:
        List of NavigationTuple in segment order
    """
    policy = policy or LongHorizonUniform(8)
    space = get_action_space(episode.action_space)
    segments = merge_actions(episode.gt_actions, merge_cap)
    if not segments:
        return []
    keyframes = select_keyframes(segments, len(episode.gt_actions) + 1)

    tuples = []
    for step, segment in enumerate(segments):
        visible = [f for f in keyframes if f <= segment.start_frame]
        history = sample_history(visible, policy)
        refs = [episode.frames[f] for f in history if f < len(episode.frames)] if episode.frames else []
        tuples.append(NavigationTuple(
            episode_id=episode.id,
            step=step,
            history_frames=history,
            instruction=episode.instruction,
            prompt=format_prompt(TaskKind.NAVIGATION, episode.instruction),
            target=render_command(segment_command(segment, space), space),
            action_token=segment.token,
            frame_refs=refs,
        ))
    logger.debug(f"Built {len(tuples)} navigation tuples for episode {episode.id}")
    return tuples
