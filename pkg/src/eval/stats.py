"""
Corpus statistics before and after action merging.
"""

import logging
from collections import Counter
from typing import Dict, Iterable, List, Sequence

import numpy as np

from src.brain.preprocess import DEFAULT_MERGE_CAP, merge_actions

logger = logging.getLogger(__name__)


def _length_summary(lengths: List[int]) -> Dict:
    if not lengths:
        return {"count": 0, "mean": 0.0, "min": 0, "max": 0, "median": 0.0, "histogram": {}}
    values = np.array(lengths, dtype=np.int64)
    return {
        "count": len(lengths),
        "mean": float(values.mean()),
        "min": int(values.min()),
        "max": int(values.max()),
        "median": float(np.median(values)),
        "histogram": {str(k): v for k, v in sorted(Counter(lengths).items())},
    }


def merged_token_counts(episodes: Iterable, merge_cap: int = DEFAULT_MERGE_CAP) -> Dict[str, int]:
    """Counts of merged tokens such as "turn_left_x3" across a corpus, sorted by token."""
    counts = Counter()
    for episode in episodes:
        counts.update(seg.token for seg in merge_actions(episode.gt_actions, merge_cap))
    return dict(sorted(counts.items()))


def preprocess_stats(episodes: Sequence, merge_cap: int = DEFAULT_MERGE_CAP) -> Dict:
    """
    Before/after merging statistics.

    Args:
        episodes: Episodes to summarize
        merge_cap: Merge cap

    Returns:
        Dictionary with primitive and merged token histograms, sequence-length
        distributions and the longest identical run left after merging
    """
    before_counts = Counter()
    before_lengths, after_lengths = [], []
    per_episode = []
    max_run_after = 0
    for episode in episodes:
        segments = merge_actions(episode.gt_actions, merge_cap)
        before_counts.update(kind.value for kind in episode.gt_actions)
        before_lengths.append(len(episode.gt_actions))
        after_lengths.append(len(segments))
        per_episode.append({"episode_id": episode.id, "before": len(episode.gt_actions), "after": len(segments)})
        max_run_after = max([max_run_after] + [seg.count for seg in segments])

    stats = {
        "merge_cap": merge_cap,
        "episodes": len(before_lengths),
        "before": {
            "actions": dict(sorted(before_counts.items())),
            "lengths": _length_summary(before_lengths),
        },
        "after": {
            "tokens": merged_token_counts(episodes, merge_cap),
            "lengths": _length_summary(after_lengths),
        },
        "max_run_after": max_run_after,
        "per_episode": per_episode,
    }
    logger.info(f"Merging with cap {merge_cap}: {sum(before_lengths)} actions -> {sum(after_lengths)} segments")
    return stats


def merge_sweep(episodes: Sequence, caps: Iterable[int]) -> List[Dict]:
    """Per-cap totals for a merge-cap ablation."""
    rows = []
    for cap in caps:
        stats = preprocess_stats(episodes, cap)
        rows.append({
            "merge_cap": cap,
            "segments": sum(row["after"] for row in stats["per_episode"]),
            "mean_length": stats["after"]["lengths"]["mean"],
            "vocabulary": len(stats["after"]["tokens"]),
            "max_run_after": stats["max_run_after"],
        })
    return rows
