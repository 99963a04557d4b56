"""
Task prompt templates for the three training tasks.
The text is opaque: it is formatted and stored, never interpreted.
"""

from typing import Dict

from src.brain.supervision import TaskKind

PROMPT_TEMPLATES: Dict[TaskKind, str] = {
    TaskKind.NAVIGATION: (
        "You are a drone navigating an outdoor city. The video frames show your flight so far "
        "and the last frame is your current view. Your instruction is: {instruction} "
        "Decide your next action. Answer with one sentence of the form "
        "\"The next action is <action> <amount>\"."
    ),
    TaskKind.SPATIAL_PERCEPTION: (
        "Look at the current aerial view and answer the question about the scene: {instruction}"
    ),
    TaskKind.TRAJECTORY_REASONING: (
        "The video frames show a drone flight. Summarize the route flown so far as a navigation "
        "instruction. Context: {instruction}"
    ),
}


def format_prompt(task: TaskKind, instruction: str) -> str:
    return PROMPT_TEMPLATES[task].format(instruction=instruction.strip())
