"""
Textual action commands.
Renders commands with the canonical template, parses model output with a
regular expression, and decomposes commands into fixed-step primitives for
open-loop execution.

Canonical templates (golden-tested):
    "The next action is <verb phrase> <magnitude> units"     translations, vertical moves
    "The next action is <verb phrase> <magnitude> degrees"   turns
    "The next action is stop"

Parser alternation (case-insensitive, whitespace-tolerant, word-bounded), built
per action space from VERB_PHRASES:
    \\b(move\\s+forward|turn\\s+left|turn\\s+right|ascend|descend|move\\s+left|move\\s+right|stop)\\b
The first verb occurrence in the text wins. The magnitude is the first number
after the verb, else the first number anywhere in the text, else one step.
"""

import re
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from src.errors import InvalidMagnitude, UnparsableAction
from src.flight.kinematics import ACTION_ORDER, TURNS, ActionKind, ActionSpace
from src.brain.preprocess import MergedSegment

logger = logging.getLogger(__name__)

TEMPLATE_PREFIX = "The next action is"

VERB_PHRASES: Dict[ActionKind, str] = {
    ActionKind.MOVE_FORWARD: "move forward",
    ActionKind.TURN_LEFT: "turn left",
    ActionKind.TURN_RIGHT: "turn right",
    ActionKind.ASCEND: "ascend",
    ActionKind.DESCEND: "descend",
    ActionKind.MOVE_LEFT: "move left",
    ActionKind.MOVE_RIGHT: "move right",
    ActionKind.STOP: "stop",
}

_NUMBER = re.compile(r"(?<![\w.])(-?\d+(?:\.\d+)?)(?!\w|\.\d)")
# keyed by name and vocabulary; custom spaces may reuse a built-in name
_PARSERS: Dict[Tuple[str, FrozenSet[ActionKind]], re.Pattern] = {}

PrimitiveSequence = List[ActionKind]


@dataclass(frozen=True)
class ActionCommand:
    kind: ActionKind
    magnitude: Optional[int] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "magnitude": self.magnitude}


def unit_word(kind: ActionKind) -> str:
    return "degrees" if kind in TURNS else "units"


def step_count(cmd: ActionCommand, space: ActionSpace) -> int:
    """
    Number of primitives a command stands for.

    Raises:
        InvalidMagnitude: magnitude missing, non-positive or not a step multiple
    """
    space.require(cmd.kind)
    if cmd.kind is ActionKind.STOP:
        return 1
    if cmd.magnitude is None or cmd.magnitude <= 0:
        raise InvalidMagnitude(f"{cmd.kind.value} needs a positive magnitude, got {cmd.magnitude}")
    step = space.step_for(cmd.kind)
    steps = cmd.magnitude / step
    if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
        raise InvalidMagnitude(
            f"{cmd.magnitude} {unit_word(cmd.kind)} is not a multiple of the {step:g} step in {space.name}"
        )
    return int(round(steps))


def command_for(kind: ActionKind, count: int, space: ActionSpace) -> ActionCommand:
    """Command covering `count` primitives of `kind`."""
    if kind is ActionKind.STOP:
        return ActionCommand(kind)
    magnitude = count * space.step_for(kind)
    if not float(magnitude).is_integer():
        raise InvalidMagnitude(f"{count} x {kind.value} gives non-integer magnitude {magnitude}")
    return ActionCommand(kind, int(magnitude))


def segment_command(segment: MergedSegment, space: ActionSpace) -> ActionCommand:
    return command_for(segment.kind, segment.count, space)


def verb_clause(cmd: ActionCommand, space: ActionSpace) -> str:
    """"move forward 15 units" without the template prefix; used for instructions too."""
    step_count(cmd, space)
    if cmd.kind is ActionKind.STOP:
        return VERB_PHRASES[ActionKind.STOP]
    return f"{VERB_PHRASES[cmd.kind]} {cmd.magnitude} {unit_word(cmd.kind)}"


def render_command(cmd: ActionCommand, space: ActionSpace) -> str:
    return f"{TEMPLATE_PREFIX} {verb_clause(cmd, space)}"


def _parser_for(space: ActionSpace) -> re.Pattern:
    key = (space.name, space.vocabulary)
    pattern = _PARSERS.get(key)
    if pattern is None:
        verbs = [VERB_PHRASES[kind].replace(" ", r"\s+") for kind in ACTION_ORDER if kind in space.vocabulary]
        pattern = re.compile(r"\b(" + "|".join(verbs) + r")\b", re.IGNORECASE)
        _PARSERS[key] = pattern
    return pattern


def _kind_for_phrase(phrase: str) -> ActionKind:
    normalized = " ".join(phrase.lower().split())
    for kind, verb in VERB_PHRASES.items():
        if verb == normalized:
            return kind
    raise UnparsableAction(f"unknown verb phrase {phrase!r}")


def parse_command(text: str, space: ActionSpace) -> ActionCommand:
    """
    Extract an action command from free-form model output.

    Args:
        text: e.g. "The next action is move forward 15 units"
        space: Active action space; only its verbs are recognized

    Returns:
        Validated ActionCommand

    Raises:
        UnparsableAction: no verb of the vocabulary occurs in text
        InvalidMagnitude: magnitude is not a positive multiple of the step
    """
    match = _parser_for(space).search(text or "")
    if match is None:
        raise UnparsableAction(f"no {space.name} action verb in {text!r}")
    kind = _kind_for_phrase(match.group(1))
    if kind is ActionKind.STOP:
        return ActionCommand(kind)

    number = _NUMBER.search(text, match.end()) or _NUMBER.search(text)
    if number is None:
        return command_for(kind, 1, space)

    literal = number.group(1)
    if not literal.lstrip("-").isdigit():
        raise InvalidMagnitude(f"magnitude {literal} is not an integer")
    cmd = ActionCommand(kind, int(literal))
    step_count(cmd, space)
    return cmd


def decompose(cmd: ActionCommand, space: ActionSpace) -> PrimitiveSequence:
    """Fixed-step primitives executed open-loop; STOP maps to a single STOP."""
    return [cmd.kind] * step_count(cmd, space)


def round_trip_check(space: ActionSpace, max_count: int = 3) -> Tuple[int, List[str]]:
    """
    Render then parse every command of up to `max_count` steps.

    Returns:
        (number of commands checked, rendered texts that did not parse back)
    """
    failures = []
    checked = 0
    for kind in space.ordered_vocabulary():
        counts = [1] if kind is ActionKind.STOP else range(1, max_count + 1)
        for count in counts:
            cmd = command_for(kind, count, space)
            text = render_command(cmd, space)
            checked += 1
            try:
                if parse_command(text, space) != cmd:
                    failures.append(text)
            except ValueError:
                failures.append(text)
    return checked, failures
