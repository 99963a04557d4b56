import math
import pytest

from src.brain.actionlang import (
    ActionCommand,
    command_for,
    decompose,
    parse_command,
    render_command,
    round_trip_check,
    segment_command,
)
from src.brain.preprocess import merge_actions
from src.errors import InvalidMagnitude, UnparsableAction, UnsupportedAction
from src.flight.kinematics import AERIALVLN, OPENFLY, ActionKind, ActionSpace, Pose, rollout

MF = ActionKind.MOVE_FORWARD
TL = ActionKind.TURN_LEFT


@pytest.mark.parametrize("cmd, text", [
    (ActionCommand(MF, 15), "The next action is move forward 15 units"),
    (ActionCommand(ActionKind.STOP), "The next action is stop"),
    (ActionCommand(TL, 45), "The next action is turn left 45 degrees"),
    (ActionCommand(ActionKind.ASCEND, 4), "The next action is ascend 4 units"),
])
def test_render_golden(cmd, text):
    assert render_command(cmd, AERIALVLN) == text


def test_merged_segment_renders_as_one_command():
    segment = merge_actions([TL, TL, TL], 3)[0]
    assert render_command(segment_command(segment, AERIALVLN), AERIALVLN) == "The next action is turn left 45 degrees"
    assert segment_command(segment, OPENFLY) == ActionCommand(TL, 90)


@pytest.mark.parametrize("text, expected", [
    ("The next action is move forward 15 units", ActionCommand(MF, 15)),
    ("turn right", ActionCommand(ActionKind.TURN_RIGHT, 15)),
    ("I think we should ASCEND   6 units now.", ActionCommand(ActionKind.ASCEND, 6)),
    ("Reached the roof. The next action is stop", ActionCommand(ActionKind.STOP)),
    ("the next action is turn left 30 degrees.", ActionCommand(TL, 30)),
])
def test_parse_examples(text, expected):
    assert parse_command(text, AERIALVLN) == expected


def test_number_before_verb_is_used_when_none_follows():
    assert parse_command("Climb 4 units: ascend.", AERIALVLN) == ActionCommand(ActionKind.ASCEND, 4)
    with pytest.raises(InvalidMagnitude):
        parse_command("After 2 seconds, move forward.", AERIALVLN)


def test_unparsable_text():
    with pytest.raises(UnparsableAction):
        parse_command("proceed to the plaza", AERIALVLN)
    with pytest.raises(UnparsableAction):
        parse_command("", AERIALVLN)
    with pytest.raises(UnparsableAction):
        parse_command("move left 3 units", OPENFLY)


def test_parser_cache_respects_vocabulary():
    assert parse_command("move left 5 units", AERIALVLN).kind is ActionKind.MOVE_LEFT
    restricted = ActionSpace(name="aerialvln", vocabulary=OPENFLY.vocabulary,
                             horizontal_step=5.0, vertical_step=2.0, turn_step=15.0)
    with pytest.raises(UnparsableAction):
        parse_command("move left 5 units", restricted)
    assert parse_command("move forward 10 units", restricted) == ActionCommand(MF, 10)


@pytest.mark.parametrize("text", [
    "move forward 7 units",
    "move forward 0 units",
    "move forward -5 units",
    "move forward 2.5 units",
    "turn left 20 degrees",
])
def test_invalid_magnitudes(text):
    with pytest.raises(InvalidMagnitude):
        parse_command(text, AERIALVLN)


@pytest.mark.parametrize("cmd, expected", [
    (ActionCommand(MF, 15), [MF, MF, MF]),
    (ActionCommand(ActionKind.ASCEND, 2), [ActionKind.ASCEND]),
    (ActionCommand(TL, 45), [TL, TL, TL]),
    (ActionCommand(ActionKind.STOP), [ActionKind.STOP]),
])
def test_decompose(cmd, expected):
    assert decompose(cmd, AERIALVLN) == expected


def test_decompose_rejects_unsupported():
    with pytest.raises(UnsupportedAction):
        decompose(ActionCommand(ActionKind.MOVE_RIGHT, 3), OPENFLY)
    with pytest.raises(InvalidMagnitude):
        decompose(ActionCommand(MF, None), AERIALVLN)


@pytest.mark.parametrize("space", [AERIALVLN, OPENFLY])
def test_every_command_round_trips(space):
    checked, failures = round_trip_check(space, max_count=6)
    assert failures == []
    assert checked == 6 * (len(space.vocabulary) - 1) + 1
    for kind in space.ordered_vocabulary():
        for count in ([1] if kind is ActionKind.STOP else range(1, 7)):
            cmd = command_for(kind, count, space)
            assert parse_command(render_command(cmd, space), space) == cmd
            assert len(decompose(cmd, space)) == count


@pytest.mark.parametrize("space", [AERIALVLN, OPENFLY])
def test_open_loop_matches_closed_form(space):
    for turns in range(int(360 / space.turn_step)):
        yaw = turns * space.turn_step
        start = Pose(10.0, -4.0, 30.0, yaw)
        for count in range(1, 4):
            cmd = command_for(MF, count, space)
            final = rollout(start, decompose(cmd, space), space).final
            distance = cmd.magnitude
            assert final.x == pytest.approx(10.0 + distance * math.cos(math.radians(yaw)), abs=1e-9)
            assert final.y == pytest.approx(-4.0 + distance * math.sin(math.radians(yaw)), abs=1e-9)
            assert final.z == 30.0

            turn = rollout(start, decompose(command_for(TL, count, space), space), space).final
            assert turn.position == start.position
            assert turn.yaw == pytest.approx((yaw + count * space.turn_step) % 360.0, abs=1e-9)
