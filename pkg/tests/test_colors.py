"""Exhaustive conformance of the color mapping against a golden table."""
import itertools

from ocsis.colors import ColorCode, MessageKind, color_for_action, color_for_message, color_for_title
from ocsis.model import ActionKind, ActionStatus, ProcKind

# Golden transcription: status/kind -> color. NOT_APPLICABLE greys every
# kind; notes stay white and restrictions magenta regardless of status.
GOLDEN_ACTION = {}
for kind in ActionKind:
    GOLDEN_ACTION[(ActionStatus.NOT_APPLICABLE, kind)] = ColorCode.GREY
for status, base in [
    (ActionStatus.TODO, ColorCode.CYAN),
    (ActionStatus.DONE_AUTO, ColorCode.GREEN),
    (ActionStatus.DONE_MANUAL, ColorCode.GREEN),
    (ActionStatus.POSTPONED, ColorCode.AMBER),
]:
    GOLDEN_ACTION[(status, ActionKind.ACTION)] = base
    GOLDEN_ACTION[(status, ActionKind.CHECK)] = base
    GOLDEN_ACTION[(status, ActionKind.NOTE)] = ColorCode.WHITE
    GOLDEN_ACTION[(status, ActionKind.RESTRICTION)] = ColorCode.MAGENTA

GOLDEN_TITLE = {
    ProcKind.NORMAL: ColorCode.WHITE,
    ProcKind.CHECKLIST: ColorCode.WHITE,
    ProcKind.ABNORMAL: ColorCode.AMBER,
    ProcKind.EMERGENCY: ColorCode.RED,
}

GOLDEN_MESSAGE = {
    MessageKind.CAUTION: ColorCode.AMBER,
    MessageKind.WARNING: ColorCode.RED,
    MessageKind.NOTE: ColorCode.WHITE,
    MessageKind.INFO: ColorCode.WHITE,
    MessageKind.RESTRICTION: ColorCode.MAGENTA,
    MessageKind.PHASE_TITLE: ColorCode.WHITE,
}


def test_every_status_kind_combination_matches_golden():
    for status, kind in itertools.product(ActionStatus, ActionKind):
        assert color_for_action(status, kind) is GOLDEN_ACTION[(status, kind)], (status, kind)


def test_every_title_kind_matches_golden():
    for kind in ProcKind:
        assert color_for_title(kind) is GOLDEN_TITLE[kind]


def test_every_message_kind_matches_golden():
    for kind in MessageKind:
        assert color_for_message(kind) is GOLDEN_MESSAGE[kind]


def test_mapping_is_total():
    # Totality: no combination raises, every result is a ColorCode.
    for status, kind in itertools.product(ActionStatus, ActionKind):
        assert isinstance(color_for_action(status, kind), ColorCode)
    for kind in ProcKind:
        assert isinstance(color_for_title(kind), ColorCode)
    for kind in MessageKind:
        assert isinstance(color_for_message(kind), ColorCode)


def test_color_set_is_closed():
    seen = {color_for_action(s, k) for s, k in itertools.product(ActionStatus, ActionKind)}
    seen |= {color_for_title(k) for k in ProcKind}
    seen |= {color_for_message(k) for k in MessageKind}
    assert seen == set(ColorCode)
