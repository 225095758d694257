"""Dynamic color mapping from item status and kind to display color.

The mapping is total: every (status, kind) and every title or message kind
resolves to exactly one color. The tablet never derives colors itself; this
module is the single authority.
"""
from __future__ import annotations

from enum import Enum

from .model import ActionKind, ActionStatus, ProcKind


class ColorCode(Enum):
    CYAN = "CYAN"
    GREEN = "GREEN"
    AMBER = "AMBER"
    RED = "RED"
    WHITE = "WHITE"
    MAGENTA = "MAGENTA"
    GREY = "GREY"


class MessageKind(Enum):
    CAUTION = "caution"
    WARNING = "warning"
    NOTE = "note"
    INFO = "info"            # level 2/3 expansions
    RESTRICTION = "restriction"
    PHASE_TITLE = "phase_title"


_STATUS_COLORS = {
    ActionStatus.TODO: ColorCode.CYAN,
    ActionStatus.DONE_AUTO: ColorCode.GREEN,
    ActionStatus.DONE_MANUAL: ColorCode.GREEN,
    ActionStatus.POSTPONED: ColorCode.AMBER,
    ActionStatus.NOT_APPLICABLE: ColorCode.GREY,
}

_TITLE_COLORS = {
    ProcKind.NORMAL: ColorCode.WHITE,
    ProcKind.CHECKLIST: ColorCode.WHITE,
    ProcKind.ABNORMAL: ColorCode.AMBER,
    ProcKind.EMERGENCY: ColorCode.RED,
}

_MESSAGE_COLORS = {
    MessageKind.CAUTION: ColorCode.AMBER,
    MessageKind.WARNING: ColorCode.RED,
    MessageKind.NOTE: ColorCode.WHITE,
    MessageKind.INFO: ColorCode.WHITE,
    MessageKind.RESTRICTION: ColorCode.MAGENTA,
    MessageKind.PHASE_TITLE: ColorCode.WHITE,
}


def color_for_action(status: ActionStatus, kind: ActionKind) -> ColorCode:
    """Line color for an action. Not-applicable greys everything; notes and
    restrictions are otherwise colored by kind, not completion status."""
    if status is ActionStatus.NOT_APPLICABLE:
        return ColorCode.GREY
    if kind is ActionKind.NOTE:
        return ColorCode.WHITE
    if kind is ActionKind.RESTRICTION:
        return ColorCode.MAGENTA
    return _STATUS_COLORS[status]


def color_for_title(kind: ProcKind) -> ColorCode:
    return _TITLE_COLORS[kind]


def color_for_message(kind: MessageKind) -> ColorCode:
    return _MESSAGE_COLORS[kind]
