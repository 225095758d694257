"""Onboard context-sensitive procedure system.

Deterministic engine executing iBlock-modeled cockpit procedures against a
live flight-parameter stream, with a procedure DSL, scripted scenarios, a
wire protocol, and performance corrections.
"""
from .colors import ColorCode, MessageKind, color_for_action, color_for_message, color_for_title
from .conditions import (
    And,
    CmpOp,
    CmpParamConst,
    CmpParamParam,
    ConditionExpr,
    Not,
    Or,
    Sustained,
    TriState,
    TrueExpr,
    eval_condition,
    format_expr,
)
from .engine import (
    AcknowledgePopup,
    CheckAll,
    DeferProcedure,
    DisplayModel,
    MarkDone,
    NavigatePhase,
    OpenProcedure,
    ResumeFromReminder,
    Session,
    SessionConfig,
    Wait,
    new_session,
    procedure_set_hash,
)
from .errors import InvalidLevel, OcsisError, UnknownParameter
from .model import (
    Action,
    ActionKind,
    ActionStatus,
    FlightPhase,
    FlightState,
    IBlock,
    ParamDecl,
    ParamKind,
    ProcKind,
    Procedure,
    ProcedureSet,
    Registry,
    info_text,
)
from .perf import CorrectionEntry, PerfInput, corrected_performance, load_correction_table
from .scenario import Scenario, load_scenario, replay_trace, run_headless

__version__ = "0.1.0"
