"""Domain types: parameters, flight state, actions, iBlocks, procedures.

Everything here is immutable after construction and safe to share between
threads. Structural equality ignores source spans (they are parser metadata).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

from .errors import InvalidLevel, OcsisError, UnknownParameter

IDENT_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")

# Reserved pseudo-parameters, resolvable without declaration:
#   PHASE           enum over FlightPhase, always present (from FlightState.phase)
#   CHECK_ALL_DONE  bool, bound by the engine while evaluating an iBlock goal
PHASE_PARAM = "PHASE"
CHECK_ALL_DONE = "CHECK_ALL_DONE"

ParamValue = Union[int, float, str, bool]


class FlightPhase(Enum):
    COCKPIT_PREP = "COCKPIT_PREP"
    TAKEOFF = "TAKEOFF"
    CLIMB = "CLIMB"
    CRUISE = "CRUISE"
    DESCENT = "DESCENT"
    INITIAL_APPROACH = "INITIAL_APPROACH"
    FINAL_APPROACH = "FINAL_APPROACH"
    LANDING = "LANDING"
    GO_AROUND = "GO_AROUND"


PHASE_NAMES = tuple(p.name for p in FlightPhase)


class ParamKind(Enum):
    NUMBER = "number"
    BOOL = "bool"
    ENUM = "enum"


@dataclass(frozen=True)
class ParamDecl:
    name: str
    kind: ParamKind
    labels: tuple[str, ...] = ()
    unit: Optional[str] = None

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise OcsisError(f"bad parameter name {self.name!r}")
        if self.kind is ParamKind.ENUM and not self.labels:
            raise OcsisError(f"enum parameter {self.name} needs labels")

    def accepts(self, value: ParamValue) -> bool:
        if self.kind is ParamKind.BOOL:
            return isinstance(value, bool)
        if self.kind is ParamKind.NUMBER:
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        return isinstance(value, str) and value in self.labels


_PHASE_DECL = ParamDecl(PHASE_PARAM, ParamKind.ENUM, PHASE_NAMES)
_CHECK_ALL_DONE_DECL = ParamDecl(CHECK_ALL_DONE, ParamKind.BOOL)
RESERVED_PARAMS = {PHASE_PARAM: _PHASE_DECL, CHECK_ALL_DONE: _CHECK_ALL_DONE_DECL}


class Registry:
    """Declared flight parameters plus the reserved pseudo-parameters."""

    def __init__(self, decls: Mapping[str, ParamDecl] | None = None):
        self._decls: dict[str, ParamDecl] = dict(decls) if decls else {}

    def declare(self, decl: ParamDecl) -> None:
        if decl.name in RESERVED_PARAMS:
            raise OcsisError(f"{decl.name} is reserved")
        if decl.name in self._decls:
            raise OcsisError(f"duplicate parameter {decl.name}")
        self._decls[decl.name] = decl

    def resolve(self, name: str) -> ParamDecl:
        decl = self._decls.get(name) or RESERVED_PARAMS.get(name)
        if decl is None:
            raise UnknownParameter(name)
        return decl

    def __contains__(self, name: str) -> bool:
        return name in self._decls or name in RESERVED_PARAMS

    @property
    def decls(self) -> dict[str, ParamDecl]:
        return dict(self._decls)

    def __eq__(self, other) -> bool:
        return isinstance(other, Registry) and self._decls == other._decls

    def __repr__(self) -> str:
        return f"Registry({sorted(self._decls)})"


@dataclass(frozen=True)
class FlightState:
    """One snapshot from the simulator feed.

    Absent parameters are simply missing from `values`; evaluation treats
    them as Unknown rather than defaulting.
    """
    tick: int
    phase: FlightPhase
    values: Mapping[str, ParamValue] = field(default_factory=dict)

    def get(self, name: str):
        if name == PHASE_PARAM:
            return self.phase.name
        return self.values.get(name)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FlightState)
            and self.tick == other.tick
            and self.phase is other.phase
            and dict(self.values) == dict(other.values)
        )


class ActionKind(Enum):
    ACTION = "action"
    CHECK = "check"
    NOTE = "note"
    RESTRICTION = "restriction"


# Kinds the pilot performs; notes and restrictions are informational only.
PERFORMABLE_KINDS = (ActionKind.ACTION, ActionKind.CHECK)


class ActionStatus(Enum):
    TODO = "TODO"
    DONE_AUTO = "DONE_AUTO"
    DONE_MANUAL = "DONE_MANUAL"
    POSTPONED = "POSTPONED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


DONE_STATUSES = (ActionStatus.DONE_AUTO, ActionStatus.DONE_MANUAL)


@dataclass(frozen=True)
class Action:
    """One line of an iBlock. `label` doubles as the Level 1 text."""
    id: str
    label: str
    kind: ActionKind = ActionKind.ACTION
    level2: Optional[str] = None
    level3: Optional[str] = None
    detect: Optional["ConditionExpr"] = None  # noqa: F821 (defined in conditions)
    applicability: Optional["ConditionExpr"] = None

    def __post_init__(self):
        if not self.label:
            raise OcsisError(f"action {self.id}: empty label")
        if self.kind not in PERFORMABLE_KINDS and self.detect is not None:
            raise OcsisError(f"{self.kind.value} {self.id} cannot carry detect")


def info_text(action: Action, level: int) -> Optional[str]:
    """Level 1 is always present; 2 and 3 return None when unauthored."""
    if level == 1:
        return action.label
    if level == 2:
        return action.level2
    if level == 3:
        return action.level3
    raise InvalidLevel(f"level {level!r} not in 1..3")


@dataclass(frozen=True)
class IBlock:
    id: str
    trigger: "ConditionExpr"
    context: "ConditionExpr"
    goal: "ConditionExpr"
    actions: tuple[Action, ...] = ()
    abnormal: tuple[tuple["ConditionExpr", str], ...] = ()


class ProcKind(Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"
    EMERGENCY = "emergency"
    CHECKLIST = "checklist"

    @property
    def default_priority(self) -> int:
        # Lower is more urgent; ties broken by declaration order.
        return {
            ProcKind.EMERGENCY: 0,
            ProcKind.ABNORMAL: 1,
            ProcKind.NORMAL: 2,
            ProcKind.CHECKLIST: 3,
        }[self]


@dataclass(frozen=True)
class Procedure:
    id: str
    title: str
    kind: ProcKind
    phase: FlightPhase
    iblocks: tuple[IBlock, ...]
    embeds: tuple[str, ...] = ()
    priority: Optional[int] = None
    ecam: bool = False  # popups mirrored on the simulated-ECAM channel

    def __post_init__(self):
        if not self.iblocks:
            raise OcsisError(f"procedure {self.id} has no iblocks")

    @property
    def effective_priority(self) -> int:
        return self.kind.default_priority if self.priority is None else self.priority


@dataclass(frozen=True)
class ProcedureSet:
    registry: Registry
    procedures: tuple[Procedure, ...]
    # Parser metadata for lint spans, keyed by dotted path; never semantic.
    spans: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        problems = validate_set(self.registry, self.procedures)
        if problems:
            raise OcsisError("; ".join(problems))

    @property
    def by_id(self) -> dict[str, Procedure]:
        return {p.id: p for p in self.procedures}

    @property
    def entry_table(self) -> dict[FlightPhase, tuple[str, ...]]:
        table: dict[FlightPhase, list[str]] = {ph: [] for ph in FlightPhase}
        for proc in self.procedures:
            table[proc.phase].append(proc.id)
        return {ph: tuple(ids) for ph, ids in table.items()}

    def decl_index(self, proc_id: str) -> int:
        for i, p in enumerate(self.procedures):
            if p.id == proc_id:
                return i
        raise OcsisError(f"unknown procedure {proc_id}")


def validate_set(registry: Registry, procedures: tuple[Procedure, ...]) -> list[str]:
    """Set-level invariants; returns human-readable problems (empty = valid)."""
    problems = []
    ids = [p.id for p in procedures]
    for pid in sorted({i for i in ids if ids.count(i) > 1}):
        problems.append(f"duplicate procedure id {pid}")
    known = set(ids)
    for proc in procedures:
        seen_ib = set()
        for ib in proc.iblocks:
            if ib.id in seen_ib:
                problems.append(f"{proc.id}: duplicate iblock id {ib.id}")
            seen_ib.add(ib.id)
            seen_act = set()
            for act in ib.actions:
                if act.id in seen_act:
                    problems.append(f"{proc.id}.{ib.id}: duplicate action id {act.id}")
                seen_act.add(act.id)
            for _, target in ib.abnormal:
                if target not in known:
                    problems.append(f"{proc.id}.{ib.id}: abnormal link to undeclared {target}")
        for target in proc.embeds:
            if target not in known:
                problems.append(f"{proc.id}: embed of undeclared {target}")
    cycle = find_embed_cycle(procedures)
    if cycle:
        problems.append("embed cycle: " + " -> ".join(cycle))
    return problems


def find_embed_cycle(procedures: tuple[Procedure, ...]) -> Optional[list[str]]:
    """First cycle in the embed graph (edges taken in declaration order), or None."""
    graph = {p.id: [e for e in p.embeds if any(q.id == e for q in procedures)]
             for p in procedures}
    WHITE, GREY, BLACK = 0, 1, 2
    color = {pid: WHITE for pid in graph}
    stack: list[str] = []

    def visit(node: str) -> Optional[list[str]]:
        color[node] = GREY
        stack.append(node)
        for nxt in graph[node]:
            if color[nxt] == GREY:
                return stack[stack.index(nxt):] + [nxt]
            if color[nxt] == WHITE:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for pid in graph:
        if color[pid] == WHITE:
            found = visit(pid)
            if found:
                return found
    return None


def action_ref(proc_id: str, iblock_id: str, action_id: str) -> str:
    return f"{proc_id}.{iblock_id}.{action_id}"


def iblock_ref(proc_id: str, iblock_id: str) -> str:
    return f"{proc_id}.{iblock_id}"


def split_ref(ref: str) -> tuple[str, ...]:
    parts = tuple(ref.split("."))
    if not all(IDENT_RE.match(p) for p in parts):
        raise OcsisError(f"malformed ref {ref!r}")
    return parts
