"""The deterministic execution engine.

A Session consumes one totally ordered stream of flight states and pilot
commands and emits EngineEvents. It is single-writer: callers must
serialize apply_state/apply_command; display_model and snapshot are
read-only projections safe to call from the same serialized context.

Per state update the engine works in a fixed order: applicability of every
action, auto-detection in the current iBlock, contradiction warnings, goal
advancement (cascading through completions and returns), abnormal branches
of the current iBlock, then global procedure triggers by (priority,
declaration order). Determinism everywhere: no clocks, no randomness, no
unordered iteration.
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import events as ev
from .colors import ColorCode, color_for_action, color_for_message, color_for_title, MessageKind
from .conditions import And, TriState, eval_condition, max_sustain
from .errors import OcsisError
from .model import (
    CHECK_ALL_DONE,
    Action,
    ActionKind,
    ActionStatus,
    DONE_STATUSES,
    FlightPhase,
    FlightState,
    IBlock,
    PERFORMABLE_KINDS,
    ProcKind,
    Procedure,
    ProcedureSet,
    action_ref,
    iblock_ref,
    split_ref,
)
from .perf import CorrectionEntry, PerfInput, corrected_performance

SNAPSHOT_FORMAT = "ocsis-snapshot"
SNAPSHOT_VERSION = 1

MIN_HISTORY = 16


class InvalidSet(OcsisError):
    pass


class StaleTick(OcsisError):
    pass


class UnknownRef(OcsisError):
    pass


class IllegalTransition(OcsisError):
    pass


class HashMismatch(OcsisError):
    pass


class VersionUnsupported(OcsisError):
    pass


# ---------------------------------------------------------------------------
# Pilot commands

@dataclass(frozen=True)
class MarkDone:
    ref: str


@dataclass(frozen=True)
class Wait:
    ref: str


@dataclass(frozen=True)
class CheckAll:
    ref: str  # PROC.IBLOCK


@dataclass(frozen=True)
class DeferProcedure:
    proc: str


@dataclass(frozen=True)
class OpenProcedure:
    proc: str


@dataclass(frozen=True)
class AcknowledgePopup:
    proc: str
    accept: bool  # False = "later"


@dataclass(frozen=True)
class NavigatePhase:
    phase: FlightPhase


@dataclass(frozen=True)
class ResumeFromReminder:
    proc: str


PilotCommand = (
    MarkDone | Wait | CheckAll | DeferProcedure | OpenProcedure
    | AcknowledgePopup | NavigatePhase | ResumeFromReminder
)


def format_command(cmd: PilotCommand) -> str:
    """Canonical text form, shared by scenario files, traces, and the wire."""
    if isinstance(cmd, MarkDone):
        return f"done {cmd.ref}"
    if isinstance(cmd, Wait):
        return f"wait {cmd.ref}"
    if isinstance(cmd, CheckAll):
        return f"checkall {cmd.ref}"
    if isinstance(cmd, DeferProcedure):
        return f"defer {cmd.proc}"
    if isinstance(cmd, OpenProcedure):
        return f"open {cmd.proc}"
    if isinstance(cmd, AcknowledgePopup):
        return f"ack {cmd.proc} {'accept' if cmd.accept else 'later'}"
    if isinstance(cmd, NavigatePhase):
        return f"page {cmd.phase.name}"
    if isinstance(cmd, ResumeFromReminder):
        return f"resume {cmd.proc}"
    raise OcsisError(f"unknown command {cmd!r}")


def parse_command(text: str) -> PilotCommand:
    parts = text.split()
    if not parts:
        raise OcsisError("empty command")
    op, args = parts[0], parts[1:]
    try:
        if op == "done" and len(args) == 1:
            return MarkDone(args[0])
        if op == "wait" and len(args) == 1:
            return Wait(args[0])
        if op == "checkall" and len(args) == 1:
            return CheckAll(args[0])
        if op == "defer" and len(args) == 1:
            return DeferProcedure(args[0])
        if op == "open" and len(args) == 1:
            return OpenProcedure(args[0])
        if op == "ack" and len(args) == 2 and args[1] in ("accept", "later"):
            return AcknowledgePopup(args[0], args[1] == "accept")
        if op == "page" and len(args) == 1:
            return NavigatePhase(FlightPhase[args[0]])
        if op == "resume" and len(args) == 1:
            return ResumeFromReminder(args[0])
    except KeyError:
        raise OcsisError(f"unknown flight phase in command {text!r}") from None
    raise OcsisError(f"malformed command {text!r}")


# ---------------------------------------------------------------------------
# Display projection

@dataclass(frozen=True)
class DisplayLine:
    ref: str
    kind: str  # title | action | check | note | restriction | link | phase_title
    text: str
    color: ColorCode
    status: Optional[ActionStatus] = None
    level2: Optional[str] = None
    level3: Optional[str] = None
    indent: int = 0
    current: bool = False

    def to_wire(self) -> dict:
        return {
            "ref": self.ref,
            "kind": self.kind,
            "text": self.text,
            "color": self.color.value,
            "status": self.status.value if self.status else None,
            "level2": self.level2,
            "level3": self.level3,
            "indent": self.indent,
            "current": self.current,
        }


@dataclass(frozen=True)
class DisplayModel:
    tick: int
    phase: Optional[str]
    view_phase: str
    phase_menu: tuple[str, ...]
    lines: tuple[DisplayLine, ...]
    popup: Optional[dict]
    reminder_bar: tuple[dict, ...]
    active_procedure: Optional[str]
    page_cursor: int = 0
    perf_note: Optional[str] = None

    def to_wire(self) -> dict:
        return {
            "tick": self.tick,
            "phase": self.phase,
            "view_phase": self.view_phase,
            "phase_menu": list(self.phase_menu),
            "lines": [ln.to_wire() for ln in self.lines],
            "popup": self.popup,
            "reminder_bar": list(self.reminder_bar),
            "active_procedure": self.active_procedure,
            "page_cursor": self.page_cursor,
            "perf_note": self.perf_note,
        }


@dataclass(frozen=True)
class SessionConfig:
    history_min: int = MIN_HISTORY
    corrections: Optional[tuple[CorrectionEntry, ...]] = None
    vref_param: str = "VREF_KT"
    ldist_param: str = "LDG_DIST_REF_M"


def procedure_set_hash(pset: ProcedureSet) -> str:
    from .dsl.formatter import canonical_format

    return hashlib.sha256(canonical_format(pset).encode()).hexdigest()


class Session:
    """Execution state for one procedure set. See module docstring."""

    def __init__(self, pset: ProcedureSet, config: SessionConfig | None = None):
        if not isinstance(pset, ProcedureSet):
            raise InvalidSet("not a ProcedureSet")
        self.pset = pset
        self.config = config or SessionConfig()
        self.set_hash = procedure_set_hash(pset)
        self.by_id = pset.by_id
        self.entry_table = pset.entry_table

        bound = self.config.history_min
        for proc in pset.procedures:
            for ib in proc.iblocks:
                for expr in self._iblock_exprs(ib):
                    bound = max(bound, max_sustain(expr))
        self.history: deque[FlightState] = deque(maxlen=bound)

        self.tick = 0
        self.seq = 0
        self._arrival = 0
        self.statuses: dict[str, ActionStatus] = {}
        for proc in pset.procedures:
            for ib in proc.iblocks:
                for act in ib.actions:
                    self.statuses[action_ref(proc.id, ib.id, act.id)] = ActionStatus.TODO
        self.stack: list[str] = []
        self.cursors: dict[str, int] = {p.id: 0 for p in pset.procedures}
        self.deferred: list[str] = []
        self.popup_queue: list[tuple[int, int, int, str]] = []
        self.completed: set[str] = set()
        self.armed: dict[str, bool] = {p.id: True for p in pset.procedures}
        self.branch_armed: dict[str, bool] = {}
        self.contradicted: set[str] = set()
        self.view_phase: Optional[FlightPhase] = None
        self.page_cursors: dict[str, int] = {}
        self.event_log: list[ev.EngineEvent] = []

        self._decl_index = {p.id: i for i, p in enumerate(pset.procedures)}
        self._trigger_order = sorted(
            pset.procedures, key=lambda p: (p.effective_priority, self._decl_index[p.id]))
        self._trigger_exprs = {
            p.id: And((p.iblocks[0].trigger, p.iblocks[0].context)) for p in pset.procedures}

    @staticmethod
    def _iblock_exprs(ib: IBlock) -> Iterable:
        yield ib.trigger
        yield ib.context
        yield ib.goal
        for cond, _ in ib.abnormal:
            yield cond
        for act in ib.actions:
            if act.detect is not None:
                yield act.detect
            if act.applicability is not None:
                yield act.applicability

    # -- event plumbing -----------------------------------------------------

    def _emit(self, out: list, cls, **kw) -> None:
        self.seq += 1
        event = cls(seq=self.seq, tick=self.tick, **kw)
        self.event_log.append(event)
        out.append(event)

    def export_event_log(self) -> str:
        return "".join(e.render_log() + "\n" for e in self.event_log)

    # -- state input ----------------------------------------------------------

    def apply_state(self, state: FlightState) -> list[ev.EngineEvent]:
        if state.tick <= self.tick:
            raise StaleTick(f"tick {state.tick} not after {self.tick}")
        for name, value in state.values.items():
            decl = self.pset.registry.resolve(name)
            if not decl.accepts(value):
                raise OcsisError(f"{name}: value {value!r} outside declared type")
        self.history.append(state)
        self.tick = state.tick

        out: list[ev.EngineEvent] = []
        self._applicability_pass(out)
        self._autodetect_pass(out)
        self._contradiction_pass(out)
        self._advance_goals(out)
        self._abnormal_pass(out)
        self._trigger_pass(out)
        return out

    def _eval(self, expr, env=None) -> TriState:
        if not self.history:
            return TriState.UNKNOWN
        return eval_condition(expr, self.history, self.pset.registry, env)

    def _applicability_pass(self, out: list) -> None:
        for proc in self.pset.procedures:
            for ib in proc.iblocks:
                for act in ib.actions:
                    if act.applicability is None:
                        continue
                    ref = action_ref(proc.id, ib.id, act.id)
                    status = self.statuses[ref]
                    v = self._eval(act.applicability)
                    if status is ActionStatus.TODO and v is TriState.FALSE:
                        self._set_status(out, ref, ActionStatus.NOT_APPLICABLE)
                    elif status is ActionStatus.NOT_APPLICABLE and v is TriState.TRUE:
                        self._set_status(out, ref, ActionStatus.TODO)

    def _set_status(self, out: list, ref: str, new: ActionStatus) -> None:
        old = self.statuses[ref]
        self.statuses[ref] = new
        self._emit(out, ev.ActionStatusChanged, ref=ref, old=old, new=new)

    def _current_iblock(self) -> Optional[tuple[Procedure, IBlock]]:
        if not self.stack:
            return None
        proc = self.by_id[self.stack[-1]]
        cur = self.cursors[proc.id]
        if cur >= len(proc.iblocks):
            return None
        return proc, proc.iblocks[cur]

    def _autodetect_pass(self, out: list) -> None:
        top = self._current_iblock()
        if top is None:
            return
        proc, ib = top
        for act in ib.actions:
            if act.kind not in PERFORMABLE_KINDS or act.detect is None:
                continue
            ref = action_ref(proc.id, ib.id, act.id)
            if self.statuses[ref] not in (ActionStatus.TODO, ActionStatus.POSTPONED):
                continue
            if self._eval(act.detect) is TriState.TRUE:
                self.statuses[ref] = ActionStatus.DONE_AUTO
                self._emit(out, ev.ActionAutoCompleted, ref=ref)

    def _contradiction_pass(self, out: list) -> None:
        for proc in self.pset.procedures:
            for ib in proc.iblocks:
                for act in ib.actions:
                    if act.detect is None:
                        continue
                    ref = action_ref(proc.id, ib.id, act.id)
                    if self.statuses[ref] not in DONE_STATUSES:
                        self.contradicted.discard(ref)
                        continue
                    v = self._eval(act.detect)
                    if v is TriState.FALSE and ref not in self.contradicted:
                        self.contradicted.add(ref)
                        self._emit(out, ev.DoneContradicted, ref=ref)
                    elif v is TriState.TRUE:
                        self.contradicted.discard(ref)

    def _check_all_done(self, proc: Procedure, ib: IBlock) -> bool:
        for act in ib.actions:
            if act.kind not in PERFORMABLE_KINDS:
                continue
            status = self.statuses[action_ref(proc.id, ib.id, act.id)]
            if status is ActionStatus.NOT_APPLICABLE:
                continue
            if status not in DONE_STATUSES:
                return False
        return True

    def _advance_goals(self, out: list) -> None:
        if not self.history:
            return
        while self.stack:
            proc = self.by_id[self.stack[-1]]
            cur = self.cursors[proc.id]
            if cur >= len(proc.iblocks):
                self._complete_top(out)
                continue
            ib = proc.iblocks[cur]
            env = {CHECK_ALL_DONE: self._check_all_done(proc, ib)}
            if self._eval(ib.goal, env) is not TriState.TRUE:
                break
            self._emit(out, ev.GoalReached, iblock=iblock_ref(proc.id, ib.id))
            self.cursors[proc.id] = cur + 1
            if cur + 1 >= len(proc.iblocks):
                self._complete_top(out)

    def _complete_top(self, out: list) -> None:
        proc_id = self.stack.pop()
        self.completed.add(proc_id)
        self._emit(out, ev.ProcedureCompleted, proc=proc_id)
        if self.stack:
            parent = self.stack[-1]
            self._emit(out, ev.ProcedureReturned, parent=parent, cursor=self.cursors[parent])

    def _engaged(self, proc_id: str) -> bool:
        return (
            proc_id in self.stack
            or proc_id in self.deferred
            or any(q[3] == proc_id for q in self.popup_queue)
        )

    def _raise_popup(self, out: list, proc_id: str) -> None:
        proc = self.by_id[proc_id]
        self._arrival += 1
        entry = (proc.effective_priority, self._decl_index[proc_id], self._arrival, proc_id)
        self.popup_queue.append(entry)
        self.popup_queue.sort(key=lambda q: (q[0], q[1], q[2]))
        self._emit(out, ev.PopupRaised, proc=proc_id, ecam=proc.ecam)

    def _abnormal_pass(self, out: list) -> None:
        top = self._current_iblock()
        if top is None or not self.history:
            return
        proc, ib = top
        for idx, (cond, target) in enumerate(ib.abnormal):
            key = f"{proc.id}.{ib.id}.{idx}"
            v = self._eval(cond)
            if v is TriState.TRUE:
                if self.branch_armed.get(key, True):
                    self.branch_armed[key] = False
                    if not self._engaged(target):
                        self._emit(out, ev.AbnormalBranch,
                                   iblock=iblock_ref(proc.id, ib.id), proc=target)
                        self._raise_popup(out, target)
            elif v is TriState.FALSE:
                self.branch_armed[key] = True

    def _trigger_pass(self, out: list) -> None:
        if not self.history:
            return
        for proc in self._trigger_order:
            v = self._eval(self._trigger_exprs[proc.id])
            if v is TriState.TRUE:
                if self.armed[proc.id]:
                    self.armed[proc.id] = False
                    if not self._engaged(proc.id):
                        self._raise_popup(out, proc.id)
            elif v is TriState.FALSE:
                self.armed[proc.id] = True

    # -- commands ---------------------------------------------------------------

    def apply_command(self, cmd: PilotCommand) -> list[ev.EngineEvent]:
        out: list[ev.EngineEvent] = []
        if isinstance(cmd, MarkDone):
            self._manual_transition(out, cmd.ref, done=True)
            self._advance_goals(out)
        elif isinstance(cmd, Wait):
            self._manual_transition(out, cmd.ref, done=False)
        elif isinstance(cmd, CheckAll):
            self._check_all(out, cmd.ref)
            self._advance_goals(out)
        elif isinstance(cmd, DeferProcedure):
            self._defer(out, cmd.proc)
        elif isinstance(cmd, OpenProcedure):
            self._open(out, cmd.proc)
        elif isinstance(cmd, AcknowledgePopup):
            self._acknowledge(out, cmd.proc, cmd.accept)
        elif isinstance(cmd, NavigatePhase):
            self.view_phase = cmd.phase
        elif isinstance(cmd, ResumeFromReminder):
            self._resume(out, cmd.proc)
        else:
            raise OcsisError(f"unknown command {cmd!r}")
        return out

    def _resolve_action(self, ref: str) -> Action:
        parts = split_ref(ref)
        if len(parts) != 3:
            raise UnknownRef(f"{ref} is not PROC.IBLOCK.ACTION")
        proc = self.by_id.get(parts[0])
        if proc is None:
            raise UnknownRef(f"unknown procedure {parts[0]}")
        for ib in proc.iblocks:
            if ib.id == parts[1]:
                for act in ib.actions:
                    if act.id == parts[2]:
                        return act
                raise UnknownRef(f"unknown action {ref}")
        raise UnknownRef(f"unknown iblock {parts[0]}.{parts[1]}")

    def _manual_transition(self, out: list, ref: str, done: bool) -> None:
        act = self._resolve_action(ref)
        if act.kind not in PERFORMABLE_KINDS:
            raise IllegalTransition(f"{act.kind.value} lines are informational")
        status = self.statuses[ref]
        if done:
            if status not in (ActionStatus.TODO, ActionStatus.POSTPONED):
                raise IllegalTransition(f"cannot mark {status.value} action done")
            self._set_status(out, ref, ActionStatus.DONE_MANUAL)
        else:
            if status is not ActionStatus.TODO:
                raise IllegalTransition(f"cannot postpone {status.value} action")
            self._set_status(out, ref, ActionStatus.POSTPONED)

    def _check_all(self, out: list, ib_ref: str) -> None:
        parts = split_ref(ib_ref)
        if len(parts) != 2:
            raise UnknownRef(f"{ib_ref} is not PROC.IBLOCK")
        proc = self.by_id.get(parts[0])
        if proc is None:
            raise UnknownRef(f"unknown procedure {parts[0]}")
        for ib in proc.iblocks:
            if ib.id == parts[1]:
                for act in ib.actions:
                    if act.kind not in PERFORMABLE_KINDS:
                        continue
                    ref = action_ref(proc.id, ib.id, act.id)
                    if self.statuses[ref] in (ActionStatus.TODO, ActionStatus.POSTPONED):
                        self._set_status(out, ref, ActionStatus.DONE_MANUAL)
                return
        raise UnknownRef(f"unknown iblock {ib_ref}")

    def _require_proc(self, proc_id: str) -> Procedure:
        proc = self.by_id.get(proc_id)
        if proc is None:
            raise UnknownRef(f"unknown procedure {proc_id}")
        return proc

    def _reset_procedure(self, proc_id: str) -> None:
        # Fresh episode: a completed procedure reopens with a clean slate.
        # Re-initialization is silent; the next Display carries the result.
        proc = self.by_id[proc_id]
        self.completed.discard(proc_id)
        self.cursors[proc_id] = 0
        for ib in proc.iblocks:
            for act in ib.actions:
                ref = action_ref(proc.id, ib.id, act.id)
                self.statuses[ref] = ActionStatus.TODO
                self.contradicted.discard(ref)
                if act.applicability is not None \
                        and self._eval(act.applicability) is TriState.FALSE:
                    self.statuses[ref] = ActionStatus.NOT_APPLICABLE

    def _push(self, out: list, proc_id: str) -> None:
        proc = self._require_proc(proc_id)
        if proc_id in self.completed:
            self._reset_procedure(proc_id)
        if proc_id in self.deferred:
            self.deferred.remove(proc_id)
        if self.stack:
            self._emit(out, ev.ProcedurePushed, proc=proc_id, parent=self.stack[-1])
        else:
            self._emit(out, ev.ProcedureActivated, proc=proc_id)
        self.stack.append(proc_id)
        self.page_cursors[proc.phase.name] = list(
            self.entry_table[proc.phase]).index(proc_id)
        self._advance_goals(out)

    def _open(self, out: list, proc_id: str) -> None:
        self._require_proc(proc_id)
        if proc_id in self.stack:
            raise IllegalTransition(f"{proc_id} is already active")
        self.popup_queue = [q for q in self.popup_queue if q[3] != proc_id]
        self._push(out, proc_id)

    def _acknowledge(self, out: list, proc_id: str, accept: bool) -> None:
        self._require_proc(proc_id)
        if not self.popup_queue or self.popup_queue[0][3] != proc_id:
            raise IllegalTransition(f"{proc_id} is not the displayed popup")
        self.popup_queue.pop(0)
        if accept:
            self._push(out, proc_id)
        else:
            self.deferred.append(proc_id)
            self._emit(out, ev.ReminderShown, proc=proc_id)

    def _defer(self, out: list, proc_id: str) -> None:
        self._require_proc(proc_id)
        if not self.stack or self.stack[-1] != proc_id:
            raise IllegalTransition(f"{proc_id} is not the active procedure")
        self.stack.pop()
        self.deferred.append(proc_id)
        self._emit(out, ev.ReminderShown, proc=proc_id)
        if self.stack:
            parent = self.stack[-1]
            self._emit(out, ev.ProcedureReturned, parent=parent, cursor=self.cursors[parent])

    def _resume(self, out: list, proc_id: str) -> None:
        self._require_proc(proc_id)
        if proc_id not in self.deferred:
            raise IllegalTransition(f"{proc_id} is not deferred")
        self._push(out, proc_id)

    # -- snapshot / restore -------------------------------------------------------

    def snapshot(self) -> bytes:
        doc = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "set_hash": self.set_hash,
            "tick": self.tick,
            "seq": self.seq,
            "arrival": self._arrival,
            "history": [
                {"tick": s.tick, "phase": s.phase.name, "values": dict(s.values)}
                for s in self.history
            ],
            "statuses": {ref: st.value for ref, st in sorted(self.statuses.items())},
            "stack": self.stack,
            "cursors": dict(sorted(self.cursors.items())),
            "deferred": self.deferred,
            "queue": [list(q) for q in self.popup_queue],
            "completed": sorted(self.completed),
            "disarmed": sorted(pid for pid, armed in self.armed.items() if not armed),
            "branch_disarmed": sorted(
                key for key, armed in self.branch_armed.items() if not armed),
            "contradicted": sorted(self.contradicted),
            "view_phase": self.view_phase.name if self.view_phase else None,
            "page_cursors": dict(sorted(self.page_cursors.items())),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()

    @classmethod
    def restore(cls, pset: ProcedureSet, blob: bytes,
                config: SessionConfig | None = None) -> "Session":
        try:
            doc = json.loads(blob.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise OcsisError(f"unreadable snapshot: {exc}") from None
        if doc.get("format") != SNAPSHOT_FORMAT or doc.get("version") != SNAPSHOT_VERSION:
            raise VersionUnsupported(
                f"cannot restore {doc.get('format')!r} v{doc.get('version')!r}")
        session = cls(pset, config)
        if doc["set_hash"] != session.set_hash:
            raise HashMismatch("snapshot was taken against a different procedure set")
        session.tick = doc["tick"]
        session.seq = doc["seq"]
        session._arrival = doc["arrival"]
        for item in doc["history"]:
            session.history.append(FlightState(
                item["tick"], FlightPhase[item["phase"]], dict(item["values"])))
        for ref, st in doc["statuses"].items():
            if ref not in session.statuses:
                raise HashMismatch(f"snapshot status for unknown {ref}")
            session.statuses[ref] = ActionStatus(st)
        session.stack = list(doc["stack"])
        session.cursors.update({k: int(v) for k, v in doc["cursors"].items()})
        session.deferred = list(doc["deferred"])
        session.popup_queue = [tuple(q) for q in doc["queue"]]
        session.completed = set(doc["completed"])
        for pid in doc["disarmed"]:
            session.armed[pid] = False
        for key in doc["branch_disarmed"]:
            session.branch_armed[key] = False
        session.contradicted = set(doc["contradicted"])
        session.view_phase = FlightPhase[doc["view_phase"]] if doc["view_phase"] else None
        session.page_cursors = dict(doc["page_cursors"])
        return session

    # -- display ----------------------------------------------------------------

    def display_model(self) -> DisplayModel:
        state_phase = self.history[-1].phase if self.history else None
        view = self.view_phase or state_phase or FlightPhase.COCKPIT_PREP
        lines: list[DisplayLine] = []
        active = self.stack[-1] if self.stack else None
        if active:
            lines.extend(self._render_procedure(self.by_id[active], active=True))
        else:
            lines.append(DisplayLine(
                ref=view.name, kind="phase_title", text=view.name.replace("_", " "),
                color=color_for_message(MessageKind.PHASE_TITLE)))
            for proc_id in self.entry_table[view]:
                lines.extend(self._render_procedure(self.by_id[proc_id], active=False))
        popup = None
        if self.popup_queue:
            pid = self.popup_queue[0][3]
            proc = self.by_id[pid]
            popup = {"proc": pid, "title": proc.title,
                     "color": color_for_title(proc.kind).value, "ecam": proc.ecam}
        reminders = tuple(
            {"proc": pid, "title": self.by_id[pid].title} for pid in self.deferred)
        return DisplayModel(
            tick=self.tick,
            phase=state_phase.name if state_phase else None,
            view_phase=view.name,
            phase_menu=tuple(p.name for p in FlightPhase),
            lines=tuple(lines),
            popup=popup,
            reminder_bar=reminders,
            active_procedure=active,
            page_cursor=self.page_cursors.get(view.name, 0),
            perf_note=self._perf_note(),
        )

    def _render_procedure(self, proc: Procedure, active: bool) -> list[DisplayLine]:
        lines = [DisplayLine(
            ref=proc.id, kind="title", text=proc.title,
            color=color_for_title(proc.kind))]
        cur = self.cursors[proc.id]
        for i, ib in enumerate(proc.iblocks):
            for act in ib.actions:
                ref = action_ref(proc.id, ib.id, act.id)
                status = self.statuses[ref]
                lines.append(DisplayLine(
                    ref=ref, kind=act.kind.value, text=act.label,
                    color=color_for_action(status, act.kind), status=status,
                    level2=act.level2, level3=act.level3, indent=1,
                    current=active and i == cur))
        for target in proc.embeds:
            lines.append(DisplayLine(
                ref=target, kind="link", text=f"-> {self.by_id[target].title}",
                color=ColorCode.WHITE, indent=1))
        return lines

    def _perf_note(self) -> Optional[str]:
        cfg = self.config
        if not cfg.corrections or not self.history:
            return None
        state = self.history[-1]
        vref = state.values.get(cfg.vref_param)
        ldist = state.values.get(cfg.ldist_param)
        if not isinstance(vref, (int, float)) or not isinstance(ldist, (int, float)) \
                or isinstance(vref, bool) or isinstance(ldist, bool):
            return None
        known = {e.failure_id for e in cfg.corrections}
        failures = [
            pid for pid in (*self.stack, *self.deferred)
            if self.by_id[pid].kind in (ProcKind.ABNORMAL, ProcKind.EMERGENCY)
            and pid in known
        ]
        if not failures:
            return None
        vapp, distance = corrected_performance(
            PerfInput(vref=vref, reference_landing_distance=ldist,
                      active_failures=frozenset(failures)),
            list(cfg.corrections))
        return f"VAPP {_fmt_qty(vapp)} KT / LDG DIST {_fmt_qty(distance)} M"


def _fmt_qty(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def new_session(pset: ProcedureSet, config: SessionConfig | None = None) -> Session:
    return Session(pset, config)
