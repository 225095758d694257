"""Scripted flight scenarios and the deterministic headless runner.

A scenario is a timeline of parameter assignments, phase changes, and
scripted pilot commands. One tick is one simulated second; the headless
runner never sleeps. Parameter assignments persist: each timeline tick
produces a full snapshot of everything set so far, the way a live feed
would re-send its world.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .conditions import format_value
from .engine import PilotCommand, Session, format_command, parse_command
from .errors import OcsisError, UnknownParameter
from .model import FlightPhase, FlightState, ParamKind, ProcedureSet, Registry

IDENT = r"[A-Z][A-Z0-9_]*"
_SET_RE = re.compile(rf"at\s+(\d+)\s+set\s+({IDENT})\s+(\S+)\s*$")
_PHASE_RE = re.compile(rf"at\s+(\d+)\s+phase\s+({IDENT})\s*$")
_CMD_RE = re.compile(r"at\s+(\d+)\s+cmd\s+(.+?)\s*$")
_HEADER_RE = re.compile(rf'scenario\s+({IDENT})(?:\s+"([^"]*)")?\s*$')


class ScenarioError(OcsisError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TimelineEntry:
    tick: int
    assignments: tuple[tuple[str, object], ...] = ()
    phase: Optional[FlightPhase] = None


@dataclass(frozen=True)
class Scenario:
    id: str
    name: str
    timeline: tuple[TimelineEntry, ...] = ()
    commands: tuple[tuple[int, PilotCommand], ...] = ()  # (tick, command)


class Direction(Enum):
    STATE = "STATE"
    COMMAND = "COMMAND"
    EVENT = "EVENT"
    ERROR = "ERROR"


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    direction: Direction
    payload: str

    def render(self) -> str:
        return f"{self.tick} {self.direction.value} {self.payload}"

    @staticmethod
    def parse(line: str) -> "TraceRecord":
        parts = line.split(" ", 2)
        if len(parts) < 3:
            raise OcsisError(f"malformed trace line {line!r}")
        try:
            tick = int(parts[0])
            direction = Direction(parts[1])
        except ValueError as exc:
            raise OcsisError(f"malformed trace line {line!r}: {exc}") from None
        return TraceRecord(tick, direction, parts[2])


def _parse_value(registry: Registry, line_no: int, name: str, text: str):
    try:
        decl = registry.resolve(name)
    except UnknownParameter:
        raise ScenarioError(line_no, f"unknown parameter {name}") from None
    if decl.kind is ParamKind.NUMBER:
        try:
            return float(text) if "." in text else int(text)
        except ValueError:
            raise ScenarioError(line_no, f"{name} needs a number, got {text!r}") from None
    if decl.kind is ParamKind.BOOL:
        if text in ("true", "false"):
            return text == "true"
        raise ScenarioError(line_no, f"{name} needs true/false, got {text!r}")
    if text not in decl.labels:
        raise ScenarioError(line_no, f"{text} is not a label of {name}")
    return text


def parse_scenario(text: str, registry: Registry, name: str = "<scenario>") -> Scenario:
    sid, sname = "SCENARIO", name
    per_tick: dict[int, dict] = {}
    commands: list[tuple[int, PilotCommand]] = []
    last_tick = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER_RE.match(line)
        if m:
            sid = m.group(1)
            if m.group(2):
                sname = m.group(2)
            continue
        m = _SET_RE.match(line)
        if m:
            tick = int(m.group(1))
            value = _parse_value(registry, line_no, m.group(2), m.group(3))
            entry = per_tick.setdefault(tick, {"assignments": [], "phase": None})
            entry["assignments"].append((m.group(2), value))
        elif _PHASE_RE.match(line):
            m = _PHASE_RE.match(line)
            tick = int(m.group(1))
            try:
                phase = FlightPhase[m.group(2)]
            except KeyError:
                raise ScenarioError(line_no, f"{m.group(2)} is not a flight phase") from None
            per_tick.setdefault(tick, {"assignments": [], "phase": None})["phase"] = phase
        elif _CMD_RE.match(line):
            m = _CMD_RE.match(line)
            tick = int(m.group(1))
            try:
                commands.append((tick, parse_command(m.group(2))))
            except OcsisError as exc:
                raise ScenarioError(line_no, str(exc)) from None
        else:
            raise ScenarioError(line_no, f"unrecognized line {line!r}")
        if tick < last_tick:
            raise ScenarioError(line_no, f"tick {tick} goes backwards")
        last_tick = tick
    timeline = tuple(
        TimelineEntry(tick, tuple(entry["assignments"]), entry["phase"])
        for tick, entry in sorted(per_tick.items())
    )
    return Scenario(sid, sname, timeline, tuple(commands))


def load_scenario(path, registry: Registry) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), registry, name=str(path))


class StateAccumulator:
    """Folds persistent parameter assignments into full FlightState snapshots.

    Also used by the serve loop to turn wire StateUpdate deltas into states.
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self.values: dict[str, object] = {}
        self.phase = FlightPhase.COCKPIT_PREP

    def fold(self, tick: int, assignments, phase: Optional[FlightPhase]) -> FlightState:
        if phase is not None:
            self.phase = phase
        for name, value in assignments:
            decl = self.registry.resolve(name)
            if not decl.accepts(value):
                raise OcsisError(f"{name}: value {value!r} outside declared type")
            self.values[name] = value
        return FlightState(tick, self.phase, dict(self.values))


def _state_payload(entry: TimelineEntry) -> str:
    parts = []
    if entry.phase is not None:
        parts.append(f"PHASE={entry.phase.name}")
    for name, value in sorted(entry.assignments):
        parts.append(f"{name}={format_value(value)}")
    return " ".join(parts) if parts else "-"


def run_headless(scenario: Scenario, pset: ProcedureSet,
                 session: Session | None = None) -> list[TraceRecord]:
    """Drive a fresh session through the scenario; every event is recorded.

    At equal ticks the state lands before the commands, so scripted pilots
    react to the world they can see. Engine errors become a single ERROR
    record and end the run.
    """
    session = session or Session(pset)
    acc = StateAccumulator(pset.registry)
    trace: list[TraceRecord] = []

    steps: list[tuple[int, int, object]] = []
    for entry in scenario.timeline:
        steps.append((entry.tick, 0, entry))
    for order, (tick, cmd) in enumerate(scenario.commands, start=1):
        steps.append((tick, order, cmd))
    steps.sort(key=lambda s: (s[0], s[1]))

    for tick, _, item in steps:
        try:
            if isinstance(item, TimelineEntry):
                trace.append(TraceRecord(tick, Direction.STATE, _state_payload(item)))
                state = acc.fold(item.tick, item.assignments, item.phase)
                produced = session.apply_state(state)
            else:
                trace.append(TraceRecord(tick, Direction.COMMAND, format_command(item)))
                produced = session.apply_command(item)
        except OcsisError as exc:
            trace.append(TraceRecord(tick, Direction.ERROR, str(exc)))
            break
        for event in produced:
            trace.append(TraceRecord(event.tick, Direction.EVENT, event.render_log()))
    return trace


def render_trace(trace: list[TraceRecord]) -> str:
    return "".join(rec.render() + "\n" for rec in trace)


@dataclass
class ReplayReport:
    ok: bool
    checked_events: int = 0
    divergence: Optional[str] = None
    line_no: Optional[int] = None


def _parse_state_payload(payload: str, registry: Registry):
    assignments = []
    phase = None
    if payload != "-":
        for part in payload.split(" "):
            name, _, text = part.partition("=")
            if name == "PHASE":
                phase = FlightPhase[text]
            else:
                assignments.append((name, _parse_value(registry, 0, name, text)))
    return assignments, phase


def replay_trace(text: str, pset: ProcedureSet) -> ReplayReport:
    """Re-execute a trace's STATE/COMMAND records and verify its EVENT records.

    The first mismatch (wrong payload, missing event, or extra event) is the
    reported divergence.
    """
    session = Session(pset)
    acc = StateAccumulator(pset.registry)
    records: list[tuple[int, TraceRecord]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            records.append((line_no, TraceRecord.parse(line)))

    checked = 0
    i = 0
    while i < len(records):
        line_no, rec = records[i]
        i += 1
        if rec.direction is Direction.ERROR:
            return ReplayReport(True, checked)  # recorded failure: replay stops where the run did
        if rec.direction is Direction.EVENT:
            return ReplayReport(False, checked, f"unexpected EVENT record {rec.payload!r}", line_no)
        try:
            if rec.direction is Direction.STATE:
                assignments, phase = _parse_state_payload(rec.payload, pset.registry)
                produced = session.apply_state(acc.fold(rec.tick, assignments, phase))
            else:
                produced = session.apply_command(parse_command(rec.payload))
        except OcsisError as exc:
            if i < len(records) and records[i][1].direction is Direction.ERROR:
                return ReplayReport(True, checked)
            return ReplayReport(False, checked, f"engine error {exc}", line_no)
        for event in produced:
            if i >= len(records) or records[i][1].direction is not Direction.EVENT:
                return ReplayReport(
                    False, checked,
                    f"engine produced {event.render_log()!r} but trace has no EVENT here",
                    records[i][0] if i < len(records) else line_no)
            ev_line, ev_rec = records[i]
            i += 1
            if ev_rec.payload != event.render_log():
                return ReplayReport(
                    False, checked,
                    f"expected {ev_rec.payload!r}, engine produced {event.render_log()!r}",
                    ev_line)
            checked += 1
    return ReplayReport(True, checked)
