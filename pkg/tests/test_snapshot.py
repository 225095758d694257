"""Snapshot and restore: interruption survival."""
import json

import pytest

from ocsis.dsl import parse
from ocsis.engine import (
    AcknowledgePopup,
    CheckAll,
    HashMismatch,
    MarkDone,
    ResumeFromReminder,
    Session,
    VersionUnsupported,
    Wait,
)
from ocsis.model import FlightPhase, FlightState

from test_engine import SOURCE, build_session, feed


def mid_procedure_session():
    s = build_session()
    feed(s, 1, GO=True, ALT=50, MODE="A")
    s.apply_command(AcknowledgePopup("MAIN", accept=True))
    s.apply_command(MarkDone("MAIN.M1.A2"))
    s.apply_command(Wait("MAIN.M1.A1" if False else "MAIN.M1.C1"))
    feed(s, 2, MODE="B")
    feed(s, 3)
    return s


def suffix_events(session, start_tick):
    """A deterministic 50+ event workload shared by original and restored."""
    out = []
    tick = start_tick
    for round_ in range(25):
        tick += 1
        out.extend(feed(
            session, tick,
            GO=(round_ % 4 < 2),  # false gaps re-arm the MAIN trigger
            APPL=(round_ % 2 == 0),  # applicability churn
            ALT=150 if round_ % 2 else 50,
            MODE=("A", "B", "C")[round_ % 3]))
        if session.popup_queue:
            out.extend(session.apply_command(
                AcknowledgePopup(session.popup_queue[0][3], accept=round_ % 2 == 0)))
        if session.stack and round_ % 2:
            top = session.stack[-1]
            proc = session.by_id[top]
            cur = session.cursors[top]
            if cur < len(proc.iblocks):
                out.extend(session.apply_command(CheckAll(f"{top}.{proc.iblocks[cur].id}")))
        if session.deferred and round_ % 5 == 4:
            out.extend(session.apply_command(ResumeFromReminder(session.deferred[0])))
    return out


def test_snapshot_restore_identical_suffix_behavior():
    original = mid_procedure_session()
    blob = original.snapshot()
    result = parse(SOURCE)
    restored = Session.restore(result.pset, blob)
    restored._test_world = dict(original._test_world)

    a = suffix_events(original, 3)
    b = suffix_events(restored, 3)
    assert len(a) >= 50, f"workload too small: {len(a)}"
    assert [e.render_log() for e in a] == [e.render_log() for e in b]
    assert original.snapshot() == restored.snapshot()
    assert original.display_model() == restored.display_model()


def test_snapshot_of_fresh_session_restores_to_fresh():
    s = build_session()
    restored = Session.restore(parse(SOURCE).pset, s.snapshot())
    assert restored.tick == 0 and restored.stack == []
    assert restored.snapshot() == s.snapshot()
    assert restored.display_model() == s.display_model()


def test_restore_against_different_set_is_hash_mismatch():
    s = build_session()
    other = parse(SOURCE + """
procedure EXTRA normal phase CRUISE
  iblock E1
    action A1 "MORE"
""").pset
    with pytest.raises(HashMismatch):
        Session.restore(other, s.snapshot())


def test_restore_rejects_unknown_version():
    s = build_session()
    doc = json.loads(s.snapshot())
    doc["version"] = 99
    with pytest.raises(VersionUnsupported):
        Session.restore(parse(SOURCE).pset, json.dumps(doc).encode())


def test_snapshot_bytes_are_stable():
    s = mid_procedure_session()
    assert s.snapshot() == s.snapshot()


def test_snapshot_preserves_bounded_history_for_sustained():
    s = build_session()
    for t in range(1, 5):
        feed(s, t, MODE="B" if t >= 3 else "A")
    blob = s.snapshot()
    restored = Session.restore(parse(SOURCE).pset, blob)
    # SIDE's sustained-2 trigger needs ticks 3 and 4 from restored history.
    events = restored.apply_state(FlightState(5, FlightPhase.CRUISE, dict(s.history[-1].values)))
    assert "POPUP_RAISED" in [e.KIND for e in events] or s.popup_queue
