"""Acceptance suite: every primary criterion at its stated tolerance.

Each criterion prints one `ACCEPTANCE <name>: PASS` line (visible with
`pytest -s tests/test_acceptance.py`); a failed assertion marks it FAIL.
"""
import functools
import itertools
import random
import sys
import time

import pytest

from ocsis.colors import ColorCode, MessageKind, color_for_action, color_for_message, color_for_title
from ocsis.conditions import TriState, eval_condition
from ocsis.dsl import canonical_format, parse
from ocsis.engine import AcknowledgePopup, Session
from ocsis.model import ActionKind, ActionStatus, FlightPhase, FlightState, ProcKind
from ocsis.perf import CorrectionEntry, PerfInput, corrected_performance
from ocsis.scenario import Direction, load_scenario, render_trace, replay_trace, run_headless

from conftest import CORPUS, GOLDEN, corpus_sources
from test_colors import GOLDEN_ACTION, GOLDEN_MESSAGE, GOLDEN_TITLE
from test_conditions import REG, brute_force, enumerate_exprs, referenced_params
from test_engine import SOURCE
import test_snapshot

SCENARIOS = ["initial_approach", "final_approach", "flaps_locked", "fuel_leak"]


def report(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kw):
            try:
                fn(*args, **kw)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL", file=sys.stderr)
                raise
            print(f"ACCEPTANCE {name}: PASS")
        return run
    return wrap


@pytest.fixture(scope="module")
def corpus_set():
    result = parse("\n".join(text for _, text in corpus_sources()))
    assert result.ok, [d.render() for d in result.diagnostics]
    return result.pset


@report("flaps-semantics")
def test_flaps_semantics(corpus_set):
    started = time.perf_counter()
    scenario = load_scenario(CORPUS / "scenarios" / "flaps_locked.ocss", corpus_set.registry)
    trace = run_headless(scenario, corpus_set)
    events = [r.payload for r in trace if r.direction is Direction.EVENT]
    # Goal fires when FLAPS_POS equals FLAPS_HANDLE_POS and the procedure advances.
    goal_idx = next(i for i, p in enumerate(events) if "GOAL_REACHED FLAPS_SET.FS1" in p)
    assert any("PROCEDURE_COMPLETED FLAPS_SET" in p for p in events[goal_idx:])
    # Exactly one popup per sustained mismatch episode; the scenario has two.
    popups = [p for p in events if "POPUP_RAISED FLAPS_LOCKED" in p]
    assert len(popups) == 2, popups
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"{elapsed:.3f}s exceeds the 1 s budget"


@report("fuel-leak-flow")
def test_fuel_leak_flow(corpus_set):
    scenario = load_scenario(CORPUS / "scenarios" / "fuel_leak.ocss", corpus_set.registry)
    runs = [render_trace(run_headless(scenario, corpus_set)) for _ in range(10)]
    assert all(r == runs[0] for r in runs), "trace not byte-stable over 10 runs"
    golden = (GOLDEN / "fuel_leak.trace").read_text(encoding="utf-8")
    assert runs[0] == golden
    events = [line for line in golden.splitlines() if " EVENT " in line]
    assert any("POPUP_RAISED ENG_FAIL ecam=1" in e for e in events)
    assert any("PROCEDURE_PUSHED ENG_SHUTDOWN parent=FUEL_LEAK" in e for e in events)
    assert any("PROCEDURE_RETURNED FUEL_LEAK cursor=1" in e for e in events)


@report("color-conformance")
def test_color_conformance():
    deviations = []
    for status, kind in itertools.product(ActionStatus, ActionKind):
        if color_for_action(status, kind) is not GOLDEN_ACTION[(status, kind)]:
            deviations.append((status, kind))
    for kind in ProcKind:
        if color_for_title(kind) is not GOLDEN_TITLE[kind]:
            deviations.append(kind)
    for kind in MessageKind:
        if color_for_message(kind) is not GOLDEN_MESSAGE[kind]:
            deviations.append(kind)
    assert deviations == []


@report("interruption")
def test_interruption_snapshot_restore():
    original = test_snapshot.mid_procedure_session()
    blob = original.snapshot()
    restored = Session.restore(parse(SOURCE).pset, blob)
    restored._test_world = dict(original._test_world)
    a = test_snapshot.suffix_events(original, 3)
    b = test_snapshot.suffix_events(restored, 3)
    assert len(a) >= 50
    log_a = "".join(e.render_log() + "\n" for e in a).encode()
    log_b = "".join(e.render_log() + "\n" for e in b).encode()
    assert log_a == log_b


@report("determinism")
def test_determinism_and_replay(corpus_set):
    for name in SCENARIOS:
        scenario = load_scenario(CORPUS / "scenarios" / f"{name}.ocss", corpus_set.registry)
        first = render_trace(run_headless(scenario, corpus_set)).encode()
        second = render_trace(run_headless(scenario, corpus_set)).encode()
        assert first == second, f"{name}: nondeterministic trace"
        report_ = replay_trace((GOLDEN / f"{name}.trace").read_text(encoding="utf-8"), corpus_set)
        assert report_.ok and report_.divergence is None, f"{name}: {report_.divergence}"


@report("condition-oracle")
def test_condition_oracle_exhaustive():
    started = time.perf_counter()
    exprs = enumerate_exprs(3)
    cache = {}
    for expr in exprs:
        support = tuple(sorted(referenced_params(expr)))
        if support not in cache:
            cache[support] = [
                (dict(zip(support, bits)),
                 [FlightState(1, FlightPhase.CRUISE, dict(zip(support, bits)))])
                for bits in itertools.product((False, True), repeat=len(support))
            ]
        for assignment, history in cache[support]:
            expected = TriState.TRUE if brute_force(expr, assignment) else TriState.FALSE
            assert eval_condition(expr, history, REG) is expected
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"{elapsed:.3f}s exceeds the 10 s budget"


@report("dsl-round-trip")
def test_dsl_round_trip(corpus_set):
    formatted = canonical_format(corpus_set)
    reparsed = parse(formatted)
    assert reparsed.ok
    assert reparsed.pset == corpus_set
    assert canonical_format(reparsed.pset) == formatted  # idempotent


@report("perf-calc-properties")
def test_perf_calc_properties():
    started = time.perf_counter()
    rng = random.Random(20260809)
    for case in range(1000):
        n = rng.randint(0, 8)
        table = [
            CorrectionEntry(f"F{i}", rng.uniform(0, 30), rng.uniform(1.0, 3.0))
            for i in range(n)
        ]
        vref = rng.uniform(80, 200)
        dist = rng.uniform(800, 4000)
        active = frozenset(e.failure_id for e in table if rng.random() < 0.5)

        # Identity on the empty failure set.
        assert corrected_performance(PerfInput(vref, dist), table) == (vref, dist)

        base = PerfInput(vref, dist, active)
        vapp, ld = corrected_performance(base, table)

        # Order independence over table order.
        shuffled = table[:]
        rng.shuffle(shuffled)
        assert corrected_performance(base, shuffled) == (vapp, ld)

        # Monotonicity: one more failure never decreases either output.
        inactive = [e.failure_id for e in table if e.failure_id not in active]
        if inactive:
            extra = rng.choice(inactive)
            v2, l2 = corrected_performance(PerfInput(vref, dist, active | {extra}), table)
            assert v2 >= vapp and l2 >= ld
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"{elapsed:.3f}s exceeds the 5 s budget"
