"""Approach-speed and landing-distance corrections per active failure.

Speed increments add, distance factors multiply; both are data, never code.
No real aircraft coefficients ship with the package; fixture tables are
synthetic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import FrozenSet, Iterable

from .errors import OcsisError

_LINE_RE = re.compile(
    r"correction\s+(?P<id>[A-Z][A-Z0-9_]*)\s+speed\s+\+(?P<kt>\d+(?:\.\d+)?)"
    r"\s+dist\s+x(?P<factor>\d+(?:\.\d+)?)\s*$"
)


class PerfError(OcsisError):
    pass


class MissingEntry(PerfError):
    def __init__(self, failure_id: str):
        super().__init__(f"no correction entry for {failure_id}")
        self.failure_id = failure_id


class DuplicateFailure(PerfError):
    pass


class TableParseError(PerfError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class CorrectionEntry:
    failure_id: str
    speed_increment: float  # knots, added to vref
    distance_factor: float  # multiplier, >= 1.0

    def __post_init__(self):
        if self.speed_increment < 0:
            raise PerfError(f"{self.failure_id}: negative speed increment")
        if self.distance_factor < 1.0:
            raise PerfError(f"{self.failure_id}: distance factor below 1.0")


@dataclass(frozen=True)
class PerfInput:
    vref: float
    reference_landing_distance: float
    active_failures: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.vref <= 0 or self.reference_landing_distance <= 0:
            raise PerfError("vref and reference landing distance must be positive")


def corrected_performance(
    perf: PerfInput, table: Iterable[CorrectionEntry]
) -> tuple[float, float]:
    """(vapp, landing distance) with every active failure's correction applied.

    Order-independent over the failure set: increments are summed and
    factors multiplied in sorted-id order.
    """
    by_id = {e.failure_id: e for e in table}
    vapp = perf.vref
    distance = perf.reference_landing_distance
    for failure in sorted(perf.active_failures):
        entry = by_id.get(failure)
        if entry is None:
            raise MissingEntry(failure)
        vapp += entry.speed_increment
        distance *= entry.distance_factor
    return vapp, distance


def load_correction_table(path) -> list[CorrectionEntry]:
    """Parse a correction table file: `correction <PROC_ID> speed +<kt> dist x<factor>`."""
    entries: list[CorrectionEntry] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = _LINE_RE.match(line)
            if not m:
                raise TableParseError(line_no, f"malformed entry {line!r}")
            failure_id = m.group("id")
            if failure_id in seen:
                raise DuplicateFailure(f"line {line_no}: duplicate entry for {failure_id}")
            seen.add(failure_id)
            entries.append(CorrectionEntry(
                failure_id,
                float(m.group("kt")),
                float(m.group("factor")),
            ))
    return entries
