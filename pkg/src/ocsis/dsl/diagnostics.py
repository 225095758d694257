"""Diagnostics for procedure source files.

Codes form a closed, documented set; tools match on them, not on messages.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


#: Every code the parser or linter can emit.
CODES = {
    "E_SYNTAX": "malformed line or expression",
    "E_BAD_ID": "identifier does not match [A-Z][A-Z0-9_]*",
    "E_DUPLICATE_PARAM": "parameter declared twice",
    "E_DUPLICATE_ID": "procedure, iblock, or action id reused",
    "E_DUPLICATE_CLAUSE": "trigger/context/goal given twice in one iblock",
    "E_UNKNOWN_PARAM": "condition references an undeclared parameter",
    "E_UNKNOWN_PHASE": "not a flight phase",
    "E_UNKNOWN_LABEL": "enum label outside the parameter's domain",
    "E_TYPE_MISMATCH": "comparison between incompatible types or operators",
    "E_BAD_DURATION": "sustained duration must be a positive integer",
    "E_DETECT_ON_NOTE": "notes and restrictions cannot carry detect",
    "E_DANGLING_LINK": "embed or abnormal link to an undeclared procedure",
    "E_CYCLIC_LINK": "embed links form a cycle",
    "E_EMPTY_PROCEDURE": "procedure has no iblocks",
    "W_ALWAYS_TRIGGERS": "abnormal procedure trigger is constantly true",
    "W_UNKNOWN_LABEL": "detect references a label outside the domain",
    "W_UNSATISFIABLE": "condition cannot be satisfied over declared domains",
    "W_UNSAT_CHECK_SKIPPED": "satisfiability check skipped (domain too large)",
}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    column: int  # 1-based
    length: int = 1

    def __post_init__(self):
        assert self.line >= 1 and self.column >= 1


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan

    def __post_init__(self):
        assert self.code in CODES, self.code

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity.value} {self.code} {self.message}"


def error(code: str, message: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span)


def warning(code: str, message: str, span: SourceSpan) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span)
