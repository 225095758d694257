from .diagnostics import CODES, Diagnostic, Severity, SourceSpan
from .formatter import canonical_format
from .linter import lint
from .parser import ParseResult, parse, parse_files

__all__ = [
    "CODES",
    "Diagnostic",
    "ParseResult",
    "Severity",
    "SourceSpan",
    "canonical_format",
    "lint",
    "parse",
    "parse_files",
]
