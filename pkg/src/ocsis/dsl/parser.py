"""Parser for procedure (.ocsp) and registry (.ocsr) sources.

Line-oriented recursive descent. Both file kinds share one grammar, so a
single source may mix `param` and `procedure` declarations; the loader
simply concatenates files. Parameters are collected in a first pass, which
makes procedure parsing independent of declaration order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..conditions import (
    And,
    CmpOp,
    CmpParamConst,
    CmpParamParam,
    ConditionExpr,
    NEVER,
    Not,
    Or,
    Sustained,
    TrueExpr,
)
from ..model import (
    CHECK_ALL_DONE,
    Action,
    ActionKind,
    FlightPhase,
    IBlock,
    IDENT_RE,
    ParamDecl,
    ParamKind,
    ProcKind,
    Procedure,
    ProcedureSet,
    Registry,
    RESERVED_PARAMS,
)
from .diagnostics import Diagnostic, Severity, SourceSpan, error

DEFAULT_GOAL = CmpParamConst(CHECK_ALL_DONE, CmpOp.EQ, True)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<badstring>"(?:[^"\\]|\\.)*$)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<op>==|!=|<=|>=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
""",
    re.VERBOSE,
)

_ORDER_OPS = (CmpOp.LT, CmpOp.LE, CmpOp.GT, CmpOp.GE)

KEYWORDS = {
    "param", "procedure", "title", "iblock", "embed",
    "trigger", "context", "goal", "action", "check", "note", "restriction",
    "abnormal", "level2", "level3", "detect", "when", "sustained",
    "and", "or", "not", "true", "false", "phase", "priority", "ecam",
    "normal", "emergency", "checklist", "number", "bool", "enum",
}


@dataclass(frozen=True)
class Token:
    kind: str  # word | string | number | arrow | op | lparen | rparen | comma | eol
    text: str
    span: SourceSpan
    value: object = None


class ParseAbort(Exception):
    """Internal: unwinds one malformed line after its diagnostic is recorded."""


@dataclass
class ParseResult:
    pset: Optional[ProcedureSet]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.pset is not None

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]


def parse(text: str, filename: str = "<input>") -> ParseResult:
    return parse_files([(filename, text)])


def parse_files(sources: Sequence[tuple[str, str]]) -> ParseResult:
    parser = _Parser()
    for filename, text in sources:
        parser.lex_file(filename, text)
    return parser.run()


def _lex_line(filename: str, line_no: int, raw: str) -> tuple[list[Token], Optional[Diagnostic]]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(raw):
        m = _TOKEN_RE.match(raw, pos)
        if not m:
            span = SourceSpan(filename, line_no, pos + 1, 1)
            return tokens, error("E_SYNTAX", f"unexpected character {raw[pos]!r}", span)
        kind = m.lastgroup
        text = m.group()
        span = SourceSpan(filename, line_no, pos + 1, len(text))
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "badstring":
            return tokens, error("E_SYNTAX", "unterminated string", span)
        value = None
        if kind == "string":
            value = text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        elif kind == "number":
            value = float(text) if "." in text else int(text)
        tokens.append(Token(kind, text, span, value))
    tokens.append(Token("eol", "", SourceSpan(filename, line_no, len(raw) + 1 or 1, 1)))
    return tokens, None


class _Line:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eol":
            self.i += 1
        return tok

    @property
    def at_eol(self) -> bool:
        return self.peek().kind == "eol"

    @property
    def head_word(self) -> Optional[str]:
        tok = self.tokens[0]
        return tok.text if tok.kind == "word" else None


class _Parser:
    def __init__(self):
        self.lines: list[_Line] = []
        self.diags: list[Diagnostic] = []
        self.registry = Registry()
        self.spans: dict[str, SourceSpan] = {}
        self.procedures: list[Procedure] = []

    # -- input ------------------------------------------------------------

    def lex_file(self, filename: str, text: str) -> None:
        for line_no, raw in enumerate(text.splitlines(), start=1):
            tokens, diag = _lex_line(filename, line_no, raw)
            if diag:
                self.diags.append(diag)
                continue
            if tokens and tokens[0].kind != "eol":
                self.lines.append(_Line(tokens))

    # -- driver -----------------------------------------------------------

    def run(self) -> ParseResult:
        self._collect_params()
        self._parse_procedures()
        self._check_links()
        if any(d.severity is Severity.ERROR for d in self.diags):
            return ParseResult(None, self.diags)
        pset = ProcedureSet(self.registry, tuple(self.procedures), spans=self.spans)
        return ParseResult(pset, self.diags)

    def _err(self, code: str, message: str, span: SourceSpan) -> None:
        self.diags.append(error(code, message, span))

    def _abort(self, code: str, message: str, span: SourceSpan):
        self._err(code, message, span)
        raise ParseAbort()

    # -- pass 1: parameters -------------------------------------------------

    def _collect_params(self) -> None:
        for line in self.lines:
            if line.head_word != "param":
                continue
            try:
                self._parse_param(line)
            except ParseAbort:
                pass
            finally:
                line.i = 0

    def _parse_param(self, line: _Line) -> None:
        line.next()  # param
        name = self._expect_ident(line, "parameter name")
        kind_tok = line.next()
        if kind_tok.text == "number":
            unit = None
            if not line.at_eol and line.peek().kind == "word":
                unit = line.next().text
            decl = ParamDecl(name.text, ParamKind.NUMBER, unit=unit)
        elif kind_tok.text == "bool":
            decl = ParamDecl(name.text, ParamKind.BOOL)
        elif kind_tok.text == "enum":
            labels = self._parse_label_list(line)
            decl = ParamDecl(name.text, ParamKind.ENUM, labels)
        else:
            self._abort("E_SYNTAX", f"expected number|bool|enum, got {kind_tok.text!r}", kind_tok.span)
            return
        self._expect_eol(line)
        if name.text in RESERVED_PARAMS:
            self._abort("E_DUPLICATE_PARAM", f"{name.text} is reserved", name.span)
        if name.text in self.registry:
            self._abort("E_DUPLICATE_PARAM", f"parameter {name.text} already declared", name.span)
        self.registry.declare(decl)
        self.spans[f"param.{name.text}"] = name.span

    def _parse_label_list(self, line: _Line) -> tuple[str, ...]:
        self._expect(line, "lparen", "(")
        labels = []
        while True:
            labels.append(self._expect_ident(line, "enum label").text)
            tok = line.next()
            if tok.kind == "rparen":
                break
            if tok.kind != "comma":
                self._abort("E_SYNTAX", f"expected , or ) in enum labels, got {tok.text!r}", tok.span)
        if len(set(labels)) != len(labels):
            self._abort("E_SYNTAX", "duplicate enum label", line.tokens[0].span)
        return tuple(labels)

    # -- pass 2: procedures -------------------------------------------------

    def _parse_procedures(self) -> None:
        proc: Optional[_ProcBuilder] = None
        for line in self.lines:
            head = line.head_word
            try:
                if head == "param":
                    continue
                if head == "procedure":
                    self._close_proc(proc)
                    proc = self._parse_proc_header(line)
                elif head in ("title", "embed", "iblock"):
                    if proc is None:
                        self._abort("E_SYNTAX", f"{head} outside a procedure", line.peek().span)
                    getattr(self, f"_parse_{head}")(line, proc)
                elif head in ("trigger", "context", "goal", "abnormal",
                              "action", "check", "note", "restriction"):
                    if proc is None or proc.iblock is None:
                        self._abort("E_SYNTAX", f"{head} outside an iblock", line.peek().span)
                    if head in ("trigger", "context", "goal"):
                        self._parse_clause(line, proc, head)
                    elif head == "abnormal":
                        self._parse_abnormal(line, proc)
                    else:
                        self._parse_action(line, proc, head)
                else:
                    self._abort("E_SYNTAX", f"unknown statement {line.peek().text!r}", line.peek().span)
            except ParseAbort:
                continue
        self._close_proc(proc)

    def _parse_proc_header(self, line: _Line) -> "_ProcBuilder":
        line.next()  # procedure
        pid = self._expect_ident(line, "procedure id")
        kind_tok = line.next()
        try:
            kind = ProcKind(kind_tok.text)
        except ValueError:
            self._abort("E_SYNTAX", f"expected normal|abnormal|emergency|checklist, got {kind_tok.text!r}", kind_tok.span)
        self._expect_word(line, "phase")
        phase_tok = self._expect_ident(line, "flight phase")
        try:
            phase = FlightPhase[phase_tok.text]
        except KeyError:
            self._abort("E_UNKNOWN_PHASE", f"{phase_tok.text} is not a flight phase", phase_tok.span)
        priority = None
        ecam = False
        while not line.at_eol:
            tok = line.next()
            if tok.text == "priority":
                num = line.next()
                if num.kind != "number" or not isinstance(num.value, int):
                    self._abort("E_SYNTAX", "priority needs an integer", num.span)
                priority = num.value
            elif tok.text == "ecam":
                ecam = True
            else:
                self._abort("E_SYNTAX", f"unexpected {tok.text!r} in procedure header", tok.span)
        if any(p.id == pid.text for p in self.procedures):
            self._abort("E_DUPLICATE_ID", f"procedure {pid.text} already declared", pid.span)
        self.spans[pid.text] = pid.span
        return _ProcBuilder(pid.text, kind, phase, priority, ecam, pid.span)

    def _parse_title(self, line: _Line, proc: "_ProcBuilder") -> None:
        line.next()
        tok = line.next()
        if tok.kind != "string":
            self._abort("E_SYNTAX", "title needs a quoted string", tok.span)
        self._expect_eol(line)
        proc.title = tok.value
        self.spans[f"{proc.id}.title"] = tok.span

    def _parse_embed(self, line: _Line, proc: "_ProcBuilder") -> None:
        line.next()
        target = self._expect_ident(line, "procedure id")
        self._expect_eol(line)
        proc.embeds.append(target.text)
        self.spans[f"{proc.id}.embed.{len(proc.embeds) - 1}"] = target.span

    def _parse_iblock(self, line: _Line, proc: "_ProcBuilder") -> None:
        line.next()
        ib_id = self._expect_ident(line, "iblock id")
        self._expect_eol(line)
        proc.close_iblock(self)
        if any(ib["id"] == ib_id.text for ib in proc.iblocks):
            self._abort("E_DUPLICATE_ID", f"iblock {ib_id.text} already declared in {proc.id}", ib_id.span)
        proc.iblock = {"id": ib_id.text, "trigger": None, "context": None, "goal": None,
                       "actions": [], "abnormal": [], "span": ib_id.span}
        self.spans[f"{proc.id}.{ib_id.text}"] = ib_id.span

    def _parse_clause(self, line: _Line, proc: "_ProcBuilder", name: str) -> None:
        key_tok = line.next()
        if proc.iblock[name] is not None:
            self._abort("E_DUPLICATE_CLAUSE", f"{name} given twice in {proc.iblock['id']}", key_tok.span)
        expr = self._parse_expr(line)
        self._expect_eol(line)
        proc.iblock[name] = expr
        self.spans[f"{proc.id}.{proc.iblock['id']}.{name}"] = key_tok.span

    def _parse_abnormal(self, line: _Line, proc: "_ProcBuilder") -> None:
        line.next()
        expr = self._parse_expr(line)
        arrow = line.next()
        if arrow.kind != "arrow":
            self._abort("E_SYNTAX", "abnormal needs '-> PROCEDURE'", arrow.span)
        target = self._expect_ident(line, "procedure id")
        self._expect_eol(line)
        idx = len(proc.iblock["abnormal"])
        proc.iblock["abnormal"].append((expr, target.text))
        self.spans[f"{proc.id}.{proc.iblock['id']}.abnormal.{idx}"] = target.span

    def _parse_action(self, line: _Line, proc: "_ProcBuilder", head: str) -> None:
        line.next()
        kind = ActionKind(head)
        act_id = self._expect_ident(line, f"{head} id")
        label = line.next()
        if label.kind != "string" or not label.value:
            self._abort("E_SYNTAX", f"{head} needs a nonempty quoted label", label.span)
        level2 = level3 = detect = applicability = None
        while not line.at_eol:
            opt = line.next()
            if opt.text in ("level2", "level3"):
                text_tok = line.next()
                if text_tok.kind != "string":
                    self._abort("E_SYNTAX", f"{opt.text} needs a quoted string", text_tok.span)
                if opt.text == "level2":
                    level2 = text_tok.value
                else:
                    level3 = text_tok.value
            elif opt.text == "detect":
                if kind not in (ActionKind.ACTION, ActionKind.CHECK):
                    self._abort("E_DETECT_ON_NOTE", f"{head} lines cannot carry detect", opt.span)
                detect = self._parse_expr(line, in_detect=True)
                self.spans[f"{proc.id}.{proc.iblock['id']}.{act_id.text}.detect"] = opt.span
            elif opt.text == "when":
                applicability = self._parse_expr(line)
            else:
                self._abort("E_SYNTAX", f"unexpected {opt.text!r} in {head} line", opt.span)
        if any(a.id == act_id.text for a in proc.iblock["actions"]):
            self._abort("E_DUPLICATE_ID",
                        f"action {act_id.text} already declared in {proc.iblock['id']}", act_id.span)
        proc.iblock["actions"].append(Action(
            act_id.text, label.value, kind, level2, level3, detect, applicability))
        self.spans[f"{proc.id}.{proc.iblock['id']}.{act_id.text}"] = act_id.span

    def _close_proc(self, proc: Optional["_ProcBuilder"]) -> None:
        if proc is None:
            return
        proc.close_iblock(self)
        if not proc.iblocks:
            self._err("E_EMPTY_PROCEDURE", f"procedure {proc.id} has no iblocks", proc.span)
            return
        iblocks = tuple(
            IBlock(
                ib["id"],
                ib["trigger"] if ib["trigger"] is not None else NEVER,
                ib["context"] if ib["context"] is not None else TrueExpr(),
                ib["goal"] if ib["goal"] is not None else DEFAULT_GOAL,
                tuple(ib["actions"]),
                tuple(ib["abnormal"]),
            )
            for ib in proc.iblocks
        )
        self.procedures.append(Procedure(
            proc.id, proc.title or proc.id, proc.kind, proc.phase,
            iblocks, tuple(proc.embeds), proc.priority, proc.ecam))

    # -- pass 3: cross references -------------------------------------------

    def _check_links(self) -> None:
        known = {p.id for p in self.procedures}
        for proc in self.procedures:
            for ib in proc.iblocks:
                for idx, (_, target) in enumerate(ib.abnormal):
                    if target not in known:
                        self._err("E_DANGLING_LINK", f"abnormal link to undeclared {target}",
                                  self.spans[f"{proc.id}.{ib.id}.abnormal.{idx}"])
            for idx, target in enumerate(proc.embeds):
                if target not in known:
                    self._err("E_DANGLING_LINK", f"embed of undeclared {target}",
                              self.spans[f"{proc.id}.embed.{idx}"])
        # Add embed edges one by one in declaration order; the edge that first
        # closes a cycle is the one reported.
        edges: dict[str, list[str]] = {p.id: [] for p in self.procedures}

        def reachable(src: str, dst: str) -> bool:
            seen, work = set(), [src]
            while work:
                node = work.pop()
                if node == dst:
                    return True
                if node in seen:
                    continue
                seen.add(node)
                work.extend(edges.get(node, ()))
            return False

        for proc in self.procedures:
            for idx, target in enumerate(proc.embeds):
                if target not in known:
                    continue
                if target == proc.id or reachable(target, proc.id):
                    self._err("E_CYCLIC_LINK",
                              f"embedding {target} closes a cycle back to {proc.id}",
                              self.spans[f"{proc.id}.embed.{idx}"])
                    continue
                edges[proc.id].append(target)

    # -- expressions ----------------------------------------------------------

    def _parse_expr(self, line: _Line, in_detect: bool = False) -> ConditionExpr:
        expr = self._parse_or(line, in_detect)
        return expr

    def _parse_or(self, line: _Line, in_detect: bool) -> ConditionExpr:
        parts = [self._parse_and(line, in_detect)]
        while line.peek().text == "or":
            line.next()
            parts.append(self._parse_and(line, in_detect))
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _parse_and(self, line: _Line, in_detect: bool) -> ConditionExpr:
        parts = [self._parse_not(line, in_detect)]
        while line.peek().text == "and":
            line.next()
            parts.append(self._parse_not(line, in_detect))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _parse_not(self, line: _Line, in_detect: bool) -> ConditionExpr:
        if line.peek().text == "not":
            line.next()
            return Not(self._parse_not(line, in_detect))
        return self._parse_primary(line, in_detect)

    def _parse_primary(self, line: _Line, in_detect: bool) -> ConditionExpr:
        tok = line.peek()
        if tok.kind == "lparen":
            line.next()
            expr = self._parse_or(line, in_detect)
            self._expect(line, "rparen", ")")
            return expr
        if tok.text == "sustained":
            line.next()
            num = line.next()
            if num.kind != "number" or not isinstance(num.value, int) or num.value < 1:
                self._abort("E_BAD_DURATION", "sustained needs a positive integer tick count", num.span)
            self._expect(line, "lparen", "(")
            child = self._parse_or(line, in_detect)
            self._expect(line, "rparen", ")")
            return Sustained(child, num.value)
        if tok.text == "true":
            line.next()
            return TrueExpr()
        if tok.text == "false":
            line.next()
            return Not(TrueExpr())
        if tok.kind == "word":
            return self._parse_comparison(line, in_detect)
        self._abort("E_SYNTAX", f"expected expression, got {tok.text or 'end of line'!r}", tok.span)

    def _parse_comparison(self, line: _Line, in_detect: bool) -> ConditionExpr:
        left = self._expect_ident(line, "parameter")
        if left.text not in self.registry:
            self._abort("E_UNKNOWN_PARAM", f"unknown parameter {left.text}", left.span)
        decl = self.registry.resolve(left.text)
        if line.peek().kind != "op":
            # Bare parameter: boolean shorthand for `== true`.
            if decl.kind is not ParamKind.BOOL:
                self._abort("E_TYPE_MISMATCH", f"{left.text} is not bool; compare it explicitly", left.span)
            return CmpParamConst(left.text, CmpOp.EQ, True)
        op = CmpOp(line.next().text)
        rhs = line.next()
        if rhs.kind == "number":
            if decl.kind is not ParamKind.NUMBER:
                self._abort("E_TYPE_MISMATCH", f"{left.text} is {decl.kind.value}, compared with a number", rhs.span)
            return CmpParamConst(left.text, op, rhs.value)
        if rhs.text in ("true", "false"):
            if decl.kind is not ParamKind.BOOL:
                self._abort("E_TYPE_MISMATCH", f"{left.text} is {decl.kind.value}, compared with a bool", rhs.span)
            if op in _ORDER_OPS:
                self._abort("E_TYPE_MISMATCH", "ordering comparison on bool", rhs.span)
            return CmpParamConst(left.text, op, rhs.text == "true")
        if rhs.kind != "word" or not IDENT_RE.match(rhs.text):
            self._abort("E_SYNTAX", f"expected comparison operand, got {rhs.text!r}", rhs.span)
        if rhs.text in self.registry:
            rdecl = self.registry.resolve(rhs.text)
            if rdecl.kind is not decl.kind:
                self._abort("E_TYPE_MISMATCH",
                            f"{left.text} is {decl.kind.value} but {rhs.text} is {rdecl.kind.value}", rhs.span)
            if decl.kind is not ParamKind.NUMBER and op in _ORDER_OPS:
                self._abort("E_TYPE_MISMATCH", f"ordering comparison on {decl.kind.value}", rhs.span)
            return CmpParamParam(left.text, op, rhs.text)
        # Unregistered identifier: an enum label of the left parameter.
        if decl.kind is not ParamKind.ENUM:
            self._abort("E_UNKNOWN_PARAM", f"unknown parameter {rhs.text}", rhs.span)
        if op in _ORDER_OPS:
            self._abort("E_TYPE_MISMATCH", "ordering comparison on enum", rhs.span)
        if rhs.text not in decl.labels and not in_detect:
            # Inside detect the same situation is a lint warning: the action
            # degrades to never-auto-completing instead of rejecting the file.
            self._abort("E_UNKNOWN_LABEL", f"{rhs.text} is not a label of {left.text}", rhs.span)
        return CmpParamConst(left.text, op, rhs.text)

    # -- token helpers ----------------------------------------------------------

    def _expect(self, line: _Line, kind: str, what: str) -> Token:
        tok = line.next()
        if tok.kind != kind:
            self._abort("E_SYNTAX", f"expected {what!r}, got {tok.text or 'end of line'!r}", tok.span)
        return tok

    def _expect_word(self, line: _Line, word: str) -> Token:
        tok = line.next()
        if tok.text != word:
            self._abort("E_SYNTAX", f"expected {word!r}, got {tok.text or 'end of line'!r}", tok.span)
        return tok

    def _expect_ident(self, line: _Line, what: str) -> Token:
        tok = line.next()
        if tok.kind != "word":
            self._abort("E_SYNTAX", f"expected {what}, got {tok.text or 'end of line'!r}", tok.span)
        if not IDENT_RE.match(tok.text):
            self._abort("E_BAD_ID", f"{tok.text!r} must match [A-Z][A-Z0-9_]*", tok.span)
        return tok

    def _expect_eol(self, line: _Line) -> None:
        tok = line.peek()
        if tok.kind != "eol":
            self._abort("E_SYNTAX", f"unexpected trailing {tok.text!r}", tok.span)


class _ProcBuilder:
    def __init__(self, pid: str, kind: ProcKind, phase: FlightPhase,
                 priority: Optional[int], ecam: bool, span: SourceSpan):
        self.id = pid
        self.kind = kind
        self.phase = phase
        self.priority = priority
        self.ecam = ecam
        self.span = span
        self.title: Optional[str] = None
        self.embeds: list[str] = []
        self.iblocks: list[dict] = []
        self.iblock: Optional[dict] = None

    def close_iblock(self, parser: _Parser) -> None:
        if self.iblock is not None:
            self.iblocks.append(self.iblock)
            self.iblock = None
