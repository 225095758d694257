"""Condition expressions and their three-valued evaluation over flight state.

Missing parameters evaluate to Unknown rather than False so that neither
triggers nor auto-completions fire on absent data. Kleene logic applies:
False absorbs Unknown in `and`, True absorbs it in `or`.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from .errors import OcsisError
from .model import FlightState, ParamKind, ParamValue, Registry

ORDER_OPS = ("<", "<=", ">", ">=")


class TriState(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @staticmethod
    def of(flag: bool) -> "TriState":
        return TriState.TRUE if flag else TriState.FALSE


class CmpOp(Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    def apply(self, a, b) -> bool:
        return _OP_FUNCS[self](a, b)


_OP_FUNCS = {
    CmpOp.EQ: operator.eq,
    CmpOp.NE: operator.ne,
    CmpOp.LT: operator.lt,
    CmpOp.LE: operator.le,
    CmpOp.GT: operator.gt,
    CmpOp.GE: operator.ge,
}


@dataclass(frozen=True)
class TrueExpr:
    pass


@dataclass(frozen=True)
class CmpParamConst:
    param: str
    op: CmpOp
    value: ParamValue


@dataclass(frozen=True)
class CmpParamParam:
    left: str
    op: CmpOp
    right: str


@dataclass(frozen=True)
class Sustained:
    child: "ConditionExpr"
    duration: int  # consecutive ticks, >= 1

    def __post_init__(self):
        if self.duration < 1:
            raise OcsisError("sustained duration must be >= 1")


@dataclass(frozen=True)
class And:
    children: tuple["ConditionExpr", ...] = ()


@dataclass(frozen=True)
class Or:
    children: tuple["ConditionExpr", ...] = ()


@dataclass(frozen=True)
class Not:
    child: "ConditionExpr"


ConditionExpr = Union[TrueExpr, CmpParamConst, CmpParamParam, Sustained, And, Or, Not]

NEVER = Not(TrueExpr())  # authoring default for omitted triggers


def referenced_params(expr: ConditionExpr) -> set[str]:
    if isinstance(expr, TrueExpr):
        return set()
    if isinstance(expr, CmpParamConst):
        return {expr.param}
    if isinstance(expr, CmpParamParam):
        return {expr.left, expr.right}
    if isinstance(expr, (Sustained, Not)):
        return referenced_params(expr.child)
    return set().union(*(referenced_params(c) for c in expr.children)) if expr.children else set()


def max_sustain(expr: ConditionExpr) -> int:
    """Longest Sustained window in the tree; the history bound the engine needs."""
    if isinstance(expr, Sustained):
        # Nested windows look further back from each sampled tick.
        return expr.duration + max_sustain(expr.child) - 1
    if isinstance(expr, Not):
        return max_sustain(expr.child)
    if isinstance(expr, (And, Or)):
        return max((max_sustain(c) for c in expr.children), default=1)
    return 1


def _lookup(state: FlightState, env: Mapping[str, ParamValue], name: str):
    if name in env:
        return env[name]
    return state.get(name)


def _compare(registry: Registry, op: CmpOp, a, b) -> TriState:
    return TriState.of(op.apply(a, b))


def eval_condition(
    expr: ConditionExpr,
    history: Sequence[FlightState],
    registry: Registry,
    env: Optional[Mapping[str, ParamValue]] = None,
) -> TriState:
    """Evaluate `expr` against `history` (oldest first, ending at now).

    `env` overlays pseudo-parameter bindings (the engine supplies
    CHECK_ALL_DONE while judging goals). Referencing a parameter absent
    from the registry raises UnknownParameter; a registered parameter
    missing from the latest state yields Unknown.
    """
    if not history:
        raise OcsisError("eval_condition needs at least one state")
    env = env or {}
    return _eval_at(expr, history, len(history) - 1, registry, env)


def _eval_at(expr, history, i, registry, env) -> TriState:
    if isinstance(expr, TrueExpr):
        return TriState.TRUE

    if isinstance(expr, CmpParamConst):
        registry.resolve(expr.param)
        a = _lookup(history[i], env, expr.param)
        if a is None:
            return TriState.UNKNOWN
        return _compare(registry, expr.op, a, expr.value)

    if isinstance(expr, CmpParamParam):
        registry.resolve(expr.left)
        registry.resolve(expr.right)
        a = _lookup(history[i], env, expr.left)
        b = _lookup(history[i], env, expr.right)
        if a is None or b is None:
            return TriState.UNKNOWN
        return _compare(registry, expr.op, a, b)

    if isinstance(expr, Not):
        v = _eval_at(expr.child, history, i, registry, env)
        if v is TriState.UNKNOWN:
            return v
        return TriState.of(v is TriState.FALSE)

    if isinstance(expr, And):
        result = TriState.TRUE
        for c in expr.children:
            v = _eval_at(c, history, i, registry, env)
            if v is TriState.FALSE:
                return TriState.FALSE
            if v is TriState.UNKNOWN:
                result = TriState.UNKNOWN
        return result

    if isinstance(expr, Or):
        result = TriState.FALSE
        for c in expr.children:
            v = _eval_at(c, history, i, registry, env)
            if v is TriState.TRUE:
                return TriState.TRUE
            if v is TriState.UNKNOWN:
                result = TriState.UNKNOWN
        return result

    if isinstance(expr, Sustained):
        # The window is judged from the newest state backwards. Unknown can
        # only arise from the latest state; a broken or unverifiable window
        # (short history, tick gap, older non-True) is plain False.
        now = _eval_at(expr.child, history, i, registry, env)
        if now is not TriState.TRUE:
            return now
        if i + 1 < expr.duration:
            return TriState.FALSE
        for k in range(1, expr.duration):
            if history[i - k].tick != history[i - k + 1].tick - 1:
                return TriState.FALSE
            if _eval_at(expr.child, history, i - k, registry, env) is not TriState.TRUE:
                return TriState.FALSE
        return TriState.TRUE

    raise OcsisError(f"unknown expression node {expr!r}")


def constant_fold(expr: ConditionExpr) -> Optional[bool]:
    """Boolean value of a parameter-free expression, None when state-dependent.

    Sustained folds to its child: a constant-true condition is eventually
    sustained for any window.
    """
    if isinstance(expr, TrueExpr):
        return True
    if isinstance(expr, (CmpParamConst, CmpParamParam)):
        return None
    if isinstance(expr, Sustained):
        return constant_fold(expr.child)
    if isinstance(expr, Not):
        v = constant_fold(expr.child)
        return None if v is None else not v
    if isinstance(expr, And):
        out = True
        for c in expr.children:
            v = constant_fold(c)
            if v is False:
                return False
            if v is None:
                out = None
        return out
    if isinstance(expr, Or):
        out = False
        for c in expr.children:
            v = constant_fold(c)
            if v is True:
                return True
            if v is None:
                out = None
        return out
    raise OcsisError(f"unknown expression node {expr!r}")


def format_value(value: ParamValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return value


# Precedence levels for parenthesization: or < and < not < atoms.
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def format_expr(expr: ConditionExpr) -> str:
    """Canonical text form; `parse` of the result reproduces the tree."""
    return _fmt(expr, 0)


def _fmt(expr, parent_prec: int) -> str:
    if isinstance(expr, TrueExpr):
        return "true"
    if isinstance(expr, CmpParamConst):
        return f"{expr.param} {expr.op.value} {format_value(expr.value)}"
    if isinstance(expr, CmpParamParam):
        return f"{expr.left} {expr.op.value} {expr.right}"
    if isinstance(expr, Sustained):
        return f"sustained {expr.duration} ({_fmt(expr.child, 0)})"
    if isinstance(expr, Not):
        return _wrap(f"not {_fmt(expr.child, _PREC_NOT)}", _PREC_NOT, parent_prec)
    if isinstance(expr, And):
        if not expr.children:
            return "true"
        if len(expr.children) == 1:
            return _fmt(expr.children[0], parent_prec)
        body = " and ".join(_fmt(c, _PREC_AND) for c in expr.children)
        return _wrap(body, _PREC_AND, parent_prec)
    if isinstance(expr, Or):
        if not expr.children:
            return "not true"
        if len(expr.children) == 1:
            return _fmt(expr.children[0], parent_prec)
        body = " or ".join(_fmt(c, _PREC_OR) for c in expr.children)
        return _wrap(body, _PREC_OR, parent_prec)
    raise OcsisError(f"unknown expression node {expr!r}")


def _wrap(text: str, prec: int, parent_prec: int) -> str:
    return f"({text})" if prec < parent_prec else text


def expr_type_problems(expr: ConditionExpr, registry: Registry) -> list[str]:
    """Static type checks mirroring the parser's rules, for direct API users."""
    problems = []

    def walk(e):
        if isinstance(e, CmpParamConst):
            decl = registry.resolve(e.param)
            if decl.kind is ParamKind.NUMBER:
                if not isinstance(e.value, (int, float)) or isinstance(e.value, bool):
                    problems.append(f"{e.param}: number compared with {e.value!r}")
            elif decl.kind is ParamKind.BOOL:
                if not isinstance(e.value, bool):
                    problems.append(f"{e.param}: bool compared with {e.value!r}")
                elif e.op.value in ORDER_OPS:
                    problems.append(f"{e.param}: ordering on bool")
            else:
                if not isinstance(e.value, str):
                    problems.append(f"{e.param}: enum compared with {e.value!r}")
                elif e.op.value in ORDER_OPS:
                    problems.append(f"{e.param}: ordering on enum")
                elif e.value not in decl.labels:
                    problems.append(f"{e.param}: label {e.value} outside domain")
        elif isinstance(e, CmpParamParam):
            a, b = registry.resolve(e.left), registry.resolve(e.right)
            if a.kind is not b.kind:
                problems.append(f"{e.left}/{e.right}: kind mismatch")
            elif a.kind is not ParamKind.NUMBER and e.op.value in ORDER_OPS:
                problems.append(f"{e.left}/{e.right}: ordering on {a.kind.value}")
        elif isinstance(e, (Sustained, Not)):
            walk(e.child)
        elif isinstance(e, (And, Or)):
            for c in e.children:
                walk(c)

    walk(expr)
    return problems
