"""Consistency lints over a parsed procedure set.

All lints are warnings: the set is executable, but something is probably
not what the author meant.
"""
from __future__ import annotations

import itertools
from typing import Optional

from ..conditions import (
    And,
    CmpParamConst,
    CmpParamParam,
    ConditionExpr,
    Not,
    Or,
    Sustained,
    TrueExpr,
    constant_fold,
    referenced_params,
)
from ..model import ParamKind, ProcKind, ProcedureSet
from .diagnostics import Diagnostic, SourceSpan, warning

# Above this many assignments the exhaustive satisfiability check is skipped.
ENUM_BUDGET = 100_000

_FALLBACK = SourceSpan("<set>", 1, 1)


def lint(pset: ProcedureSet) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    for proc in pset.procedures:
        first = proc.iblocks[0]
        if proc.kind is ProcKind.ABNORMAL and constant_fold(first.trigger) is True:
            diags.append(warning(
                "W_ALWAYS_TRIGGERS",
                f"abnormal procedure {proc.id} triggers unconditionally",
                _span(pset, f"{proc.id}.{first.id}.trigger", proc.id)))
        for ib in proc.iblocks:
            for act in ib.actions:
                if act.detect is not None:
                    diags.extend(_unknown_labels(
                        pset, act.detect,
                        _span(pset, f"{proc.id}.{ib.id}.{act.id}.detect",
                              f"{proc.id}.{ib.id}.{act.id}")))
            _check_satisfiable(pset, ib.goal, f"goal of {proc.id}.{ib.id}",
                               _span(pset, f"{proc.id}.{ib.id}.goal", f"{proc.id}.{ib.id}"), diags)
            for idx, (cond, _) in enumerate(ib.abnormal):
                _check_satisfiable(pset, cond, f"abnormal condition in {proc.id}.{ib.id}",
                                   _span(pset, f"{proc.id}.{ib.id}.abnormal.{idx}",
                                         f"{proc.id}.{ib.id}"), diags)
    return diags


def _span(pset: ProcedureSet, key: str, *fallbacks: str) -> SourceSpan:
    for k in (key, *fallbacks):
        if k in pset.spans:
            return pset.spans[k]
    return _FALLBACK


def _unknown_labels(pset: ProcedureSet, expr: ConditionExpr, span: SourceSpan) -> list[Diagnostic]:
    out = []
    for node in _walk(expr):
        if isinstance(node, CmpParamConst) and isinstance(node.value, str) \
                and not isinstance(node.value, bool):
            decl = pset.registry.resolve(node.param)
            if decl.kind is ParamKind.ENUM and node.value not in decl.labels:
                out.append(warning(
                    "W_UNKNOWN_LABEL",
                    f"{node.value} is not a label of {node.param}; detect can never fire",
                    span))
    return out


def _walk(expr: ConditionExpr):
    yield expr
    if isinstance(expr, (Sustained, Not)):
        yield from _walk(expr.child)
    elif isinstance(expr, (And, Or)):
        for c in expr.children:
            yield from _walk(c)


def _check_satisfiable(pset, expr, what: str, span: SourceSpan, diags: list) -> None:
    sat = _satisfiable(pset, expr)
    if sat is False:
        diags.append(warning("W_UNSATISFIABLE", f"{what} can never hold", span))
    elif sat is None:
        diags.append(warning("W_UNSAT_CHECK_SKIPPED",
                             f"{what}: domain too large to enumerate", span))


def _satisfiable(pset: ProcedureSet, expr: ConditionExpr) -> Optional[bool]:
    """True/False when decidable by enumeration, None when skipped for size.

    Only finite domains (bool, enum) are enumerable; a number parameter in
    the expression ends the check quietly. Sustained reduces to its child:
    a satisfiable condition can be sustained by holding it.
    """
    folded = constant_fold(expr)
    if folded is not None:
        return folded
    params = sorted(referenced_params(expr))
    domains = []
    for name in params:
        decl = pset.registry.resolve(name)
        if decl.kind is ParamKind.NUMBER:
            return True  # infinite domain: assume satisfiable, not our lint
        domains.append((name, (True, False) if decl.kind is ParamKind.BOOL else decl.labels))
    total = 1
    for _, dom in domains:
        total *= len(dom)
    if total > ENUM_BUDGET:
        return None
    for combo in itertools.product(*(dom for _, dom in domains)):
        binding = dict(zip((n for n, _ in domains), combo))
        if _eval_bound(expr, binding):
            return True
    return False


def _eval_bound(expr: ConditionExpr, binding: dict) -> bool:
    if isinstance(expr, TrueExpr):
        return True
    if isinstance(expr, CmpParamConst):
        return expr.op.apply(binding[expr.param], expr.value)
    if isinstance(expr, CmpParamParam):
        return expr.op.apply(binding[expr.left], binding[expr.right])
    if isinstance(expr, Sustained):
        return _eval_bound(expr.child, binding)
    if isinstance(expr, Not):
        return not _eval_bound(expr.child, binding)
    if isinstance(expr, And):
        return all(_eval_bound(c, binding) for c in expr.children)
    return any(_eval_bound(c, binding) for c in expr.children)
