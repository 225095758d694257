"""Canonical re-serialization of a procedure set.

Output is fully explicit: defaulted clauses, resolved priorities, and titles
are all spelled out, so formatting is idempotent byte-for-byte. Parameter
order is not semantic and is normalized alphabetically; procedure order is
semantic (it drives the per-phase entry tables) and is preserved.
"""
from __future__ import annotations

from ..conditions import Sustained, format_expr
from ..model import Action, ActionKind, ParamKind, Procedure, ProcedureSet

HEADER = "# ocsis procedure set"


def canonical_format(pset: ProcedureSet) -> str:
    out = [HEADER]
    params = sorted(pset.registry.decls.values(), key=lambda d: d.name)
    if params:
        out.append("")
    for decl in params:
        if decl.kind is ParamKind.ENUM:
            out.append(f"param {decl.name} enum({', '.join(decl.labels)})")
        elif decl.kind is ParamKind.NUMBER:
            unit = f" {decl.unit}" if decl.unit else ""
            out.append(f"param {decl.name} number{unit}")
        else:
            out.append(f"param {decl.name} bool")
    for proc in pset.procedures:
        out.append("")
        out.extend(_format_procedure(proc))
    return "\n".join(out) + "\n"


def _format_procedure(proc: Procedure) -> list[str]:
    head = f"procedure {proc.id} {proc.kind.value} phase {proc.phase.name}"
    if proc.priority is not None:
        head += f" priority {proc.priority}"
    if proc.ecam:
        head += " ecam"
    lines = [head, f'  title "{_escape(proc.title)}"']
    for ib in proc.iblocks:
        lines.append(f"  iblock {ib.id}")
        lines.append(f"    trigger {_clause(ib.trigger)}")
        lines.append(f"    context {_clause(ib.context)}")
        for act in ib.actions:
            lines.append(f"    {_format_action(act)}")
        lines.append(f"    goal {_clause(ib.goal)}")
        for cond, target in ib.abnormal:
            lines.append(f"    abnormal {_clause(cond)} -> {target}")
    for target in proc.embeds:
        lines.append(f"  embed {target}")
    return lines


def _clause(expr) -> str:
    # Top-level sustained reads naturally bare; everything else is wrapped
    # the way the authoring examples write it.
    if isinstance(expr, Sustained):
        return format_expr(expr)
    return f"({format_expr(expr)})"


def _format_action(act: Action) -> str:
    parts = [act.kind.value, act.id, f'"{_escape(act.label)}"']
    if act.level2 is not None:
        parts.append(f'level2 "{_escape(act.level2)}"')
    if act.level3 is not None:
        parts.append(f'level3 "{_escape(act.level3)}"')
    if act.detect is not None:
        parts.append(f"detect {_clause(act.detect)}")
    if act.applicability is not None:
        parts.append(f"when {_clause(act.applicability)}")
    return " ".join(parts)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
