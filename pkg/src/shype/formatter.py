"""Canonical pretty-printer for models; parse(format(m)) == m structurally."""

from __future__ import annotations

from . import expr as ex
from .model import (
    INIT_EVENT,
    Choice,
    Coop,
    Model,
    Name,
    Nil,
    Prefix,
    Term,
)

# term precedence: cooperation 1, choice 2, prefix/atom 3
_COOP, _CHOICE, _PREFIX = 1, 2, 3


def _fmt_activity(a) -> str:
    s = f"{a.influence}, {ex.fmt_expr(a.strength)}, {a.itype}"
    if a.itype_args:
        s += "(" + ", ".join(ex.fmt_expr(x) for x in a.itype_args) + ")"
    return f"({s})"


def fmt_term(t: Term, parent: int = 0) -> str:
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Name):
        return t.name
    if isinstance(t, Prefix):
        head = t.event
        if t.activity is not None:
            head += ":" + _fmt_activity(t.activity)
        return f"{head}.{fmt_term(t.cont, _PREFIX)}"
    if isinstance(t, Choice):
        s = f"{fmt_term(t.left, _CHOICE)} + {fmt_term(t.right, _CHOICE + 1)}"
        return f"({s})" if parent > _CHOICE else s
    if isinstance(t, Coop):
        op = "||" if not t.sync else "<" + ", ".join(sorted(t.sync)) + ">"
        s = f"{fmt_term(t.left, _COOP)} {op} {fmt_term(t.right, _COOP + 1)}"
        return f"({s})" if parent > _COOP else s
    raise TypeError(t)


def format_model(model: Model) -> str:
    lines = []

    if model.params:
        lines.append("params {")
        for name, e in model.params.items():
            lines.append(f"  {name} = {ex.fmt_expr(e)}")
        lines.append("}")
        lines.append("")

    lines.append("variables { " + " ".join(model.variables) + " }")
    lines.append("")

    lines.append("types {")
    for name, (ps, body) in model.influence_types.items():
        head = name + ("(" + ", ".join(ps) + ")" if ps else "")
        lines.append(f"  {head} = {ex.fmt_expr(body)}")
    lines.append("}")
    lines.append("")

    lines.append("iv {")
    for infl, var in model.iv.items():
        lines.append(f"  {infl} -> {var}")
    lines.append("}")
    lines.append("")

    for sub in model.subcomponents.values():
        parts = [f"{e}:{_fmt_activity(a)}.{sub.name}" for e, a in sub.prefixes]
        lines.append(f"subcomponent {sub.name} = " + " + ".join(parts))
    lines.append("")

    for name, term in model.controllers.items():
        lines.append(f"controller {name} = {fmt_term(term)}")
    if model.controllers:
        lines.append("")

    unc = fmt_term(model.uncontrolled, _COOP + 1)
    ctl = fmt_term(model.controller, _PREFIX)
    lines.append(f"system = {unc} <init> init.{ctl}")
    lines.append("")

    lines.append("ec {")
    for event, ec in model.event_conditions.items():
        marker = "stoch " if event in model.stochastic_events else ""
        if ec.kind == "guard":
            act = ex.fmt_guard(ec.activation)
        else:
            act = ex.fmt_expr(ec.activation)
        lines.append(f"  {marker}{event} = ({act}, {ex.fmt_reset(ec.reset)})")
    lines.append("}")
    lines.append("")

    return "\n".join(lines)
