"""Well-definedness validation.

Violations are report entries, not exceptions: the report lists each broken
clause of the well-defined-controlled-system definition.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .model import (
    INIT_EVENT,
    Choice,
    Coop,
    Model,
    Name,
    Nil,
    Prefix,
    Subcomponent,
    Term,
)


@dataclass(frozen=True)
class Violation:
    clause: str
    message: str

    def __str__(self):
        return f"{self.clause}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "well-defined"
        return "\n".join(str(v) for v in self.violations)


def validate_well_defined(model: Model) -> ValidationReport:
    out = []
    add = lambda clause, msg: out.append(Violation(clause, msg))

    # subcomponents: flat recursion, distinct events, exactly one init
    for sub in model.subcomponents.values():
        seen = set()
        init_count = 0
        for event, act in sub.prefixes:
            if event == INIT_EVENT:
                init_count += 1
            elif event in seen and event not in model.stochastic_events:
                # duplicated stochastic prefixes are multiset multiplicity;
                # duplicated instantaneous events violate distinctness
                add("duplicate event in subcomponent",
                    f"subcomponent {sub.name} has two prefixes on {event}")
            seen.add(event)
            if act is None:
                add("subcomponent prefix without activity",
                    f"{sub.name}: prefix {event} carries no activity")
        if init_count != 1:
            add("subcomponent init prefix",
                f"subcomponent {sub.name} has {init_count} init prefixes, needs 1")

    # controllers: event prefixes only, no activities, two-level grammar
    for name, term in model.controllers.items():
        _check_controller(model, name, term, out, top=True)

    # uncontrolled system: cooperation of subcomponent names, each at most once
    used = []
    bad = _collect_uncontrolled(model, model.uncontrolled, used, out)
    if not bad:
        dupes = {n for n in used if used.count(n) > 1}
        for n in sorted(dupes):
            out.append(Violation(
                "subcomponent used more than once",
                f"subcomponent {n} appears more than once in the system"))
        # shared-event synchronisation between subcomponents
        _check_shared_sync(model, model.uncontrolled, out)

    # controller/system event agreement
    sys_events = model.events_of(model.uncontrolled)
    con_events = model.events_of(model.controller)
    for e in sorted(con_events - sys_events):
        add("controller event not in uncontrolled system",
            f"event {e} appears only in the controller")
    for e in sorted(sys_events - con_events - {INIT_EVENT}):
        add("uncontrolled event not in controller",
            f"event {e} appears only in the uncontrolled system")

    # event conditions: every event has one; init activation is true
    for e in sorted(sys_events | con_events | {INIT_EVENT}):
        if e not in model.event_conditions:
            add("missing event condition", f"event {e} has no ec entry")
    ec_init = model.event_conditions.get(INIT_EVENT)
    if ec_init is not None and not (
        ec_init.kind == "guard" and ec_init.activation == ex.TRUE
    ):
        add("init activation", "ec(init) activation must be true")
    for e in sorted(set(model.event_conditions) - sys_events - con_events
                    - {INIT_EVENT}):
        add("unused event condition", f"ec entry for unknown event {e}")
    if INIT_EVENT in model.stochastic_events:
        add("init is reserved", "init cannot be a stochastic event")

    # reset conjunctions assign each variable at most once
    for e, ec in sorted(model.event_conditions.items()):
        seen_vars = set()
        for atom in ec.reset:
            if atom.var in seen_vars:
                add("reset assigns variable twice",
                    f"ec({e}) resets {atom.var} more than once")
            seen_vars.add(atom.var)
            if atom.var not in model.variables:
                add("reset of unknown variable",
                    f"ec({e}) resets undeclared variable {atom.var}")

    # influence plumbing
    param_names = set(model.params)
    for sub in model.subcomponents.values():
        for event, act in sub.prefixes:
            if act is None:
                continue
            if act.influence not in model.iv:
                add("influence without target variable",
                    f"influence {act.influence} is not in the iv map")
            if act.itype not in model.influence_types:
                add("undefined influence type",
                    f"influence type {act.itype} has no definition")
            for a in act.itype_args:
                for v in ex.free_vars(a):
                    if v not in model.variables and v not in param_names:
                        add("influence type argument out of scope",
                            f"{sub.name}: {act.itype} argument uses unknown {v}")
    for i, v in sorted(model.iv.items()):
        if v not in model.variables:
            add("iv target not a variable", f"iv({i}) = {v} is undeclared")

    # namespaces pairwise disjoint
    spaces = {
        "events": set(model.event_conditions),
        "influences": set(model.influences),
        "influence types": set(model.influence_types),
        "variables": set(model.variables),
    }
    names = list(spaces)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            for n in sorted(spaces[a] & spaces[b]):
                add("namespace clash", f"{n} is both in {a} and {b}")

    return ValidationReport(tuple(out))


def _check_controller(model: Model, ctx: str, term: Term, out: list,
                      top: bool) -> None:
    """Controllers follow the two-level grammar: sequential terms under
    cooperation, never the other way around."""
    if isinstance(term, Coop):
        if not top:
            out.append(Violation(
                "controller grammar",
                f"{ctx}: cooperation nested under prefix or choice"))
        _check_controller(model, ctx, term.left, out, top=True)
        _check_controller(model, ctx, term.right, out, top=True)
        return
    _check_sequential(model, ctx, term, out)


def _check_sequential(model: Model, ctx: str, term: Term, out: list) -> None:
    if isinstance(term, Nil):
        return
    if isinstance(term, Name):
        if term.name in model.subcomponents:
            out.append(Violation(
                "controller references subcomponent",
                f"{ctx}: {term.name} is a subcomponent, not a controller"))
        elif term.name not in model.controllers:
            out.append(Violation(
                "unknown controller name", f"{ctx}: {term.name} is undefined"))
        return
    if isinstance(term, Prefix):
        if term.activity is not None:
            out.append(Violation(
                "controller prefix with activity",
                f"{ctx}: prefix {term.event} carries an activity"))
        if term.event == INIT_EVENT:
            out.append(Violation(
                "init inside controller", f"{ctx}: init cannot be a prefix"))
        _check_sequential(model, ctx, term.cont, out)
        return
    if isinstance(term, Choice):
        _check_sequential(model, ctx, term.left, out)
        _check_sequential(model, ctx, term.right, out)
        return
    if isinstance(term, Coop):
        out.append(Violation(
            "controller grammar",
            f"{ctx}: cooperation nested under prefix or choice"))
        return
    raise TypeError(term)


def _collect_uncontrolled(model: Model, term: Term, used: list,
                          out: list) -> bool:
    """Collect subcomponent names; True if the term is structurally wrong."""
    if isinstance(term, Name):
        if term.name in model.subcomponents:
            used.append(term.name)
            return False
        out.append(Violation(
            "uncontrolled system shape",
            f"{term.name} is not a subcomponent"))
        return True
    if isinstance(term, Coop):
        a = _collect_uncontrolled(model, term.left, used, out)
        b = _collect_uncontrolled(model, term.right, used, out)
        return a or b
    out.append(Violation(
        "uncontrolled system shape",
        "uncontrolled system must be a cooperation of subcomponent names"))
    return True


def _check_shared_sync(model: Model, term: Term, out: list) -> None:
    """Each cooperation in the uncontrolled system synchronises on all events
    shared between its two sides."""
    if not isinstance(term, Coop):
        return
    shared = model.events_of(term.left) & model.events_of(term.right)
    missing = shared - term.sync
    if missing:
        out.append(Violation(
            "shared events not synchronised",
            "uncontrolled cooperation omits shared event(s) "
            + ", ".join(sorted(missing))))
    _check_shared_sync(model, term.left, out)
    _check_shared_sync(model, term.right, out)
