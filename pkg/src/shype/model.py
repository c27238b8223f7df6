"""Model data types: activities, process terms, event conditions, the model tuple.

A model is the full tuple: a controlled system (uncontrolled cooperation of
subcomponents, synchronised with an init-prefixed controller), the variable
and influence namespaces, event conditions, the influence-to-variable map and
the influence-type definition table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Optional, Union

from . import expr as ex
from .errors import UnknownParameter

INIT_EVENT = "init"


@dataclass(frozen=True)
class Activity:
    """(influence, strength, influence type) attached to an event prefix."""

    influence: str
    strength: ex.Expr
    itype: str
    itype_args: tuple = ()  # expressions, normally plain variables


# ---------------------------------------------------------------------------
# process terms


@dataclass(frozen=True)
class Nil:
    def __repr__(self):
        return "Nil()"


@dataclass(frozen=True)
class Name:
    """Reference to a named subcomponent or controller definition."""

    name: str


@dataclass(frozen=True)
class Prefix:
    event: str
    activity: Optional[Activity]
    cont: "Term"


@dataclass(frozen=True)
class Choice:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Coop:
    left: "Term"
    right: "Term"
    sync: frozenset


Term = Union[Nil, Name, Prefix, Choice, Coop]


def coop_star(left: Term, right: Term, model: "Model") -> Coop:
    """Cooperation over all events shared by both sides."""
    shared = model.events_of(left) & model.events_of(right)
    return Coop(left, right, frozenset(shared))


@dataclass(frozen=True)
class Subcomponent:
    """A flat self-recursive choice of event:activity prefixes."""

    name: str
    prefixes: tuple  # of (event, Activity)

    @property
    def events(self) -> set:
        return {e for e, _ in self.prefixes}


@dataclass(frozen=True)
class EventCondition:
    """Activation (guard, rate or duration sugar) plus a reset conjunction."""

    kind: str  # guard | rate | duration
    activation: object  # Guard for kind=guard, Expr otherwise
    reset: tuple  # of ex.ResetAtom


@dataclass(frozen=True)
class Model:
    variables: tuple
    params: dict
    influence_types: dict  # name -> (param name tuple, body Expr)
    iv: dict  # influence -> variable
    subcomponents: dict  # name -> Subcomponent
    controllers: dict  # name -> Term (controller definitions)
    uncontrolled: Term
    controller: Term
    event_conditions: dict  # event -> EventCondition
    stochastic_events: frozenset
    source_order: tuple = field(compare=False, default=())  # formatter hint

    # -- namespaces -----------------------------------------------------

    @cached_property
    def influences(self) -> frozenset:
        out = set(self.iv)
        for s in self.subcomponents.values():
            for _, act in s.prefixes:
                if act is not None:
                    out.add(act.influence)
        return frozenset(out)

    @cached_property
    def events(self) -> frozenset:
        return frozenset(self.event_conditions)

    @cached_property
    def instantaneous_events(self) -> frozenset:
        return self.events - self.stochastic_events - {INIT_EVENT}

    @cached_property
    def system(self) -> Term:
        """The controlled system term: uncontrolled joined with init.controller."""
        ctrl = Prefix(INIT_EVENT, None, self.controller)
        shared = self.events_of(self.uncontrolled) & self.events_of(ctrl)
        return Coop(self.uncontrolled, ctrl, frozenset(shared))

    def events_of(self, t: Term) -> set:
        """ev(t): every event syntactically occurring in t, definitions unfolded."""
        out: set = set()
        seen: set = set()

        def go(u: Term):
            if isinstance(u, Nil):
                return
            if isinstance(u, Name):
                if u.name in seen:
                    return
                seen.add(u.name)
                if u.name in self.subcomponents:
                    out.update(self.subcomponents[u.name].events)
                elif u.name in self.controllers:
                    go(self.controllers[u.name])
                return
            if isinstance(u, Prefix):
                out.add(u.event)
                go(u.cont)
                return
            if isinstance(u, (Choice, Coop)):
                go(u.left)
                go(u.right)
                return
            raise TypeError(u)

        go(t)
        return out

    # -- parameter resolution -------------------------------------------

    def resolve(self, overrides: Optional[Mapping[str, float]] = None) -> "Model":
        """Substitute parameter values into every expression.

        Parameters may reference earlier parameters; references are chased
        to fixpoint. The result has an empty parameter table.
        """
        values = dict(self.params)
        if overrides:
            for k, v in overrides.items():
                if k not in values:
                    raise UnknownParameter(k)
                values[k] = ex.Num(float(v))
        # chase parameter-to-parameter references
        for _ in range(len(values) + 1):
            changed = False
            for k, e in values.items():
                e2 = ex.substitute(e, {n: values[n] for n in ex.free_vars(e)
                                       if n in values and n != k})
                if e2 != e:
                    values[k] = e2
                    changed = True
            if not changed:
                break
        sub = values

        def se(e):
            return ex.substitute(e, sub)

        def sa(a: Optional[Activity]):
            if a is None:
                return None
            return Activity(a.influence, se(a.strength), a.itype,
                            tuple(se(x) for x in a.itype_args))

        def st(t: Term) -> Term:
            if isinstance(t, (Nil, Name)):
                return t
            if isinstance(t, Prefix):
                return Prefix(t.event, sa(t.activity), st(t.cont))
            if isinstance(t, Choice):
                return Choice(st(t.left), st(t.right))
            if isinstance(t, Coop):
                return Coop(st(t.left), st(t.right), t.sync)
            raise TypeError(t)

        subs = {
            n: Subcomponent(s.name, tuple((e, sa(a)) for e, a in s.prefixes))
            for n, s in self.subcomponents.items()
        }
        ctrls = {n: st(c) for n, c in self.controllers.items()}
        ecs = {}
        for name, ec in self.event_conditions.items():
            if ec.kind == "guard":
                act = ex.substitute_guard(ec.activation, sub)
            else:
                act = se(ec.activation)
            ecs[name] = EventCondition(ec.kind, act, ex.substitute_reset(ec.reset, sub))
        itypes = {n: (ps, ex.substitute(body, {k: v for k, v in sub.items()
                                               if k not in ps}))
                  for n, (ps, body) in self.influence_types.items()}
        return replace(
            self,
            params={},
            influence_types=itypes,
            subcomponents=subs,
            controllers=ctrls,
            uncontrolled=st(self.uncontrolled),
            controller=st(self.controller),
            event_conditions=ecs,
        )

    # -- influence-type application --------------------------------------

    def itype_body(self, itype: str, args: tuple) -> ex.Expr:
        """Instantiate the definition body of an influence type at ``args``."""
        ps, body = self.influence_types[itype]
        return ex.substitute(body, dict(zip(ps, args)))

    def initial_valuation_reset(self) -> tuple:
        return self.event_conditions[INIT_EVENT].reset
