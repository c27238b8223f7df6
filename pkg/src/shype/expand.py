"""Expansion of non-exponential duration sugar.

An event condition whose activation is an expression containing
random-variable terms denotes a general (non-exponential) duration. Each
such event e is rewritten into an instantaneous event with

    guard  _time = _clk_e + _dur_e
    reset  _clk_e ~ _time  and  _dur_e ~ <duration expr>  and  <original reset>

plus a clock subcomponent driving the fresh `_time` variable at unit speed.
The init reset gains `_time ~ 0`, `_clk_e ~ 0` and a first duration draw.
A model with no duration sugar is returned unchanged.
"""

from __future__ import annotations

from dataclasses import replace

from . import expr as ex
from .errors import NameClash
from .model import (
    INIT_EVENT,
    Activity,
    Coop,
    EventCondition,
    Model,
    Name,
    Subcomponent,
)

TIME_VAR = "_time"
TIME_INFLUENCE = "_t"
TIMER_NAME = "_Timer"
CONST_TYPE = "const"


def clock_var(event: str) -> str:
    return f"_clk_{event}"


def duration_var(event: str) -> str:
    return f"_dur_{event}"


def expand_general_durations(model: Model) -> Model:
    duration_events = sorted(
        e for e, ec in model.event_conditions.items() if ec.kind == "duration"
    )
    if not duration_events:
        return model

    fresh = [TIME_VAR] + [v for e in duration_events
                          for v in (clock_var(e), duration_var(e))]
    taken = (set(model.variables) | set(model.influences)
             | set(model.event_conditions) | set(model.influence_types)
             | set(model.subcomponents) | set(model.controllers))
    for name in fresh + [TIME_INFLUENCE, TIMER_NAME]:
        if name in taken:
            raise NameClash(f"expansion name {name!r} collides with the model")

    ecs = dict(model.event_conditions)
    init = ecs[INIT_EVENT]
    init_reset = list(init.reset)
    init_reset.append(ex.ResetAtom(TIME_VAR, ex.ZERO))
    for e in duration_events:
        ec = ecs[e]
        guard = ex.Cmp("=", ex.Var(TIME_VAR),
                       ex.Bin("+", ex.Var(clock_var(e)), ex.Var(duration_var(e))))
        reset = (ex.ResetAtom(clock_var(e), ex.Var(TIME_VAR)),
                 ex.ResetAtom(duration_var(e), ec.activation)) + ec.reset
        ecs[e] = EventCondition("guard", guard, reset)
        init_reset.append(ex.ResetAtom(clock_var(e), ex.ZERO))
        init_reset.append(ex.ResetAtom(duration_var(e), ec.activation))
    ecs[INIT_EVENT] = EventCondition(init.kind, init.activation,
                                     tuple(init_reset))

    timer = Subcomponent(
        TIMER_NAME,
        ((INIT_EVENT, Activity(TIME_INFLUENCE, ex.ONE, CONST_TYPE)),),
    )
    subs = dict(model.subcomponents)
    subs[TIMER_NAME] = timer
    itypes = dict(model.influence_types)
    if CONST_TYPE not in itypes:
        itypes[CONST_TYPE] = ((), ex.ONE)
    iv = dict(model.iv)
    iv[TIME_INFLUENCE] = TIME_VAR

    return replace(
        model,
        variables=model.variables + tuple(fresh),
        influence_types=itypes,
        iv=iv,
        subcomponents=subs,
        uncontrolled=Coop(model.uncontrolled, Name(TIMER_NAME),
                          frozenset({INIT_EVENT})),
        event_conditions=ecs,
        stochastic_events=model.stochastic_events - set(duration_events),
    )
