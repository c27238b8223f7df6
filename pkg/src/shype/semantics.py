"""Operational semantics: states, the six derivation rules, LTS construction.

A configuration pairs a controlled-system derivative with an operational
state sigma mapping influence names to (strength, influence type) pairs.
The labelled transition system is the fixed point of the successor relation
from the configuration reached by the init event.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from . import expr as ex
from .errors import EvalError, GammaUndefined, StateSpaceCap
from .model import (
    INIT_EVENT,
    Activity,
    Choice,
    Coop,
    Model,
    Name,
    Nil,
    Prefix,
    Term,
)

DEFAULT_STATE_CAP = 10**6


@dataclass(frozen=True)
class OperationalState:
    """sigma: influence -> (strength, itype, itype args); sorted entries."""

    entries: tuple  # of (influence, strength: float, itype: str, args: tuple)

    @staticmethod
    def empty() -> "OperationalState":
        return OperationalState(())

    def get(self, influence: str):
        for e in self.entries:
            if e[0] == influence:
                return e[1:]
        return None

    def updated(self, influence: str, strength: float, itype: str,
                args: tuple) -> "OperationalState":
        rest = tuple(e for e in self.entries if e[0] != influence)
        new = rest + ((influence, strength, itype, args),)
        return OperationalState(tuple(sorted(new)))

    def as_dict(self) -> dict:
        return {e[0]: e[1:] for e in self.entries}

    def __str__(self):
        parts = []
        for i, r, t, args in self.entries:
            ty = t + ("(" + ",".join(ex.fmt_expr(a) for a in args) + ")"
                      if args else "")
            parts.append(f"{i}->({ex.fmt_num(r)},{ty})")
        return "{" + ", ".join(parts) + "}"


def apply_update(state: OperationalState, activity: Activity) -> OperationalState:
    """sigma[iota -> (r, I)]; the strength must be a resolved constant."""
    r = ex.const_value(activity.strength)
    if r is None:
        raise EvalError(
            f"influence strength {ex.fmt_expr(activity.strength)} is not constant"
        )
    return state.updated(activity.influence, r, activity.itype,
                         activity.itype_args)


def merge_gamma(sigma: OperationalState, tau: OperationalState,
                tau2: OperationalState) -> Optional[OperationalState]:
    """Merge two operational states; None when they conflict."""
    influences = ({e[0] for e in sigma.entries} | {e[0] for e in tau.entries}
                  | {e[0] for e in tau2.entries})
    out = []
    for i in sorted(influences):
        s, t, t2 = sigma.get(i), tau.get(i), tau2.get(i)
        if s == t2:
            merged = t
        elif s == t:
            merged = t2
        else:
            return None
        if merged is not None:
            out.append((i,) + merged)
    return OperationalState(tuple(out))


@dataclass(frozen=True)
class Configuration:
    term: Term
    state: OperationalState


# ---------------------------------------------------------------------------
# successor derivation (the six rules)


def successors(config: Configuration, model: Model) -> List[Tuple[str, Configuration]]:
    """All derivations from the configuration; duplicates are multiplicity."""
    out = []
    for event, term, state in _moves(config.term, config.state, model):
        out.append((event, Configuration(term, state)))
    return out


def _moves(term: Term, sigma: OperationalState,
           model: Model) -> Iterable[Tuple[str, Term, OperationalState]]:
    if isinstance(term, Nil):
        return
    if isinstance(term, Prefix):
        if term.activity is None:
            yield term.event, term.cont, sigma
        else:
            yield term.event, term.cont, apply_update(sigma, term.activity)
        return
    if isinstance(term, Choice):
        yield from _moves(term.left, sigma, model)
        yield from _moves(term.right, sigma, model)
        return
    if isinstance(term, Name):
        # Constant rule: unfold the definition, keep derivatives as written
        yield from _moves(_unfold(term.name, model), sigma, model)
        return
    if isinstance(term, Coop):
        left_moves = list(_moves(term.left, sigma, model))
        right_moves = list(_moves(term.right, sigma, model))
        for event, t, tau in left_moves:
            if event not in term.sync:
                yield event, Coop(t, term.right, term.sync), tau
        for event, t, tau in right_moves:
            if event not in term.sync:
                yield event, Coop(term.left, t, term.sync), tau
        for event in sorted(term.sync):
            for e1, t1, tau1 in left_moves:
                if e1 != event:
                    continue
                for e2, t2, tau2 in right_moves:
                    if e2 != event:
                        continue
                    merged = merge_gamma(sigma, tau1, tau2)
                    if merged is None:
                        raise GammaUndefined(
                            f"conflicting updates on event {event}")
                    yield event, Coop(t1, t2, term.sync), merged
        return
    raise TypeError(term)


def _unfold(name: str, model: Model) -> Term:
    if name in model.subcomponents:
        sub = model.subcomponents[name]
        term: Term = None
        for event, act in sub.prefixes:
            p = Prefix(event, act, Name(name))
            term = p if term is None else Choice(term, p)
        return term
    if name in model.controllers:
        return model.controllers[name]
    raise EvalError(f"undefined process name {name!r}")


# ---------------------------------------------------------------------------
# structural sets (ev, in, pr)


def ev_set(term: Term, model: Model) -> set:
    return model.events_of(term)


def in_set(term: Term, model: Model) -> set:
    out: set = set()
    seen: set = set()

    def go(t: Term):
        if isinstance(t, Nil):
            return
        if isinstance(t, Name):
            if t.name in seen:
                return
            seen.add(t.name)
            if t.name in model.subcomponents:
                for _, act in model.subcomponents[t.name].prefixes:
                    if act is not None:
                        out.add(act.influence)
            elif t.name in model.controllers:
                go(model.controllers[t.name])
            return
        if isinstance(t, Prefix):
            if t.activity is not None:
                out.add(t.activity.influence)
            go(t.cont)
            return
        if isinstance(t, (Choice, Coop)):
            go(t.left)
            go(t.right)
            return
        raise TypeError(t)

    go(term)
    return out


def pr_set(term: Term, model: Model) -> set:
    out: set = set()
    seen: set = set()

    def go(t: Term):
        if isinstance(t, Nil):
            return
        if isinstance(t, Name):
            if t.name in seen:
                return
            seen.add(t.name)
            if t.name in model.subcomponents:
                for event, act in model.subcomponents[t.name].prefixes:
                    if act is not None:
                        out.add((event, act))
            elif t.name in model.controllers:
                go(model.controllers[t.name])
            return
        if isinstance(t, Prefix):
            if t.activity is not None:
                out.add((t.event, t.activity))
            go(t.cont)
            return
        if isinstance(t, (Choice, Coop)):
            go(t.left)
            go(t.right)
            return
        raise TypeError(t)

    go(term)
    return out


# ---------------------------------------------------------------------------
# the labelled multitransition system


@dataclass(frozen=True)
class Lts:
    configurations: tuple  # indexable; configurations[i] is config id i
    transitions: dict  # (src id, event, tgt id) -> multiplicity
    initial: int  # id of the post-init configuration
    pre_initial: Configuration  # the configuration before init fires

    def index_of(self, config: Configuration) -> int:
        return self.configurations.index(config)

    def states(self) -> set:
        """st(P): the distinct operational states."""
        return {c.state for c in self.configurations}

    def outgoing(self, src: int):
        for (s, event, t), mult in self.transitions.items():
            if s == src:
                yield event, t, mult


def build_lts(model: Model, cap: int = DEFAULT_STATE_CAP) -> Lts:
    """Fixed-point closure of the successor relation from the post-init
    configuration. The model must be parameter-resolved."""
    start = Configuration(model.system, OperationalState.empty())
    init_targets = [c for e, c in successors(start, model) if e == INIT_EVENT]
    if not init_targets:
        raise EvalError("the system has no init transition")
    first = init_targets[0]
    for other in init_targets[1:]:
        if other != first:
            raise EvalError("init reaches more than one configuration")

    index: Dict[Configuration, int] = {first: 0}
    configs = [first]
    transitions: Dict[Tuple[int, str, int], int] = {}
    frontier = [first]
    while frontier:
        next_frontier = []
        for config in frontier:
            src = index[config]
            for event, tgt in successors(config, model):
                if tgt not in index:
                    if len(configs) >= cap:
                        raise StateSpaceCap(
                            f"more than {cap} configurations reachable")
                    index[tgt] = len(configs)
                    configs.append(tgt)
                    next_frontier.append(tgt)
                key = (src, event, index[tgt])
                transitions[key] = transitions.get(key, 0) + 1
        frontier = next_frontier
    return Lts(tuple(configs), transitions, 0, start)


# ---------------------------------------------------------------------------
# mode ODEs


def ode_system_for(config: Configuration, model: Model) -> Dict[str, ex.Expr]:
    """dV/dt = sum over influences mapped to V of strength * itype body."""
    return ode_system_for_state(config.state, model)


def ode_system_for_state(state: OperationalState,
                         model: Model) -> Dict[str, ex.Expr]:
    from .errors import MissingInfluenceTypeDef

    out: Dict[str, ex.Expr] = {v: ex.ZERO for v in model.variables}
    for influence, strength, itype, args in state.entries:
        if itype not in model.influence_types:
            raise MissingInfluenceTypeDef(itype)
        var = model.iv[influence]
        body = model.itype_body(itype, args)
        term = ex.Bin("*", ex.Num(strength), body)
        out[var] = term if out[var] == ex.ZERO else ex.Bin("+", out[var], term)
    return out


def ode_key(system: Dict[str, ex.Expr]) -> tuple:
    """Canonical, comparable form of an ODE map."""
    return tuple(sorted((v, ex.canon_key(e)) for v, e in system.items()))
