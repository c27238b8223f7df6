"""Transition-driven stochastic hybrid automata.

Two independent constructions target this data model: ``from_lts`` reads the
automaton off the labelled transition system, and ``compositional_mapping``
builds per-subcomponent and per-sequential-controller automata and composes
them with the synchronised product. After pruning unreachable modes the two
results are graph-isomorphic; ``graph_isomorphic`` finds the witness.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from . import expr as ex
from .errors import (
    EvalError,
    InitIncompatible,
    ResetIncompatible,
    ShypeError,
)
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
from .semantics import Lts


@dataclass(frozen=True)
class Td:
    """Instantaneous transition: fires urgently when the guard holds."""

    src: object
    tgt: object
    guard: object  # Guard
    reset: tuple
    weight: float
    event: str


@dataclass(frozen=True)
class Ts:
    """Stochastic transition: fires with exponential hazard at `rate`."""

    src: object
    tgt: object
    guard: object
    reset: tuple
    rate: ex.Expr
    event: str


@dataclass(frozen=True)
class Tdsha:
    modes: tuple
    variables: tuple
    tc: tuple  # multiset of (mode, stoichiometry: ((var, coeff), ...), rate)
    td: tuple  # set of Td
    ts: tuple  # multiset of Ts
    events_d: frozenset
    events_s: frozenset
    init_mode: object
    init_reset: tuple

    def __post_init__(self):
        _check_rate_consistency(self)
        for td in self.td:
            _check_closed_guard(td.guard, td.event)

    def mode_tc(self, mode) -> list:
        return [t for t in self.tc if t[0] == mode]

    def outgoing_td(self, mode) -> list:
        return [t for t in self.td if t.src == mode]

    def outgoing_ts(self, mode) -> list:
        return [t for t in self.ts if t.src == mode]


def _check_rate_consistency(t: Tdsha) -> None:
    rates: Dict[str, object] = {}
    for s in t.ts:
        key = ex.canon_key(s.rate)
        if rates.setdefault(s.event, key) != key:
            raise ShypeError(
                f"inconsistent rates for stochastic event {s.event}")


def _check_closed_guard(g, event: str) -> None:
    if isinstance(g, ex.BoolLit):
        return
    if isinstance(g, ex.Cmp):
        if g.op in ("<", ">"):
            raise ShypeError(
                f"guard of instantaneous event {event} uses a strict "
                f"comparison; guards must define closed sets")
        return
    if isinstance(g, (ex.And, ex.Or)):
        _check_closed_guard(g.left, event)
        _check_closed_guard(g.right, event)
        return
    if isinstance(g, ex.Not):
        raise ShypeError(
            f"guard of instantaneous event {event} uses negation; "
            f"guards must define closed sets")
    raise TypeError(g)


# ---------------------------------------------------------------------------
# SOS mapping


def _event_reset(model: Model, event: str) -> tuple:
    return model.event_conditions[event].reset


def from_lts(lts: Lts, model: Model) -> Tdsha:
    """Read the automaton off the LTS: modes are configurations, one
    continuous transition per state entry, one instantaneous transition per
    LTS edge (multiplicity collapsed), stochastic multiplicity preserved."""
    tc = []
    for q, config in enumerate(lts.configurations):
        for influence, strength, itype, args in config.state.entries:
            var = model.iv[influence]
            rate = ex.Bin("*", ex.Num(strength), model.itype_body(itype, args))
            tc.append((q, ((var, 1.0),), rate))
    td = []
    ts = []
    seen_td = set()
    for (src, event, tgt), mult in sorted(lts.transitions.items(),
                                          key=lambda kv: str(kv[0])):
        ec = model.event_conditions[event]
        if event in model.stochastic_events:
            for _ in range(mult):
                ts.append(Ts(src, tgt, ex.TRUE, ec.reset, ec.activation, event))
        else:
            if (src, event, tgt) in seen_td:
                continue
            seen_td.add((src, event, tgt))
            td.append(Td(src, tgt, ec.activation, ec.reset, 1.0, event))
    return Tdsha(
        modes=tuple(range(len(lts.configurations))),
        variables=tuple(model.variables),
        tc=tuple(tc),
        td=tuple(td),
        ts=tuple(ts),
        events_d=frozenset(model.instantaneous_events),
        events_s=frozenset(model.stochastic_events),
        init_mode=lts.initial,
        init_reset=_event_reset(model, INIT_EVENT),
    )


# ---------------------------------------------------------------------------
# product


def _conj_guard(a, b):
    if a == ex.TRUE:
        return b
    if b == ex.TRUE:
        return a
    return ex.And(a, b)


def _conj_reset(a: tuple, b: tuple, event: str) -> tuple:
    """Conjunction of reset formulas; contradictory assignments are an error."""
    out = list(a)
    keys = {atom.var: ex.canon_key(atom.expr) for atom in a}
    for atom in b:
        k = ex.canon_key(atom.expr)
        if atom.var in keys:
            if keys[atom.var] != k:
                raise ResetIncompatible(
                    f"event {event} resets {atom.var} to conflicting values")
        else:
            keys[atom.var] = k
            out.append(atom)
    return tuple(out)


def tdsha_product(a: Tdsha, b: Tdsha, sync: frozenset) -> Tdsha:
    """The synchronised product: pair modes, lift unsynchronised transitions,
    conjoin guards and resets of synchronised ones, take minimum weight."""
    try:
        init_reset = _conj_reset(a.init_reset, b.init_reset, INIT_EVENT)
    except ResetIncompatible as exc:
        raise InitIncompatible(str(exc)) from None

    # paired modes are interned as shallow index pairs: nested component
    # labels make hashing the dominant cost on larger products
    ia = {q: i for i, q in enumerate(a.modes)}
    ib = {q: i for i, q in enumerate(b.modes)}
    modes = tuple((i, j) for i in range(len(a.modes))
                  for j in range(len(b.modes)))
    variables = tuple(a.variables) + tuple(
        v for v in b.variables if v not in a.variables)

    # continuous transitions: all of the left mode plus all of the right mode
    a_tc_by_mode: Dict[int, list] = {}
    for t in a.tc:
        a_tc_by_mode.setdefault(ia[t[0]], []).append(t)
    b_tc_by_mode: Dict[int, list] = {}
    for t in b.tc:
        b_tc_by_mode.setdefault(ib[t[0]], []).append(t)
    tc = []
    for i, j in modes:
        for _, stoich, rate in a_tc_by_mode.get(i, ()):
            tc.append(((i, j), stoich, rate))
        for _, stoich, rate in b_tc_by_mode.get(j, ()):
            tc.append(((i, j), stoich, rate))

    td: List[Td] = []
    for t in a.td:
        if t.event in sync:
            continue
        si, ti = ia[t.src], ia[t.tgt]
        for j in range(len(b.modes)):
            td.append(replace(t, src=(si, j), tgt=(ti, j)))
    for t in b.td:
        if t.event in sync:
            continue
        sj, tj = ib[t.src], ib[t.tgt]
        for i in range(len(a.modes)):
            td.append(replace(t, src=(i, sj), tgt=(i, tj)))
    for t1 in a.td:
        if t1.event not in sync:
            continue
        for t2 in b.td:
            if t2.event != t1.event:
                continue
            td.append(Td(
                (ia[t1.src], ib[t2.src]), (ia[t1.tgt], ib[t2.tgt]),
                _conj_guard(t1.guard, t2.guard),
                _conj_reset(t1.reset, t2.reset, t1.event),
                min(t1.weight, t2.weight), t1.event))

    ts: List[Ts] = []
    for t in a.ts:
        if t.event in sync:
            continue
        si, ti = ia[t.src], ia[t.tgt]
        for j in range(len(b.modes)):
            ts.append(replace(t, src=(si, j), tgt=(ti, j)))
    for t in b.ts:
        if t.event in sync:
            continue
        sj, tj = ib[t.src], ib[t.tgt]
        for i in range(len(a.modes)):
            ts.append(replace(t, src=(i, sj), tgt=(i, tj)))
    for t1 in a.ts:
        if t1.event not in sync:
            continue
        for t2 in b.ts:
            if t2.event != t1.event:
                continue
            # rate consistency makes the shared rate unambiguous
            ts.append(Ts(
                (ia[t1.src], ib[t2.src]), (ia[t1.tgt], ib[t2.tgt]),
                _conj_guard(t1.guard, t2.guard),
                _conj_reset(t1.reset, t2.reset, t1.event),
                t1.rate, t1.event))

    return Tdsha(
        modes=modes,
        variables=variables,
        tc=tuple(tc),
        td=tuple(td),
        ts=tuple(ts),
        events_d=a.events_d | b.events_d,
        events_s=a.events_s | b.events_s,
        init_mode=(ia[a.init_mode], ib[b.init_mode]),
        init_reset=init_reset,
    )


# ---------------------------------------------------------------------------
# compositional mapping


def subcomponent_tdsha(model: Model, name: str) -> Tdsha:
    """Modes are the distinct activities of the subcomponent; every event
    of the subcomponent is enabled in every mode, with trivial guards and
    resets (event conditions live on the controller automata)."""
    sub = model.subcomponents[name]
    activities = []
    for _, act in sub.prefixes:
        if act not in activities:
            activities.append(act)
    act_of = {}  # event -> activity of its (last) prefix, for targets
    init_act = None
    for event, act in sub.prefixes:
        act_of[event] = act
        if event == INIT_EVENT:
            init_act = act
    modes = tuple(activities)
    tc = []
    for act in activities:
        var = model.iv[act.influence]
        r = ex.const_value(act.strength)
        if r is None:
            raise EvalError("influence strength is not constant")
        rate = ex.Bin("*", ex.Num(r), model.itype_body(act.itype,
                                                       act.itype_args))
        tc.append((act, ((var, 1.0),), rate))
    td = []
    ts = []
    inst_events = {e for e in sub.events
                   if e not in model.stochastic_events}
    for src in activities:
        for event in sorted(inst_events):
            td.append(Td(src, act_of[event], ex.TRUE, (), 1.0, event))
        for event, act in sub.prefixes:  # occurrence = multiplicity
            if event in model.stochastic_events:
                rate = model.event_conditions[event].activation
                ts.append(Ts(src, act, ex.TRUE, (), rate, event))
    return Tdsha(
        modes=modes,
        variables=tuple(model.variables),
        tc=tuple(tc),
        td=tuple(td),
        ts=tuple(ts),
        events_d=frozenset(model.instantaneous_events),
        events_s=frozenset(model.stochastic_events),
        init_mode=init_act,
        init_reset=(),
    )


def controller_derivatives(model: Model, term: Term) -> list:
    """ds(M) for a sequential controller term, names unfolded one step."""
    seen: List[Term] = []

    def visit(t: Term):
        if t in seen:
            return
        seen.append(t)
        for _, tgt in _seq_moves(model, t):
            visit(tgt)

    visit(term)
    return seen


def _seq_moves(model: Model, term: Term) -> List[Tuple[str, Term]]:
    """One-step event moves of a sequential controller derivative."""
    if isinstance(term, Nil):
        return []
    if isinstance(term, Name):
        return _seq_moves(model, model.controllers[term.name])
    if isinstance(term, Prefix):
        return [(term.event, term.cont)]
    if isinstance(term, Choice):
        return _seq_moves(model, term.left) + _seq_moves(model, term.right)
    raise TypeError(term)


def sequential_controller_tdsha(model: Model, term: Term) -> Tdsha:
    """Modes are controller derivatives; edges carry the event conditions."""
    ds = controller_derivatives(model, term)
    td = []
    ts = []
    for src in ds:
        for event, tgt in _seq_moves(model, src):
            ec = model.event_conditions[event]
            if event in model.stochastic_events:
                ts.append(Ts(src, tgt, ex.TRUE, ec.reset, ec.activation, event))
            else:
                td.append(Td(src, tgt, ec.activation, ec.reset, 1.0, event))
    return Tdsha(
        modes=tuple(ds),
        variables=tuple(model.variables),
        tc=(),
        td=tuple(td),
        ts=tuple(ts),
        events_d=frozenset(model.instantaneous_events),
        events_s=frozenset(model.stochastic_events),
        init_mode=term,
        init_reset=_event_reset(model, INIT_EVENT),
    )


def _map_term(model: Model, term: Term, in_controller: bool) -> Tdsha:
    if isinstance(term, Coop):
        left = _map_term(model, term.left, in_controller)
        right = _map_term(model, term.right, in_controller)
        return tdsha_product(left, right, term.sync)
    if isinstance(term, Name) and term.name in model.subcomponents:
        return subcomponent_tdsha(model, term.name)
    if in_controller:
        return sequential_controller_tdsha(model, term)
    raise TypeError(f"unexpected term in uncontrolled system: {term}")


def compositional_mapping(model: Model) -> Tdsha:
    """Product of per-subcomponent and per-sequential-controller automata
    following the structure of the controlled system."""
    sigma = _map_term(model, model.uncontrolled, in_controller=False)
    # only the controller automata carry the init reset
    sigma = replace(sigma, init_reset=())
    con = _map_term(model, model.controller, in_controller=True)
    system = model.system
    return tdsha_product(sigma, con, system.sync)


# ---------------------------------------------------------------------------
# pruning and isomorphism


def prune_unreachable(t: Tdsha) -> Tdsha:
    """Restrict to modes reachable from init through the discrete graph,
    ignoring guards (conservative)."""
    adjacency: Dict[object, set] = {q: set() for q in t.modes}
    for e in t.td:
        adjacency[e.src].add(e.tgt)
    for e in t.ts:
        adjacency[e.src].add(e.tgt)
    reached = {t.init_mode}
    frontier = [t.init_mode]
    while frontier:
        q = frontier.pop()
        for nxt in adjacency[q]:
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    keep = tuple(q for q in t.modes if q in reached)
    return Tdsha(
        modes=keep,
        variables=t.variables,
        tc=tuple(e for e in t.tc if e[0] in reached),
        td=tuple(e for e in t.td if e.src in reached and e.tgt in reached),
        ts=tuple(e for e in t.ts if e.src in reached and e.tgt in reached),
        events_d=t.events_d,
        events_s=t.events_s,
        init_mode=t.init_mode,
        init_reset=t.init_reset,
    )


def _tc_key(t: Tdsha, mode) -> tuple:
    return tuple(sorted(
        ((stoich, ex.canon_key(rate))
         for q, stoich, rate in t.tc if q == mode), key=repr))


def _edge_labels(t: Tdsha) -> Dict[Tuple[object, object], tuple]:
    """(src, tgt) -> sorted multiset of normalized edge labels."""
    out: Dict[Tuple[object, object], list] = {}
    for e in t.td:
        label = ("td", e.event, ex.guard_key(e.guard), ex.reset_key(e.reset),
                 e.weight)
        out.setdefault((e.src, e.tgt), []).append(label)
    for e in t.ts:
        label = ("ts", e.event, ex.guard_key(e.guard), ex.reset_key(e.reset),
                 ex.canon_key(e.rate))
        out.setdefault((e.src, e.tgt), []).append(label)
    return {k: tuple(sorted(v, key=repr)) for k, v in out.items()}


def graph_isomorphic(a: Tdsha, b: Tdsha) -> Optional[Dict[object, object]]:
    """A bijection on modes preserving continuous-transition multisets and
    labelled discrete/stochastic edges, or None. Both inputs pruned."""
    if len(a.modes) != len(b.modes):
        return None
    if len(a.td) != len(b.td) or len(a.ts) != len(b.ts):
        return None
    if ex.reset_key(a.init_reset) != ex.reset_key(b.init_reset):
        return None

    ea, eb = _edge_labels(a), _edge_labels(b)

    # joint color refinement: both automata share one color table, so the
    # final color ids are comparable across the two
    ca = {q: repr(((q == a.init_mode), _tc_key(a, q))) for q in a.modes}
    cb = {q: repr(((q == b.init_mode), _tc_key(b, q))) for q in b.modes}
    while True:
        sig_a = {}
        for q in a.modes:
            outs = sorted((repr(lbl), ca[tgt])
                          for (src, tgt), lbls in ea.items() if src == q
                          for lbl in lbls)
            ins = sorted((repr(lbl), ca[src])
                         for (src, tgt), lbls in ea.items() if tgt == q
                         for lbl in lbls)
            sig_a[q] = repr((ca[q], outs, ins))
        sig_b = {}
        for q in b.modes:
            outs = sorted((repr(lbl), cb[tgt])
                          for (src, tgt), lbls in eb.items() if src == q
                          for lbl in lbls)
            ins = sorted((repr(lbl), cb[src])
                         for (src, tgt), lbls in eb.items() if tgt == q
                         for lbl in lbls)
            sig_b[q] = repr((cb[q], outs, ins))
        canon: Dict[str, str] = {}
        for s in sorted(set(sig_a.values()) | set(sig_b.values())):
            canon[s] = str(len(canon))
        na = {q: canon[sig_a[q]] for q in a.modes}
        nb = {q: canon[sig_b[q]] for q in b.modes}
        if (len(set(na.values())) == len(set(ca.values()))
                and len(set(nb.values())) == len(set(cb.values()))):
            ca, cb = na, nb
            break
        ca, cb = na, nb

    groups_a: Dict[str, list] = {}
    for q in a.modes:
        groups_a.setdefault(ca[q], []).append(q)
    groups_b: Dict[str, list] = {}
    for q in b.modes:
        groups_b.setdefault(cb[q], []).append(q)
    if sorted(groups_a) != sorted(groups_b):
        return None
    if any(len(groups_a[k]) != len(groups_b[k]) for k in groups_a):
        return None

    order = sorted(a.modes, key=lambda q: (len(groups_a[ca[q]]), repr(q)))
    mapping: Dict[object, object] = {}
    used = set()

    def consistent(q, cand) -> bool:
        if q == a.init_mode and cand != b.init_mode:
            return False
        if cand == b.init_mode and q != a.init_mode:
            return False
        for p, mp in mapping.items():
            if ea.get((q, p)) != eb.get((cand, mp)):
                return False
            if ea.get((p, q)) != eb.get((mp, cand)):
                return False
        if ea.get((q, q)) != eb.get((cand, cand)):
            return False
        return True

    def search(i: int) -> bool:
        if i == len(order):
            return True
        q = order[i]
        for cand in groups_b[ca[q]]:
            if cand in used or not consistent(q, cand):
                continue
            mapping[q] = cand
            used.add(cand)
            if search(i + 1):
                return True
            del mapping[q]
            used.discard(cand)
        return False

    if not search(0):
        return None
    return dict(mapping)


# ---------------------------------------------------------------------------
# dynamics


def vector_field(t: Tdsha, mode, x: Dict[str, float]) -> Dict[str, float]:
    out = {v: 0.0 for v in t.variables}
    for q, stoich, rate in t.tc:
        if q != mode:
            continue
        value = ex.eval_expr(rate, x)
        for var, coeff in stoich:
            out[var] += coeff * value
    return out
