"""State equivalences and behavioural checkers.

Implements the two state equivalences (exact equality and dot-equality by
summed strengths), system bisimulation, stochastic system bisimulation with
respect to a state equivalence (partition refinement in the style of
Markov-chain lumping), verification of a user-supplied relation, and the
well-behavedness analysis based on the instantaneous activation graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from . import expr as ex
from .errors import NonComparableRate, ShypeError, UnknownDerivative
from .expand import expand_general_durations
from .model import INIT_EVENT, Choice, Coop, Model, Name, Nil, Prefix, Term
from .semantics import Lts, OperationalState, build_lts, ode_key, ode_system_for
from .tdsha import _seq_moves, controller_derivatives
from .validate import validate_well_defined


class StateEquivKind(enum.Enum):
    EQUALITY = "eq"
    DOTEQ = "doteq"


def _frac(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**12)


def state_signature(state: OperationalState, model: Model) -> tuple:
    """Summed strengths per (variable, normalized influence-type body).

    Two states are dot-equal exactly when their signatures coincide; entries
    whose sum is zero are dropped so that an absent influence and a present
    influence of strength zero compare equal.
    """
    sums: Dict[tuple, Fraction] = {}
    for influence, strength, itype, args in state.entries:
        var = model.iv[influence]
        body = model.itype_body(itype, args)
        key = (var, ex.canon_key(body))
        sums[key] = sums.get(key, Fraction(0)) + _frac(strength)
    return tuple(sorted((k, v) for k, v in sums.items() if v != 0))


def _state_key(state: OperationalState, model: Model, kind: StateEquivKind):
    if kind is StateEquivKind.EQUALITY:
        return state.entries
    return state_signature(state, model)


# ---------------------------------------------------------------------------
# model preparation and header comparison


def _ready(model: Model) -> Tuple[Model, Lts]:
    resolved = expand_general_durations(model).resolve(None)
    report = validate_well_defined(resolved)
    if not report.ok:
        raise ShypeError("model is not well defined: "
                         + "; ".join(v.message for v in report.violations))
    return resolved, build_lts(resolved)


def _ec_act_key(model: Model, event: str):
    c = model.event_conditions[event]
    if event in model.stochastic_events:
        return ("rate", ex.canon_key(c.activation))
    return ("guard", ex.guard_key(c.activation))


def _header_mismatch(p: Model, q: Model,
                     kind: StateEquivKind) -> Optional[str]:
    """A reason the two models cannot be compared configuration-wise."""
    if set(p.variables) != set(q.variables):
        return "variable sets differ"
    if p.events != q.events:
        return "event sets differ"
    if p.stochastic_events != q.stochastic_events:
        return "stochastic event sets differ"
    for e in sorted(p.events):
        cp, cq = p.event_conditions[e], q.event_conditions[e]
        if ex.reset_key(cp.reset) != ex.reset_key(cq.reset):
            return f"resets for event {e!r} differ"
        if e in p.stochastic_events:
            continue  # rate comparison is handled per transition
        if _ec_act_key(p, e) != _ec_act_key(q, e):
            return f"guards for event {e!r} differ"
    if kind is StateEquivKind.EQUALITY:
        if p.influences != q.influences:
            return "influence sets differ"
        if p.iv != q.iv:
            return "influence-to-variable maps differ"
    return None


def _rate_mode(p: Model, q: Model, event: str):
    """How to compare aggregate rates for a stochastic event.

    Returns ("sym", None) when both models use the same activation
    expression (multiplicities alone decide equality), or ("num", (vp, vq))
    when both are constants. State-dependent activations that differ
    syntactically cannot be compared soundly.
    """
    ap = p.event_conditions[event].activation
    aq = q.event_conditions[event].activation
    if ex.canon_key(ap) == ex.canon_key(aq):
        return ("sym", None)
    vp, vq = ex.const_value(ap), ex.const_value(aq)
    if vp is not None and vq is not None:
        return ("num", (_frac(vp), _frac(vq)))
    raise NonComparableRate(
        f"activations of stochastic event {event!r} are state-dependent "
        "and not syntactically equal")


# ---------------------------------------------------------------------------
# partition refinement over the disjoint union of two LTSs

Node = Tuple[str, int]  # ("P"|"Q", configuration index)


@dataclass(frozen=True)
class BisimPartition:
    """Coarsest bisimulation partition over the disjoint union."""

    kind: StateEquivKind
    blocks: tuple  # of tuples of Node
    lts_p: Lts
    lts_q: Lts

    def block_of(self, node: Node) -> int:
        for i, b in enumerate(self.blocks):
            if node in b:
                return i
        raise KeyError(node)

    def to_json(self) -> dict:
        return {
            "equivalence": self.kind.value,
            "blocks": [[{"model": s, "config": i} for s, i in b]
                       for b in self.blocks],
        }


@dataclass(frozen=True)
class NotBisimilar:
    events: tuple  # distinguishing event sequence (may be empty)
    reason: str

    def to_json(self) -> dict:
        return {"witness": {"events": list(self.events),
                            "reason": self.reason}}


BisimResult = Union[BisimPartition, NotBisimilar]


class _Refiner:
    def __init__(self, p: Model, lts_p: Lts, q: Model, lts_q: Lts,
                 kind: StateEquivKind, stochastic_aggregate: bool):
        self.kind = kind
        self.lts = {"P": lts_p, "Q": lts_q}
        self.models = {"P": p, "Q": q}
        self.nodes: List[Node] = (
            [("P", i) for i in range(len(lts_p.configurations))]
            + [("Q", j) for j in range(len(lts_q.configurations))])
        self.stochastic_aggregate = stochastic_aggregate
        self.rate_modes = {}
        if stochastic_aggregate:
            for e in sorted(p.stochastic_events):
                self.rate_modes[e] = _rate_mode(p, q, e)
        # outgoing transitions per node, split by transition type
        self.inst: Dict[Node, List[Tuple[str, Node]]] = {}
        self.stoch: Dict[Node, List[Tuple[str, Node, int]]] = {}
        for side in ("P", "Q"):
            model = self.models[side]
            for (src, event, tgt), mult in self.lts[side].transitions.items():
                node = (side, src)
                if event in model.stochastic_events:
                    self.stoch.setdefault(node, []).append(
                        (event, (side, tgt), mult))
                else:
                    self.inst.setdefault(node, []).append((event, (side, tgt)))
        self.history: List[Dict[Node, int]] = []

    def _config(self, node: Node):
        return self.lts[node[0]].configurations[node[1]]

    def state_key(self, node: Node):
        return _state_key(self._config(node).state, self.models[node[0]],
                          self.kind)

    def _signature(self, node: Node, block: Dict[Node, int]):
        inst = frozenset((e, block[t]) for e, t in self.inst.get(node, ()))
        if not self.stochastic_aggregate:
            stoch = frozenset((e, block[t])
                              for e, t, _ in self.stoch.get(node, ()))
            return (block[node], inst, stoch)
        agg: Dict[tuple, object] = {}
        side = 0 if node[0] == "P" else 1
        for e, t, mult in self.stoch.get(node, ()):
            mode, payload = self.rate_modes[e]
            if mode == "sym":
                contrib = Fraction(mult)
            else:
                contrib = payload[side] * mult
            key = (e, block[t])
            agg[key] = agg.get(key, Fraction(0)) + contrib
        stoch = tuple(sorted((k, v) for k, v in agg.items() if v != 0))
        return (block[node], inst, stoch)

    def run(self) -> Dict[Node, int]:
        keys = sorted({self.state_key(n) for n in self.nodes}, key=repr)
        ids = {k: i for i, k in enumerate(keys)}
        block = {n: ids[self.state_key(n)] for n in self.nodes}
        self.history = [dict(block)]
        while True:
            sigs = {n: self._signature(n, block) for n in self.nodes}
            order = sorted({s for s in sigs.values()}, key=repr)
            sig_ids = {s: i for i, s in enumerate(order)}
            new = {n: sig_ids[sigs[n]] for n in self.nodes}
            if len(set(new.values())) == len(set(block.values())):
                return block
            block = new
            self.history.append(dict(block))

    # -- witness extraction ------------------------------------------------

    def explain(self, p: Node, q: Node) -> NotBisimilar:
        """Distinguishing event sequence for two non-equivalent nodes."""
        round_ = 0
        for i, blk in enumerate(self.history):
            if blk[p] != blk[q]:
                round_ = i
                break
        else:
            round_ = len(self.history) - 1
        return self._explain_at(p, q, round_, depth=0)

    def _explain_at(self, p: Node, q: Node, round_: int,
                    depth: int) -> NotBisimilar:
        if round_ == 0 or depth > 32:
            return NotBisimilar(
                (), f"states differ: {self.state_key(p)!r} vs "
                    f"{self.state_key(q)!r}")
        prev = self.history[round_ - 1]
        sp = self._signature(p, prev)
        sq = self._signature(q, prev)
        if sp[1] != sq[1]:
            diff = (sp[1] - sq[1]) or (sq[1] - sp[1])
            event, cls = sorted(diff)[0]
            fwd, other = (p, q) if (event, cls) in sp[1] else (q, p)
            succ = [t for e, t in self.inst.get(fwd, ())
                    if e == event and prev[t] == cls]
            partners = [t for e, t in self.inst.get(other, ()) if e == event]
            if not partners:
                return NotBisimilar(
                    (event,),
                    f"instantaneous event {event!r} enabled on one side only")
            sub = self._explain_at(succ[0], partners[0], round_ - 1, depth + 1)
            return NotBisimilar((event,) + sub.events, sub.reason)
        if sp[2] != sq[2]:
            if self.stochastic_aggregate:
                return NotBisimilar(
                    (), "aggregate stochastic rates differ: "
                        f"{sp[2]!r} vs {sq[2]!r}")
            diff = (sp[2] - sq[2]) or (sq[2] - sp[2])
            event, cls = sorted(diff)[0]
            fwd, other = (p, q) if (event, cls) in sp[2] else (q, p)
            succ = [t for e, t, _ in self.stoch.get(fwd, ())
                    if e == event and prev[t] == cls]
            partners = [t for e, t, _ in self.stoch.get(other, ())
                        if e == event]
            if not partners:
                return NotBisimilar(
                    (event,),
                    f"stochastic event {event!r} enabled on one side only")
            sub = self._explain_at(succ[0], partners[0], round_ - 1, depth + 1)
            return NotBisimilar((event,) + sub.events, sub.reason)
        return self._explain_at(p, q, round_ - 1, depth)

    def partition(self, block: Dict[Node, int]) -> tuple:
        out: Dict[int, list] = {}
        for n in self.nodes:
            out.setdefault(block[n], []).append(n)
        return tuple(tuple(v) for _, v in sorted(out.items()))


def _check(p: Model, q: Model, kind: StateEquivKind,
           stochastic_aggregate: bool) -> BisimResult:
    rp, lts_p = _ready(p)
    rq, lts_q = _ready(q)
    mismatch = _header_mismatch(rp, rq, kind)
    if mismatch is not None:
        return NotBisimilar((), mismatch)
    ref = _Refiner(rp, lts_p, rq, lts_q, kind, stochastic_aggregate)
    block = ref.run()
    init_p = ("P", lts_p.initial)
    init_q = ("Q", lts_q.initial)
    if block[init_p] != block[init_q]:
        return ref.explain(init_p, init_q)
    return BisimPartition(kind, ref.partition(block), lts_p, lts_q)


def check_system_bisim(p: Model, q: Model) -> BisimResult:
    """Exact-state, event-labelled strong bisimulation on the disjoint union."""
    return _check(p, q, StateEquivKind.EQUALITY, stochastic_aggregate=False)


def check_stochastic_system_bisim(p: Model, q: Model,
                                  kind: StateEquivKind) -> BisimResult:
    """Stochastic system bisimulation w.r.t. a state equivalence: matches
    instantaneous moves up to classes and aggregates stochastic rates per
    (event, class)."""
    return _check(p, q, kind, stochastic_aggregate=True)


# ---------------------------------------------------------------------------
# the r function


def rate_to_class(lts: Lts, model: Model, config_index: int, event: str,
                  block) -> float:
    """Aggregate rate from one configuration into a set of configurations."""
    if event not in model.stochastic_events:
        raise ShypeError(f"{event!r} is not a stochastic event")
    act = model.event_conditions[event].activation
    value = ex.const_value(act)
    if value is None:
        raise NonComparableRate(
            f"activation of {event!r} is state-dependent")
    block = set(block)
    total = 0
    for (src, e, tgt), mult in lts.transitions.items():
        if src == config_index and e == event and tgt in block:
            total += mult
    return value * total


# ---------------------------------------------------------------------------
# verification of a supplied relation


@dataclass(frozen=True)
class Verified:
    blocks: tuple


@dataclass(frozen=True)
class RelationViolation:
    pair: tuple
    reason: str


def _matches(config_term: Term, term: Term) -> bool:
    if config_term == term:
        return True
    return isinstance(config_term, Coop) and config_term.right == term


def verify_relation(p: Model, q: Model,
                    pairs: Sequence[Tuple[Term, Term]],
                    kind: StateEquivKind) -> Union[Verified, RelationViolation]:
    """Check the transfer and rate conditions for exactly the supplied pairs
    of derivatives, closed under the state equivalence. Pair terms match a
    configuration either in full or as its controller component."""
    rp, lts_p = _ready(p)
    rq, lts_q = _ready(q)
    ref = _Refiner(rp, lts_p, rq, lts_q, kind, stochastic_aggregate=True)

    pair_of: Dict[Node, int] = {}
    for idx, (tp, tq) in enumerate(pairs):
        hit_p = hit_q = False
        for i, c in enumerate(lts_p.configurations):
            if ("P", i) not in pair_of and _matches(c.term, tp):
                pair_of[("P", i)] = idx
                hit_p = True
        for j, c in enumerate(lts_q.configurations):
            if ("Q", j) not in pair_of and _matches(c.term, tq):
                pair_of[("Q", j)] = idx
                hit_q = True
        if not hit_p:
            raise UnknownDerivative(f"pair {idx}: no configuration matches "
                                    "the left term")
        if not hit_q:
            raise UnknownDerivative(f"pair {idx}: no configuration matches "
                                    "the right term")

    keys: Dict[tuple, int] = {}
    block: Dict[Node, int] = {}
    for n in ref.nodes:
        k = (pair_of.get(n, ("solo", n)), ref.state_key(n))
        block[n] = keys.setdefault(k, len(keys))

    # one stability pass: within each block every member must present the
    # same signature with respect to the candidate partition
    rep: Dict[int, Node] = {}
    for n in ref.nodes:
        b = block[n]
        if b not in rep:
            rep[b] = n
            continue
        if ref._signature(n, block) != ref._signature(rep[b], block):
            idx = pair_of.get(n, pair_of.get(rep[b]))
            return RelationViolation(
                tuple(pairs[idx]),
                f"transfer or rate condition fails between {rep[b]} and {n}")
    return Verified(ref.partition(block))


# ---------------------------------------------------------------------------
# same-ODE theorem support


def blocks_share_odes(partition: BisimPartition, p: Model, q: Model) -> bool:
    """Every block's configurations induce the same normalized ODE map."""
    rp = expand_general_durations(p).resolve(None)
    rq = expand_general_durations(q).resolve(None)
    models = {"P": rp, "Q": rq}
    lts = {"P": partition.lts_p, "Q": partition.lts_q}
    for b in partition.blocks:
        keys = {ode_key(ode_system_for(lts[s].configurations[i], models[s]))
                for s, i in b}
        if len(keys) > 1:
            return False
    return True


# ---------------------------------------------------------------------------
# well-behavedness


@dataclass(frozen=True)
class WellBehaved:
    reason: str


@dataclass(frozen=True)
class Unknown:
    cycles: tuple  # of event cycles in the activation graph


Verdict = Union[WellBehaved, Unknown]


def _controller_components(term: Term) -> List[Term]:
    if isinstance(term, Coop):
        return _controller_components(term.left) + _controller_components(term.right)
    return [term]


def _component_cycles_need_stochastic(model: Model, component: Term) -> bool:
    """True when every cycle of the component's derivative graph passes
    through a stochastic event (no purely instantaneous cycle)."""
    g = nx.DiGraph()
    for src in controller_derivatives(model, component):
        g.add_node(src)
        for event, tgt in _seq_moves(model, src):
            if event not in model.stochastic_events:
                g.add_edge(src, tgt)
    return nx.is_directed_acyclic_graph(g)


def _written_vars(reset) -> set:
    return {a.var for a in reset}


def _collect_linear(e: ex.Expr):
    """Split an expression into constant + linear coefficients + residuals."""
    if isinstance(e, ex.Num):
        return _frac(e.value), {}, []
    if isinstance(e, ex.Var):
        return Fraction(0), {e.name: Fraction(1)}, []
    if isinstance(e, ex.Bin) and e.op in ("+", "-"):
        c1, v1, r1 = _collect_linear(e.left)
        c2, v2, r2 = _collect_linear(e.right)
        if e.op == "-":
            c2 = -c2
            v2 = {k: -f for k, f in v2.items()}
            r2 = [ex.Bin("*", ex.Num(-1.0), t) for t in r2]
        for k, f in v2.items():
            v1[k] = v1.get(k, Fraction(0)) + f
        return c1 + c2, v1, r1 + r2
    if isinstance(e, ex.Bin) and e.op == "*":
        for const_side, other in ((e.left, e.right), (e.right, e.left)):
            k = ex.const_value(const_side)
            if k is not None:
                c, v, r = _collect_linear(other)
                f = _frac(k)
                return c * f, {n: x * f for n, x in v.items()}, \
                    [ex.Bin("*", ex.Num(k), t) for t in r]
        return Fraction(0), {}, [e]
    if isinstance(e, ex.Bin) and e.op == "/":
        k = ex.const_value(e.right)
        if k is not None and k != 0:
            c, v, r = _collect_linear(e.left)
            f = _frac(k)
            return c / f, {n: x / f for n, x in v.items()}, \
                [ex.Bin("/", t, ex.Num(k)) for t in r]
        return Fraction(0), {}, [e]
    return Fraction(0), {}, [e]


def _interval_with_cancellation(e: ex.Expr, env) -> tuple:
    """Interval of an expression after cancelling net-zero linear terms."""
    c, coeffs, residuals = _collect_linear(e)
    lo = hi = float(c)
    for var, f in coeffs.items():
        if f == 0:
            continue
        vlo, vhi = env.get(var, (-ex.INF, ex.INF))
        k = float(f)
        a, b = (k * vlo, k * vhi) if k > 0 else (k * vhi, k * vlo)
        lo += a
        hi += b
    for r in residuals:
        a, b = ex.interval_eval(r, env)
        lo += a
        hi += b
    return lo, hi


def _guard_satisfiable(g, env) -> bool:
    if isinstance(g, ex.BoolLit):
        return g.value
    if isinstance(g, ex.And):
        return _guard_satisfiable(g.left, env) and _guard_satisfiable(g.right, env)
    if isinstance(g, ex.Or):
        return _guard_satisfiable(g.left, env) or _guard_satisfiable(g.right, env)
    if isinstance(g, ex.Not):
        return True  # conservative
    if isinstance(g, ex.Cmp):
        lo, hi = _interval_with_cancellation(
            ex.Bin("-", g.left, g.right), env)
        if g.op in ("<=", "<"):
            return lo <= 0
        if g.op in (">=", ">"):
            return hi >= 0
        return lo <= 0 <= hi  # equality
    raise TypeError(g)


def _may_activate(model: Model, a: str, b: str) -> bool:
    """Whether firing a's reset can newly satisfy b's guard (conservative)."""
    reset = model.event_conditions[a].reset
    guard = model.event_conditions[b].activation
    written = _written_vars(reset)
    if not (written & ex.guard_vars(guard)):
        return False
    subst = {atom.var: atom.expr for atom in reset}
    post = ex.substitute_guard(guard, subst)
    return _guard_satisfiable(post, {})


def igraph(model: Model) -> nx.DiGraph:
    """Activation graph between instantaneous events (overapproximation)."""
    g = nx.DiGraph()
    events = sorted(model.instantaneous_events | {INIT_EVENT})
    g.add_nodes_from(events)
    for a in events:
        for b in events:
            if b == INIT_EVENT:
                continue
            if _may_activate(model, a, b):
                g.add_edge(a, b)
    return g


def check_well_behaved(model: Model) -> Verdict:
    """Three increasingly expensive sufficient conditions; Unknown otherwise."""
    resolved = expand_general_durations(model).resolve(None)

    components = _controller_components(resolved.controller)
    if all(_component_cycles_need_stochastic(resolved, c) for c in components):
        return WellBehaved(
            "every controller cycle passes through a stochastic event")

    inst = sorted(resolved.instantaneous_events)
    if not any(_may_activate(resolved, a, b)
               for a in inst + [INIT_EVENT] for b in inst):
        return WellBehaved(
            "no instantaneous event's reset can enable another's guard")

    g = igraph(resolved)
    cycles = [tuple(c) for c in nx.simple_cycles(g)]
    if not cycles:
        return WellBehaved("instantaneous activation graph is acyclic")
    return Unknown(tuple(sorted(cycles)))
