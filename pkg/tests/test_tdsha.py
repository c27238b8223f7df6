"""Hybrid-automaton construction: both mappings, pruning, products."""

import pytest

from shype import build_lts
from shype import expr as ex
from shype import tdsha as td

from conftest import load_model


@pytest.fixture(scope="module")
def buffer_pair(buffer_model):
    m = buffer_model.resolve()
    return m, td.from_lts(build_lts(m), m)


def test_direct_mapping_mode_count(buffer_pair):
    m, t = buffer_pair
    assert len(t.modes) == 4
    assert t.init_mode in range(4)


def test_compositional_mapping_prunes_to_direct(buffer_pair):
    # 2x2x1x1 component automata with the controller product give 16 modes,
    # of which only 4 survive reachability pruning
    m, t = buffer_pair
    comp = td.compositional_mapping(m)
    assert len(comp.modes) == 16
    pruned = td.prune_unreachable(comp)
    assert len(pruned.modes) == 4
    assert td.graph_isomorphic(t, pruned) is not None


def test_isomorphism_rejects_perturbed(buffer_pair):
    m, t = buffer_pair
    comp = td.prune_unreachable(td.compositional_mapping(m))
    # drop one stochastic transition: no isomorphism can survive
    import dataclasses
    broken = dataclasses.replace(comp, ts=comp.ts[:-1])
    assert td.graph_isomorphic(t, broken) is None


def test_event_partition(buffer_pair):
    m, t = buffer_pair
    assert t.events_d == frozenset({"fail", "full", "empty"})
    assert t.events_s == frozenset({"on_in", "off_in", "on_out", "off_out"})
    assert not (t.events_d & t.events_s)


def test_transition_endpoints_are_modes(buffer_pair):
    m, t = buffer_pair
    modes = set(t.modes)
    for tr in t.td + t.ts:
        assert tr.src in modes and tr.tgt in modes
    for mode, _target, _flow in t.tc:
        assert mode in modes


def test_instantaneous_guards_are_closed(buffer_pair):
    # urgent guards only use =, <=, >=: openness would make triggering
    # ill-defined at the boundary
    m, t = buffer_pair

    def cmps(g):
        if isinstance(g, ex.Cmp):
            yield g
        elif isinstance(g, (ex.And, ex.Or)):
            yield from cmps(g.left)
            yield from cmps(g.right)

    for tr in t.td:
        for c in cmps(tr.guard):
            assert c.op in ("=", "<=", ">=")


def test_stochastic_rates_positive(buffer_pair):
    m, t = buffer_pair
    for tr in t.ts:
        v = ex.const_value(tr.rate)
        assert v is not None and v > 0


def test_init_reset_covers_all_variables(buffer_pair):
    m, t = buffer_pair
    assigned = {a.var for a in t.init_reset}
    assert assigned == set(t.variables) == {"B", "T", "C", "D"}


def test_vector_field_matches_state(buffer_pair):
    m, t = buffer_pair
    x = {v: 0.0 for v in t.variables}
    slopes = sorted(td.vector_field(t, q, x)["B"] for q in range(len(t.modes)))
    assert slopes == [-10.0, 0.0, 10.0, 20.0]
    assert all(td.vector_field(t, q, x)["T"] == 1.0 for q in range(len(t.modes)))


def test_product_with_trivial_automaton_is_identity(buffer_pair):
    # pairing with a one-mode automaton over disjoint events keeps the shape
    m, t = buffer_pair
    unit = td.Tdsha(
        modes=(0,), variables=(), tc=(), td=(), ts=(),
        events_d=frozenset(), events_s=frozenset(),
        init_mode=0, init_reset=())
    prod = td.tdsha_product(t, unit, frozenset())
    assert len(prod.modes) == len(t.modes)
    assert len(prod.td) == len(t.td)
    assert len(prod.ts) == len(t.ts)
    assert td.graph_isomorphic(td.prune_unreachable(prod), t) is not None


def test_product_synchronizes_shared_events():
    # two copies of a tiny two-mode automaton forced to move together
    a = td.Tdsha(
        modes=(0, 1), variables=("X",),
        tc=(), td=(td.Td(src=0, tgt=1, guard=ex.Cmp(">=", ex.Var("X"), ex.Num(1.0)),
                         reset=(), weight=1.0, event="go"),),
        ts=(), events_d=frozenset({"go"}), events_s=frozenset(),
        init_mode=0, init_reset=())
    prod = td.tdsha_product(a, a, frozenset({"go"}))
    assert len(prod.modes) == 4
    moves = {(t.src, t.tgt) for t in prod.td if t.event == "go"}
    # shared event moves both coordinates at once
    assert moves == {((0, 0), (1, 1))}


def test_assembler_mapping_equivalence(assembler_model):
    m = assembler_model.resolve()
    direct = td.from_lts(build_lts(m), m)
    assert len(direct.modes) == 114
    pruned = td.prune_unreachable(td.compositional_mapping(m))
    assert len(pruned.modes) == 114
    assert td.graph_isomorphic(direct, pruned) is not None
