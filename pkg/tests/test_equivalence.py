"""Bisimulation checkers, relation verification and well-behavedness."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shype import (
    BisimPartition,
    NotBisimilar,
    StateEquivKind,
    Unknown,
    Verified,
    WellBehaved,
    blocks_share_odes,
    build_lts,
    check_stochastic_system_bisim,
    check_system_bisim,
    check_well_behaved,
    parse_term,
    verify_relation,
)
from shype import equivalence as eq

from conftest import load_model, with_params


def test_self_bisimulation(buffer_model):
    r = check_system_bisim(buffer_model, buffer_model)
    assert isinstance(r, BisimPartition)
    assert len(r.blocks) == 4
    for block in r.blocks:
        ps = {i for side, i in block if side == "P"}
        qs = {i for side, i in block if side == "Q"}
        assert ps == qs


def test_perturbed_strength_breaks_system_bisim(buffer_model):
    # influence strengths live in the operational state, so plain system
    # bisimulation already tells the models apart
    other = with_params(buffer_model, r_in=25)
    r = check_system_bisim(buffer_model, other)
    assert isinstance(r, NotBisimilar)
    assert "states differ" in r.reason
    assert "on_in" in r.events


def test_perturbed_rate_breaks_stochastic_bisim(buffer_model):
    # stochastic rates are invisible to system bisimulation but not to its
    # stochastic refinement
    other = with_params(buffer_model, k_in_on=0.5)
    assert isinstance(check_system_bisim(buffer_model, other), BisimPartition)
    r = check_stochastic_system_bisim(buffer_model, other,
                                      StateEquivKind.EQUALITY)
    assert isinstance(r, NotBisimilar)
    assert "rates differ" in r.reason


def test_witness_is_serializable(buffer_model):
    other = with_params(buffer_model, r_in=25)
    r = check_system_bisim(buffer_model, other)
    j = r.to_json()
    assert j["witness"]["reason"]
    assert j["witness"]["events"] == ["on_in"]


def test_variable_mismatch_is_reported(assembler_model):
    r = check_system_bisim(assembler_model, load_model("assembler_t"))
    assert isinstance(r, NotBisimilar)
    assert "variable sets differ" in r.reason


_D_PAIRS = [
    ("(C1 || C2) <*> Cm", "D"),
    ("(C1'' || C2'') <*> Cm", "D4"),
    ("(C1' || C2) <*> Cm'", "D11"),
    ("(C1 || C2') <*> Cm''", "D12"),
    ("(C1'' || C2) <*> Cm", "D21"),
    ("(C1 || C2'') <*> Cm", "D22"),
    ("(C1'' || C2') <*> Cm''", "D31"),
    ("(C1' || C2'') <*> Cm'", "D32"),
]


@pytest.fixture(scope="module")
def controller_pair():
    return load_model("assembler_con"), load_model("assembler_conD")


def test_controller_refactoring_bisimilar(controller_pair):
    con, conD = controller_pair
    r = check_stochastic_system_bisim(con, conD, StateEquivKind.EQUALITY)
    assert isinstance(r, BisimPartition)
    assert len(r.blocks) == len(_D_PAIRS)


def test_controller_relation_verified(controller_pair):
    con, conD = controller_pair
    pairs = [(parse_term(a, con), parse_term(b, conD)) for a, b in _D_PAIRS]
    assert isinstance(
        verify_relation(con, conD, pairs, StateEquivKind.EQUALITY), Verified)


def test_controller_relation_violation_detected(controller_pair):
    con, conD = controller_pair
    # swap one derivative: the pair can no longer transfer moves
    bad = [("(C1 || C2) <*> Cm", "D"), ("(C1' || C2) <*> Cm'", "D12")]
    pairs = [(parse_term(a, con), parse_term(b, conD)) for a, b in bad]
    r = verify_relation(con, conD, pairs, StateEquivKind.EQUALITY)
    assert not isinstance(r, Verified)


@pytest.fixture(scope="module")
def feed_models():
    return load_model("feeds"), load_model("feed_single")


def test_feed_aggregation_doteq(feed_models):
    feeds, single = feed_models
    r = check_stochastic_system_bisim(feeds, single, StateEquivKind.DOTEQ)
    assert isinstance(r, BisimPartition)


def test_feed_aggregation_not_strictly_equal(feed_models):
    # per-influence strengths differ, so plain state equality refuses
    feeds, single = feed_models
    r = check_stochastic_system_bisim(feeds, single, StateEquivKind.EQUALITY)
    assert isinstance(r, NotBisimilar)


def test_feed_sum_mismatch_refused(feed_models):
    feeds, single = feed_models
    r = check_stochastic_system_bisim(
        with_params(feeds, a3=6), single, StateEquivKind.DOTEQ)
    assert isinstance(r, NotBisimilar)


def test_doteq_blocks_share_flows(feed_models):
    feeds, single = feed_models
    part = check_stochastic_system_bisim(feeds, single, StateEquivKind.DOTEQ)
    assert blocks_share_odes(part, feeds, single)


@settings(max_examples=12, deadline=None)
@given(st.integers(1, 18), st.integers(1, 18))
def test_feed_rates_matter_only_through_their_sum(a1, a2):
    # three feeds aggregate to one whenever the total inflow matches
    feeds = load_model("feeds")
    single = load_model("feed_single")
    a3 = 20 - a1 - a2
    m = with_params(feeds, a1=a1, a2=a2, a3=a3)
    r = check_stochastic_system_bisim(m, single, StateEquivKind.DOTEQ)
    if a3 >= 1:
        assert isinstance(r, BisimPartition)
    else:
        # negative or zero third feed changes the aggregate flow sign
        m2 = with_params(feeds, a1=a1, a2=a2, a3=1)
        r2 = check_stochastic_system_bisim(m2, single, StateEquivKind.DOTEQ)
        assert isinstance(r2, NotBisimilar) or a1 + a2 + 1 == 20


def test_rate_to_class_oracle(buffer_model):
    m = buffer_model.resolve()
    lts = build_lts(m)
    everything = tuple(range(len(lts.configurations)))
    assert eq.rate_to_class(lts, m, lts.initial, "on_in", everything) == 0.4
    assert eq.rate_to_class(lts, m, lts.initial, "off_in", everything) == 0.0
    # restricting the class to the source drops the rate to zero
    assert eq.rate_to_class(lts, m, lts.initial, "on_in",
                            (lts.initial,)) == 0.0


def test_well_behaved_buffer(buffer_model):
    v = check_well_behaved(buffer_model)
    assert isinstance(v, WellBehaved)


def test_well_behaved_cycle_detected():
    v = check_well_behaved(load_model("zeno2"))
    assert isinstance(v, Unknown)
    assert {"a", "b"} in [set(c) for c in v.cycles]


def test_well_behaved_stochastic_break():
    # same instantaneous structure, but every controller loop crosses a
    # stochastic event
    v = check_well_behaved(load_model("prop1"))
    assert isinstance(v, WellBehaved)


def test_well_behaved_assembler(assembler_model):
    assert isinstance(check_well_behaved(assembler_model), WellBehaved)
    assert isinstance(check_well_behaved(load_model("assembler_d")),
                      WellBehaved)


def test_partition_serialization(controller_pair):
    con, conD = controller_pair
    r = check_stochastic_system_bisim(con, conD, StateEquivKind.EQUALITY)
    j = r.to_json()
    assert j["equivalence"] == "eq"
    assert len(j["blocks"]) == len(r.blocks)
