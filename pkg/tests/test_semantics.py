"""Operational semantics: reachable configurations, states and flows."""

import pytest

from shype import build_lts, ode_system_for
from shype import expr as ex
from shype.errors import ShypeError
from shype.semantics import ode_key

from conftest import load_model


@pytest.fixture(scope="module")
def buffer_lts(buffer_model):
    m = buffer_model.resolve()
    return m, build_lts(m)


@pytest.fixture(scope="module")
def assembler_lts(assembler_model):
    m = assembler_model.resolve()
    return m, build_lts(m)


def test_buffer_config_and_state_counts(buffer_lts):
    m, lts = buffer_lts
    assert len(lts.configurations) == 4
    assert len({c.state for c in lts.configurations}) == 4
    assert len({ode_key(ode_system_for(c, m)) for c in lts.configurations}) == 4


def test_buffer_initial_state_strengths(buffer_lts):
    # after init both flows are off and only the timer influence is live
    m, lts = buffer_lts
    sigma = {name: strength
             for name, strength, _, _ in lts.configurations[lts.initial].state.entries}
    assert sigma == {"f": 0.0, "in": 0.0, "out": 0.0, "t": 1.0}


def test_buffer_state_strength_table(buffer_lts):
    # the four operational states carry (in, out) in {0,20} x {0,-10}
    m, lts = buffer_lts
    seen = set()
    for c in lts.configurations:
        sigma = {name: strength for name, strength, _, _ in c.state.entries}
        assert sigma["f"] == 0.0 and sigma["t"] == 1.0
        seen.add((sigma["in"], sigma["out"]))
    assert seen == {(0.0, 0.0), (20.0, 0.0), (0.0, -10.0), (20.0, -10.0)}


def _outgoing(lts, src):
    return {e for (s, e, _t) in lts.transitions if s == src}


def test_buffer_transition_relation(buffer_lts):
    m, lts = buffer_lts
    by_sigma = {}
    for i, c in enumerate(lts.configurations):
        sigma = {name: s for name, s, _, _ in c.state.entries}
        by_sigma[(sigma["in"], sigma["out"])] = i
    both_off = by_sigma[(0.0, 0.0)]
    both_on = by_sigma[(20.0, -10.0)]
    assert _outgoing(lts, both_off) == {"fail", "on_in", "on_out"}
    assert _outgoing(lts, both_on) == {"fail", "full", "empty", "off_in", "off_out"}
    # fail is a self-loop everywhere
    for i in range(len(lts.configurations)):
        assert lts.transitions.get((i, "fail", i)) == 1


def test_buffer_ode_oracle(buffer_lts):
    # uplink on, downlink off: dB/dt = 20 exactly; the clock always runs at 1
    m, lts = buffer_lts
    val = {v: 0.0 for v in m.variables}
    for c in lts.configurations:
        sigma = {name: s for name, s, _, _ in c.state.entries}
        odes = ode_system_for(c, m)
        expected = sigma["in"] + sigma["out"]
        assert abs(ex.eval_expr(odes["B"], val) - expected) <= 1e-12
        assert abs(ex.eval_expr(odes["T"], val) - 1.0) <= 1e-12


def test_assembler_config_and_state_counts(assembler_lts):
    m, lts = assembler_lts
    assert len(lts.configurations) == 114
    assert len({c.state for c in lts.configurations}) == 64


def test_assembler_initial_flows(assembler_lts):
    # three feeds at 20 each and exponential work decay at rate 0.05 * W
    m, lts = assembler_lts
    odes = ode_system_for(lts.configurations[lts.initial], m)
    val = {v: 1.0 for v in m.variables}
    assert ex.eval_expr(odes["P"], val) == 60.0
    assert ex.eval_expr(odes["T1"], val) == 0.0
    assert ex.canon_key(odes["W1"]) == ex.canon_key(
        ex.Bin("*", ex.Num(0.05), ex.Var("W1")))


def test_ode_key_identifies_equal_systems(buffer_lts):
    m, lts = buffer_lts
    c = lts.configurations[lts.initial]
    assert ode_key(ode_system_for(c, m)) == ode_key(ode_system_for(c, m))


def test_build_is_deterministic(buffer_model):
    m = buffer_model.resolve()
    a, b = build_lts(m), build_lts(m)
    assert [c.term for c in a.configurations] == [c.term for c in b.configurations]
    assert a.transitions == b.transitions
    assert a.initial == b.initial


def test_state_space_cap(assembler_model):
    with pytest.raises(ShypeError):
        build_lts(assembler_model.resolve(), cap=10)


def test_unresolved_parameters_rejected(buffer_model):
    # symbolic strengths must be resolved before semantics
    with pytest.raises(ShypeError):
        build_lts(buffer_model)
