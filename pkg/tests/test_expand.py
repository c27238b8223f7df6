"""Rewriting of general-duration events into clock + timer form."""

import numpy as np
import pytest

from shype import expand_general_durations, parse_model, prepare
from shype import expr as ex
from shype.rng import stream
from shype.simulate import SimulationConfig, simulate_trajectory

from conftest import load_model


@pytest.fixture(scope="module")
def expanded():
    return expand_general_durations(load_model("buffer_sugar"))


def test_adds_clock_and_duration_variables(expanded):
    assert "_time" in expanded.variables
    assert "_clk_fail" in expanded.variables
    assert "_dur_fail" in expanded.variables


def test_adds_unit_rate_timer(expanded):
    # a fresh subcomponent drives the shared clock at rate 1
    assert "_Timer" in expanded.subcomponents
    assert expanded.iv["_t"] == "_time"


def test_rewritten_guard_compares_clock_to_deadline(expanded):
    entry = expanded.event_conditions["fail"]
    act = entry.activation
    want = ex.Cmp("=", ex.Var("_time"),
                  ex.Bin("+", ex.Var("_clk_fail"), ex.Var("_dur_fail")))
    assert ex.guard_key(act) == ex.guard_key(want)


def test_reset_restamps_clock_and_redraws(expanded):
    reset = expanded.event_conditions["fail"].reset
    by_var = {a.var: a.expr for a in reset}
    assert by_var["_clk_fail"] == ex.Var("_time")
    assert isinstance(by_var["_dur_fail"], ex.Rand)
    assert by_var["_dur_fail"].dist == "LogNormal"


def test_init_seeds_clock_and_first_duration(expanded):
    reset = expanded.event_conditions["init"].reset
    by_var = {a.var: a.expr for a in reset}
    assert "_clk_fail" in by_var and "_dur_fail" in by_var


def test_expansion_is_idempotent(expanded):
    assert expand_general_durations(expanded) == expanded


def test_plain_model_unchanged(buffer_model):
    # buffer spells the timer machinery out by hand, nothing to rewrite
    assert expand_general_durations(buffer_model) == buffer_model


_DIRAC_SRC = """\
params { d = 3 }
variables { X }
iv { i -> X }
subcomponent S = init:(i, 0, const).S + tick:(i, 0, const).S
controller C = tick.C
system = S <*> init.C
ec {
  init = (true, X ~ 0)
  stoch tick = (Dirac(d), X ~ X + 1)
}
"""


def test_dirac_duration_fires_on_schedule():
    # deterministic duration: event k happens exactly at t = k * d
    model, diags = parse_model(_DIRAC_SRC, "dirac.shype")
    assert not [x for x in diags if x.severity == "error"], diags
    compiled = prepare(model)
    cfg = SimulationConfig(t_end=20.0, master_seed=7, dt=0.01)
    trace = simulate_trajectory(compiled, cfg, stream(7, 0))
    ticks = [j.t for j in trace.jumps if j.event == "tick"]
    assert len(ticks) == 6
    assert np.allclose(ticks, [3 * (k + 1) for k in range(6)], atol=0.02)
    assert trace.final_valuation()["X"] == 6.0
