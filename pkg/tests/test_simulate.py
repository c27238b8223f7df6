"""Trajectory driver: reproducibility, replication, resets and outputs."""

import numpy as np
import pytest

from shype.errors import ChainCapExceeded
from shype.rng import stream
from shype.simulate import (
    SimulationConfig,
    prepare,
    run_replications,
    simulate_trajectory,
    write_summary_csv,
    write_trace_csv,
)

from conftest import load_model


@pytest.fixture(scope="module")
def compiled_buffer():
    return prepare(load_model("buffer"))


def _cfg(**kw):
    base = dict(t_end=25.0, master_seed=42, dt=0.01)
    base.update(kw)
    return SimulationConfig(**base)


def test_same_seed_same_trace(compiled_buffer):
    a = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 0))
    b = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 0))
    assert np.array_equal(a.samples, b.samples)
    assert [(j.t, j.event) for j in a.jumps] == [(j.t, j.event) for j in b.jumps]


def test_different_replication_different_trace(compiled_buffer):
    a = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 0))
    b = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 1))
    assert [(j.t, j.event) for j in a.jumps] != [(j.t, j.event) for j in b.jumps]


def test_run_replications_matches_single_trajectory(compiled_buffer):
    single = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 0))
    res = run_replications(compiled_buffer, _cfg(replication_count=1),
                           keep_traces=True)
    assert not res.failures
    assert np.array_equal(res.traces[0].samples, single.samples)


def test_initial_valuation(compiled_buffer):
    trace = simulate_trajectory(compiled_buffer, _cfg(), stream(42, 0))
    first = trace.samples[0]
    assert first[0] == 0.0
    iB = 2 + compiled_buffer.variables.index("B")
    iT = 2 + compiled_buffer.variables.index("T")
    assert first[iB] == 100.0 and first[iT] == 0.0


def test_summary_statistics(compiled_buffer):
    res = run_replications(compiled_buffer, _cfg(replication_count=8))
    s = res.summary
    assert s.replication_count == 8
    assert s.grid[0] == 0.0
    bcol = s.variables.index("B")
    # init pins B to 100, so at t=0 the mean is exact and the sd is zero
    assert s.mean[0, bcol] == 100.0
    assert s.sd[0, bcol] == 0.0
    assert s.mean.shape == s.sd.shape == (len(s.grid), len(s.variables))


def test_jump_records_pre_and_post(compiled_buffer):
    trace = simulate_trajectory(compiled_buffer, _cfg(t_end=60.0),
                                stream(42, 0))
    fails = [j for j in trace.jumps if j.event == "fail"]
    assert fails
    for j in fails:
        # reset is atomic: C stamps the pre-jump clock, B can only shrink
        assert j.post["C"] == j.pre["T"]
        assert 0.0 <= j.post["B"] <= j.pre["B"]
        assert j.kind == "instantaneous"
    stochs = [j for j in trace.jumps if j.event in
              ("on_in", "off_in", "on_out", "off_out")]
    assert stochs and all(j.kind == "stochastic" for j in stochs)


def test_chain_cap_detects_instantaneous_livelock():
    compiled = prepare(load_model("zeno2"))
    cfg = SimulationConfig(t_end=1.0, master_seed=0, dt=0.01, chain_cap=50)
    with pytest.raises(ChainCapExceeded) as err:
        simulate_trajectory(compiled, cfg, stream(0, 0))
    assert err.value.time == 0.0


def test_parameter_overrides():
    compiled = prepare(load_model("buffer"), overrides={"b0": 7.0})
    trace = simulate_trajectory(compiled, _cfg(t_end=1.0), stream(1, 0))
    assert trace.samples[0][2 + compiled.variables.index("B")] == 7.0


def test_trace_csv_layout(tmp_path, compiled_buffer):
    trace = simulate_trajectory(compiled_buffer, _cfg(t_end=5.0),
                                stream(42, 0))
    out = tmp_path / "trace.csv"
    write_trace_csv(trace, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,mode," + ",".join(trace.variables) + ",event"
    assert len(lines) == 1 + len(trace.samples) + len(trace.jumps)
    assert lines[1].startswith("0")


def test_summary_csv_layout(tmp_path, compiled_buffer):
    res = run_replications(compiled_buffer, _cfg(t_end=5.0,
                                                 replication_count=3))
    out = tmp_path / "summary.csv"
    write_summary_csv(res.summary, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t," + ",".join(
        f"{v}_{suffix}" for v in res.summary.variables
        for suffix in ("mean", "sd"))
    assert len(lines) == 1 + len(res.summary.grid)


def test_trace_column_accessor(compiled_buffer):
    trace = simulate_trajectory(compiled_buffer, _cfg(t_end=5.0),
                                stream(42, 0))
    iB = 2 + compiled_buffer.variables.index("B")
    assert np.array_equal(trace.column("B"), trace.samples[:, iB])
    with pytest.raises(KeyError):
        trace.column("nope")
