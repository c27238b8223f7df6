"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (visible with -v as the test
outcome, and with -s as an explicit tag) and pins its tolerance inline.
"""

import math
import time

import numpy as np
import pytest
import scipy.stats

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
from shype import expr as ex
from shype import tdsha as td
from shype.rng import stream
from shype.semantics import ode_key, ode_system_for
from shype.simulate import (
    SimulationConfig,
    prepare,
    run_replications,
    simulate_trajectory,
    sweep_parameter,
)

from conftest import load_model, with_params


def report(ok, label):
    print(f"{'PASS' if ok else 'FAIL'}: {label}")
    assert ok, label


# --------------------------------------------------------------------------


def test_criterion_01_buffer_lts_size():
    m = load_model("buffer").resolve()
    t0 = time.perf_counter()
    lts = build_lts(m)
    elapsed = time.perf_counter() - t0
    ok = len(lts.configurations) == 4
    ok = ok and len({c.state for c in lts.configurations}) == 4
    # the input-on / output-off state carries the displayed strengths
    sigmas = [{n: s for n, s, _, _ in c.state.entries}
              for c in lts.configurations]
    ok = ok and {"f": 0.0, "in": 20.0, "out": 0.0, "t": 1.0} in sigmas
    ok = ok and elapsed < 1.0
    report(ok, f"buffer LTS has 4 configurations / 4 states in {elapsed:.3f}s")


def test_criterion_02_mapping_equivalence():
    t0 = time.perf_counter()
    ok = True
    for name in ("buffer", "assembler"):
        m = load_model(name).resolve()
        direct = td.from_lts(build_lts(m), m)
        pruned = td.prune_unreachable(td.compositional_mapping(m))
        ok = ok and td.graph_isomorphic(direct, pruned) is not None
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    report(ok, f"direct and compositional mappings isomorphic after pruning "
               f"for buffer and assembler in {elapsed:.2f}s")


def test_criterion_03_ode_correctness():
    m = load_model("buffer").resolve()
    t = td.from_lts(build_lts(m), m)
    x = {v: 0.0 for v in t.variables}
    target = None
    for q in t.modes:
        vf = td.vector_field(t, q, x)
        if vf["B"] == 20.0:
            target = vf
    ok = target is not None
    ok = ok and abs(target["B"] - 20.0) <= 1e-12
    ok = ok and abs(target["T"] - 1.0) <= 1e-12
    report(ok, "input-on/output-off mode flows dB/dt = 20, dT/dt = 1 "
               "to 1e-12")


def _np_eval(e, cols):
    if isinstance(e, ex.Num):
        return e.value
    if isinstance(e, ex.Var):
        return cols[e.name]
    if isinstance(e, ex.Bin):
        a, b = _np_eval(e.left, cols), _np_eval(e.right, cols)
        return {"+": np.add, "-": np.subtract, "*": np.multiply,
                "/": np.divide}[e.op](a, b)
    raise AssertionError(f"guard atom uses {type(e).__name__}")


def _guard_atoms(guard):
    if isinstance(guard, ex.Cmp):
        yield guard
    elif isinstance(guard, ex.And):
        yield from _guard_atoms(guard.left)
        yield from _guard_atoms(guard.right)
    else:
        raise AssertionError(f"unexpected guard {type(guard).__name__}")


def _atom_overshoot(atom, cols, tol):
    """True when one between-jumps segment sits past the trigger surface.

    Inequalities must never hold with margin above tol; equalities must
    never be crossed (samples on both sides of the surface) within one
    segment. Conservative for conjunctions, exact for single-atom guards.
    """
    d = np.asarray(_np_eval(atom.left, cols) - _np_eval(atom.right, cols),
                   dtype=float)
    if atom.op == ">=":
        return bool(np.max(d, initial=-np.inf) > tol)
    if atom.op == "<=":
        return bool(np.min(d, initial=np.inf) < -tol)
    return bool(np.max(d, initial=-np.inf) > tol
                and np.min(d, initial=np.inf) < -tol)


def _segments(trace):
    """Maximal sample runs strictly between consecutive jumps."""
    t = trace.samples[:, 0]
    cuts = np.searchsorted(t, [j.t for j in trace.jumps], side="right")
    bounds = [0] + sorted(set(cuts)) + [len(t)]
    for lo, hi in zip(bounds, bounds[1:]):
        if hi > lo:
            yield lo, hi


def test_criterion_04_simulation_invariants():
    compiled = prepare(load_model("buffer"))
    cfg = SimulationConfig(t_end=50.0, master_seed=1234, dt=0.01)
    reps = 200
    by_index = {cm.index: cm for cm in compiled.modes.values()}
    on_in_enabled = {cm.index for cm in compiled.modes.values()
                     if any(t.event == "on_in" for t in cm.ts)}
    bounds_ok = True
    guard_ok = True
    interarrivals = []
    for r in range(reps):
        trace = simulate_trajectory(compiled, cfg, stream(cfg.master_seed, r))
        B = trace.column("B")
        bounds_ok = bounds_ok and bool(
            np.all(B >= 0.0) and np.all(B <= 200.0))
        cols = {v: trace.column(v) for v in compiled.variables}
        modes = trace.samples[:, 1].astype(int)
        for lo, hi in _segments(trace):
            cm = by_index[modes[lo]]
            sub = {v: c[lo:hi] for v, c in cols.items()}
            for tr in cm.td:
                for atom in _guard_atoms(tr.guard):
                    if _atom_overshoot(atom, sub, cfg.root_tol + 1e-12):
                        guard_ok = False
        # accumulated enabled-time between consecutive on_in firings
        mode, prev_t, acc = compiled.mode_index(compiled.source.init_mode), 0.0, 0.0
        for j in trace.jumps:
            if mode in on_in_enabled:
                acc += j.t - prev_t
            prev_t = j.t
            mode = j.mode_after
            if j.event == "on_in":
                interarrivals.append(acc)
                acc = 0.0
    gaps = np.array(interarrivals)
    se = gaps.std(ddof=1) / math.sqrt(len(gaps))
    mean_ok = abs(gaps.mean() - 2.5) <= 3 * se
    report(bounds_ok and guard_ok and mean_ok,
           f"200 replications: 0 <= B <= 200 everywhere ({bounds_ok}), "
           f"no urgent guard exceeded past root_tol ({guard_ok}), "
           f"on_in enabled-time mean {gaps.mean():.3f} within 3 s.e. "
           f"({3 * se:.3f}) of 2.5")


def test_criterion_05_duration_moments():
    compiled = prepare(load_model("buffer_sugar"))
    cfg = SimulationConfig(t_end=800.0, master_seed=77, dt=0.01,
                           record_stride=2000)
    gaps = []
    r = 0
    while len(gaps) < 10_000:
        trace = simulate_trajectory(compiled, cfg, stream(cfg.master_seed, r))
        times = [j.t for j in trace.jumps if j.event == "fail"]
        gaps.extend(np.diff([0.0] + times))
        r += 1
    gaps = np.array(gaps)
    n = len(gaps)
    # closed-form moments of LogNormal(mu = 2.5, variance parameter = 0.5)
    mean = math.exp(2.5 + 0.25)
    var = (math.exp(0.5) - 1) * math.exp(5.0 + 0.5)
    se_mean = gaps.std(ddof=1) / math.sqrt(n)
    m2 = gaps.var(ddof=1)
    m4 = np.mean((gaps - gaps.mean()) ** 4)
    se_var = math.sqrt(max(m4 - m2 ** 2, 0.0) / n)
    mean_ok = abs(gaps.mean() - mean) <= 3 * se_mean
    var_ok = abs(m2 - var) <= 3 * se_var
    report(mean_ok and var_ok,
           f"{n} fail inter-occurrences: mean {gaps.mean():.2f} vs {mean:.2f}"
           f" (3 s.e. {3 * se_mean:.2f}), variance {m2:.1f} vs {var:.1f}"
           f" (3 s.e. {3 * se_var:.1f})")


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


def test_criterion_06_controller_equivalence():
    con = load_model("assembler_con")
    conD = load_model("assembler_conD")
    t0 = time.perf_counter()
    r = check_stochastic_system_bisim(con, conD, StateEquivKind.EQUALITY)
    pairs = [(parse_term(a, con), parse_term(b, conD)) for a, b in _D_PAIRS]
    verified = verify_relation(con, conD, pairs, StateEquivKind.EQUALITY)
    elapsed = time.perf_counter() - t0
    ok = isinstance(r, BisimPartition)
    if ok:
        # every named pair must land in one block of the partition
        lts_p, lts_q = r.lts_p, r.lts_q
        def block_of(side, term):
            # configurations pair the uncontrolled system with the
            # controller derivative; match on the controller side
            lts = lts_p if side == "P" else lts_q
            idx = [i for i, c in enumerate(lts.configurations)
                   if c.term.right == term]
            assert len(idx) == 1
            for bi, block in enumerate(r.blocks):
                if (side, idx[0]) in block:
                    return bi
            return None
        for a, b in pairs:
            ok = ok and block_of("P", a) is not None
            ok = ok and block_of("P", a) == block_of("Q", b)
    ok = ok and isinstance(verified, Verified)
    ok = ok and elapsed < 5.0
    report(ok, f"controller refactoring bisimilar with all 8 relation pairs "
               f"in one block each, relation Verified, in {elapsed:.2f}s")


def test_criterion_07_feed_aggregation():
    feeds = load_model("feeds")
    single = load_model("feed_single")
    r1 = check_stochastic_system_bisim(feeds, with_params(
        feeds, a1=10, a2=5, a3=5), StateEquivKind.DOTEQ)
    r2 = check_stochastic_system_bisim(feeds, single, StateEquivKind.DOTEQ)
    r3 = check_stochastic_system_bisim(feeds, with_params(
        feeds, a1=10, a2=5, a3=6), StateEquivKind.DOTEQ)
    ok = isinstance(r1, BisimPartition) and isinstance(r2, BisimPartition)
    ok = ok and isinstance(r3, NotBisimilar)
    report(ok, "feeds (5,7,8) ~ (10,5,5) ~ single 20 under flow-sum "
               "equality; (10,5,6) correctly refused")


def test_criterion_08_same_ode_theorem():
    feeds = load_model("feeds")
    single = load_model("feed_single")
    part = check_stochastic_system_bisim(feeds, single, StateEquivKind.DOTEQ)
    assert isinstance(part, BisimPartition)
    ok = blocks_share_odes(part, feeds, single)
    report(ok, "every flow-sum partition block shares one normalized "
               "ODE system")


def test_criterion_09_well_behavedness():
    v1 = check_well_behaved(load_model("buffer"))
    v2 = check_well_behaved(load_model("zeno2"))
    v3 = check_well_behaved(load_model("prop1"))
    ok = isinstance(v1, WellBehaved)
    ok = ok and isinstance(v2, Unknown)
    ok = ok and any(set(c) == {"a", "b"} for c in v2.cycles)
    ok = ok and isinstance(v3, WellBehaved)
    report(ok, "buffer WellBehaved; mutual-activation pair Unknown with the "
               "2-cycle; stochastic-break loop WellBehaved")


def test_criterion_10_semaphore_exclusion():
    model = load_model("assembler_sem")
    resolved = model.resolve()
    lts = build_lts(resolved)

    def names(term):
        out = set()
        stack = [term]
        while stack:
            t = stack.pop()
            if hasattr(t, "name"):
                out.add(t.name)
            for f in ("left", "right", "cont"):
                if hasattr(t, f):
                    stack.append(getattr(t, f))
        return out

    forbidden = {i for i, c in enumerate(lts.configurations)
                 if {"C1'", "C2'"} <= names(c.term)}
    assert forbidden  # statically reachable, that is the point
    compiled = prepare(model)
    bad = {compiled.mode_index(i) for i in forbidden}
    cfg = SimulationConfig(t_end=100.0, master_seed=31, dt=0.05,
                           record_stride=10_000)
    visited = set()
    for r in range(500):
        trace = simulate_trajectory(compiled, cfg, stream(cfg.master_seed, r))
        visited.add(compiled.mode_index(compiled.source.init_mode))
        for j in trace.jumps:
            visited.add(j.mode_after)
    ok = not (visited & bad)
    report(ok, f"500 replications never enter the {len(forbidden)} "
               f"mutually-active controller configurations")


def test_criterion_11_optimisation_sweep():
    model = load_model("assembler_opt")
    cost = ex.Var("total_cost")
    t0 = time.perf_counter()
    ok = True
    argmins = []
    for seed in (101, 202, 303):
        cfg = SimulationConfig(t_end=200.0, master_seed=seed, dt=0.05,
                               replication_count=500, record_stride=100)
        rows = sweep_parameter(model, "m", [1, 2, 3, 4], cost, cfg)
        best = min(rows, key=lambda r: r.mean_cost)
        argmins.append(best.value)
        ok = ok and all(r.replication_count >= 500 for r in rows)
    elapsed = time.perf_counter() - t0
    ok = ok and all(v == 2 for v in argmins)
    ok = ok and elapsed < 300.0
    report(ok, f"batch-size sweep argmin m = 2 across 3 seeds "
               f"({argmins}) in {elapsed:.1f}s")


def test_criterion_12_bisim_strictness_vs_dynamics():
    a = load_model("assembler")
    b = load_model("assembler_t")
    r = check_system_bisim(a, b)
    ok = isinstance(r, NotBisimilar)
    finals = []
    # disjoint seeds: with a shared stream the runs would be pairwise
    # near-identical and the test vacuous
    for model, seed in ((a, 59), (b, 60)):
        cfg = SimulationConfig(t_end=50.0, master_seed=seed, dt=0.05,
                               record_stride=1000)
        compiled = prepare(model)
        col = compiled.variables.index("B")
        vals = np.empty(1000)
        for rep in range(1000):
            trace = simulate_trajectory(compiled, cfg, stream(seed, rep))
            vals[rep] = trace.samples[-1, 2 + col]
        finals.append(vals)
    stat = scipy.stats.ttest_ind(finals[0], finals[1], equal_var=False)
    ok = ok and stat.pvalue > 0.01
    report(ok, f"timer-sharing refactoring not system bisimilar "
               f"({getattr(r, 'reason', '')}) yet terminal belt means "
               f"{finals[0].mean():.2f} vs {finals[1].mean():.2f} are "
               f"indistinguishable (t-test p = {stat.pvalue:.3f})")
