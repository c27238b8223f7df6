"""Trajectory simulation, replication summaries, parameter sweeps, CSV IO.

A compiled automaton is executed as a piecewise-deterministic process:
deterministic RK4 flow inside a mode, urgent jumps at guard roots, stochastic
jumps when the integrated hazard reaches an Exp(1) draw, random resets at
jump times. All randomness flows from one seeded stream per replication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import expr as ex
from .compilekit import ATOM_LEQ, CompiledMode, CompiledTdsha, compile_tdsha
from .errors import BadParameter, ChainCapExceeded, EvalError, ShypeError
from .expand import expand_general_durations
from .model import Model
from .rng import stream
from .semantics import build_lts
from .simulator import kernel
from .simulator._kernel_py import (
    _atom_values,
    _eval,
    atoms_satisfied,
    guard_mask,
)
from .tdsha import Tdsha, from_lts
from .validate import validate_well_defined

ENTRY_TOL = 1e-9


@dataclass
class SimulationConfig:
    t_end: float
    master_seed: int
    dt: float = 1e-3
    root_tol: float = 1e-9
    replication_count: int = 1
    chain_cap: int = 1000
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise BadParameter("dt must be positive")
        if not (0 < self.root_tol < self.dt):
            raise BadParameter("root_tol must satisfy 0 < root_tol < dt")
        if self.chain_cap < 1:
            raise BadParameter("chain_cap must be at least 1")


@dataclass(frozen=True)
class Jump:
    t: float
    event: str
    kind: str  # instantaneous | stochastic
    pre: dict
    post: dict
    mode_before: int
    mode_after: int


@dataclass
class Trace:
    variables: tuple
    samples: np.ndarray  # rows: t, mode index, variables...
    jumps: List[Jump]

    def final_valuation(self) -> dict:
        row = self.samples[-1]
        return dict(zip(self.variables, row[2:]))

    def column(self, var: str) -> np.ndarray:
        if var not in self.variables:
            raise KeyError(var)
        return self.samples[:, 2 + self.variables.index(var)]


def _entry_check(cm: CompiledMode, x: np.ndarray, tol: float = ENTRY_TOL):
    """Entry signs for equality atoms plus the immediately-satisfied mask."""
    n_atoms = len(cm.atom_off) - 1
    signs = np.zeros(max(n_atoms, 1), dtype=np.int8)
    if n_atoms == 0:
        return signs, 0
    stack = np.empty(64)
    vals = np.empty(n_atoms)
    _atom_values(cm.atom_code, cm.atom_off, cm.consts, x, stack, vals)
    sat = np.zeros(n_atoms, dtype=bool)
    for i in range(n_atoms):
        s = vals[i]
        if cm.atom_kind[i] == ATOM_LEQ:
            sat[i] = s <= tol
            signs[i] = 0
        else:
            if abs(s) <= tol:
                sat[i] = True
                signs[i] = 0
            else:
                sat[i] = False
                signs[i] = 1 if s > 0 else -1
    return signs, guard_mask(cm.guard_code, cm.guard_off, sat)


def _apply_reset(reset: tuple, variables: tuple, x: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    valuation = dict(zip(variables, x))
    post = ex.apply_reset(reset, valuation, rng)
    return np.asarray([post[v] for v in variables], dtype=np.float64)


def _pick_weighted(rng: np.random.Generator, weights: Sequence[float]) -> int:
    total = sum(weights)
    if total <= 0:
        raise EvalError("no transition with positive weight or rate")
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def simulate_trajectory(compiled: CompiledTdsha, cfg: SimulationConfig,
                        rng: np.random.Generator) -> Trace:
    src = compiled.source
    variables = compiled.variables
    n = len(variables)

    x = _apply_reset(src.init_reset, variables, np.zeros(n), rng)
    mode = src.init_mode
    t = 0.0
    samples: List[np.ndarray] = []
    jumps: List[Jump] = []

    def record(t_, mode_idx, x_):
        samples.append(np.concatenate(([t_, float(mode_idx)], x_)))

    rec_cap = 0
    rec = None
    if cfg.record_stride > 0:
        rec_cap = int(math.ceil(cfg.t_end / (cfg.dt * cfg.record_stride))) + 2
        rec = np.empty((rec_cap, 1 + n))

    chain_time = t
    chain_count = 0

    def fire_td(cm: CompiledMode, mask: int, t_, x_):
        nonlocal chain_time, chain_count
        if t_ > chain_time:
            chain_time, chain_count = t_, 0
        candidates = [cm.td[i] for i in range(len(cm.td)) if mask & (1 << i)]
        pick = candidates[_pick_weighted(rng, [c.weight for c in candidates])]
        chain_count += 1
        if chain_count > cfg.chain_cap:
            raise ChainCapExceeded(t_, cfg.chain_cap)
        pre = dict(zip(variables, x_))
        x_new = _apply_reset(pick.reset, variables, x_, rng)
        jumps.append(Jump(t_, pick.event, "instantaneous", pre,
                          dict(zip(variables, x_new)),
                          compiled.mode_index(pick.src),
                          compiled.mode_index(pick.tgt)))
        return pick.tgt, x_new

    record(t, compiled.mode_index(mode), x)

    # entering a mode may immediately satisfy a guard; chase the chain
    cm = compiled.modes[mode]
    signs, mask = _entry_check(cm, x)
    while mask:
        mode, x = fire_td(cm, mask, t, x)
        cm = compiled.modes[mode]
        signs, mask = _entry_check(cm, x)

    U = rng.exponential(1.0)
    H = 0.0
    step_phase = 0

    while t < cfg.t_end:
        cm = compiled.modes[mode]
        status, t, H, mask, n_rec, step_phase = kernel.advance(
            cm.ode_code, cm.ode_off, cm.atom_code, cm.atom_off, cm.atom_kind,
            cm.guard_code, cm.guard_off, cm.rate_code, cm.rate_off, cm.consts,
            x, t, cfg.t_end, cfg.dt, cfg.root_tol, U, H, signs,
            rec, cfg.record_stride, step_phase)
        if n_rec:
            mcol = np.full((n_rec, 1), float(cm.index))
            samples.extend(np.hstack((rec[:n_rec, :1], mcol,
                                      rec[:n_rec, 1:])))
        if status == kernel.END:
            t = cfg.t_end
            record(t, cm.index, x)
            break
        if status == kernel.ERR_NONFINITE:
            raise EvalError(f"flow left the finite domain at t={t}")
        if status == kernel.ERR_NEGATIVE_RATE:
            raise EvalError(f"negative stochastic rate at t={t}")
        if status == kernel.STOCH:
            stack = np.empty(64)
            rates = [
                _eval(cm.rate_code, cm.rate_off[i], cm.rate_off[i + 1],
                      cm.consts, x, stack)
                for i in range(len(cm.ts))
            ]
            pick = cm.ts[_pick_weighted(rng, rates)]
            pre = dict(zip(variables, x))
            x = _apply_reset(pick.reset, variables, x, rng)
            jumps.append(Jump(t, pick.event, "stochastic", pre,
                              dict(zip(variables, x)),
                              compiled.mode_index(pick.src),
                              compiled.mode_index(pick.tgt)))
            mode = pick.tgt
            chain_time, chain_count = t, 0
        else:  # GUARD
            mode, x = fire_td(cm, mask, t, x)
        # entry chain in the new mode, then a fresh hazard draw
        cm = compiled.modes[mode]
        signs, mask = _entry_check(cm, x)
        while mask:
            mode, x = fire_td(cm, mask, t, x)
            cm = compiled.modes[mode]
            signs, mask = _entry_check(cm, x)
        U = rng.exponential(1.0)
        H = 0.0

    return Trace(variables, np.vstack(samples), jumps)


# ---------------------------------------------------------------------------
# replications


@dataclass
class Summary:
    variables: tuple
    grid: np.ndarray
    mean: np.ndarray  # shape (len(grid), n_vars)
    sd: np.ndarray
    replication_count: int


@dataclass
class ReplicationResult:
    traces: List[Trace]
    summary: Summary
    failures: List[tuple] = field(default_factory=list)  # (rep index, error)


def _sample_on_grid(trace: Trace, grid: np.ndarray) -> np.ndarray:
    """Last-sample-carried-forward valuation of every variable on the grid."""
    times = trace.samples[:, 0]
    idx = np.searchsorted(times, grid, side="right") - 1
    idx = np.clip(idx, 0, len(times) - 1)
    return trace.samples[idx, 2:]


def run_replications(compiled: CompiledTdsha, cfg: SimulationConfig,
                     keep_traces: bool = False) -> ReplicationResult:
    n_grid = int(math.ceil(cfg.t_end / (cfg.dt * max(cfg.record_stride, 1))))
    n_grid = min(n_grid, 100_000)
    grid = np.linspace(0.0, cfg.t_end, n_grid + 1)
    n_vars = len(compiled.variables)
    count = 0
    mean = np.zeros((len(grid), n_vars))
    m2 = np.zeros((len(grid), n_vars))
    traces: List[Trace] = []
    failures: List[tuple] = []
    for rep in range(cfg.replication_count):
        rng = stream(cfg.master_seed, rep)
        try:
            trace = simulate_trajectory(compiled, cfg, rng)
        except ShypeError as err:
            failures.append((rep, err))
            continue
        vals = _sample_on_grid(trace, grid)
        count += 1
        delta = vals - mean
        mean += delta / count
        m2 += delta * (vals - mean)
        if keep_traces:
            traces.append(trace)
    sd = np.sqrt(m2 / (count - 1)) if count > 1 else np.zeros_like(m2)
    summary = Summary(compiled.variables, grid, mean, sd, count)
    return ReplicationResult(traces, summary, failures)


# ---------------------------------------------------------------------------
# model-level drivers


def prepare(model: Model, overrides: Optional[Dict[str, float]] = None) -> CompiledTdsha:
    """Resolve, expand, validate and compile a model down to the automaton."""
    resolved = expand_general_durations(model).resolve(overrides)
    report = validate_well_defined(resolved)
    if not report.ok:
        raise ShypeError(f"model is not well-defined:\n{report}")
    lts = build_lts(resolved)
    return compile_tdsha(from_lts(lts, resolved))


@dataclass
class SweepRow:
    value: float
    mean_cost: float
    std_error: float
    replication_count: int


def sweep_parameter(model: Model, param: str, values: Sequence[float],
                    cost: ex.Expr, cfg: SimulationConfig) -> List[SweepRow]:
    """Rebuild the automaton per parameter value; report the mean and the
    standard error of the cost expression over terminal valuations."""
    from .errors import UnknownParameter

    if param not in model.params:
        raise UnknownParameter(param)
    rows = []
    for value in values:
        compiled = prepare(model, {param: float(value)})
        costs = []
        for rep in range(cfg.replication_count):
            rng = stream(cfg.master_seed, rep)
            trace = simulate_trajectory(compiled, cfg, rng)
            costs.append(ex.eval_expr(cost, trace.final_valuation()))
        arr = np.asarray(costs)
        se = arr.std(ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
        rows.append(SweepRow(float(value), float(arr.mean()), float(se),
                             len(arr)))
    return rows


# ---------------------------------------------------------------------------
# CSV serialization (17 significant digits)


def _f(v: float) -> str:
    return format(float(v), ".17g")


def write_trace_csv(trace: Trace, path: str) -> None:
    """Rows ordered by time; jump rows carry the event and post-reset values."""
    rows = []
    for s in trace.samples:
        rows.append((s[0], int(s[1]), s[2:], ""))
    for j in trace.jumps:
        post = np.asarray([j.post[v] for v in trace.variables])
        rows.append((j.t, j.mode_after, post, j.event))
    rows.sort(key=lambda r: r[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,mode," + ",".join(trace.variables) + ",event\n")
        for t, mode, vals, event in rows:
            fh.write(_f(t) + f",{mode}," + ",".join(_f(v) for v in vals)
                     + f",{event}\n")


def write_summary_csv(summary: Summary, path: str) -> None:
    header = ["t"]
    for v in summary.variables:
        header += [f"{v}_mean", f"{v}_sd"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i, t in enumerate(summary.grid):
            cells = [_f(t)]
            for k in range(len(summary.variables)):
                cells += [_f(summary.mean[i, k]), _f(summary.sd[i, k])]
            fh.write(",".join(cells) + "\n")


def write_sweep_csv(rows: Sequence[SweepRow], param: str, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{param},mean_cost,std_error,replications\n")
        for r in rows:
            fh.write(f"{_f(r.value)},{_f(r.mean_cost)},{_f(r.std_error)},"
                     f"{r.replication_count}\n")
