"""Command-line entry point.

Subcommands wire the toolchain end to end: validate, lts, tdsha,
simulate, bisim, wellbehaved and sweep. All randomness flows from
--seed; identical inputs and seed give identical outputs.

Exit codes: 0 success; 1 validation violations or non-bisimilar;
2 parse or input errors; 3 instantaneous-chain cap exceeded; 4 unknown
well-behavedness.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import expr as ex
from .equivalence import (
    BisimPartition,
    NotBisimilar,
    StateEquivKind,
    Unknown,
    WellBehaved,
    check_stochastic_system_bisim,
    check_well_behaved,
)
from .errors import ChainCapExceeded, ShypeError
from .expand import expand_general_durations
from .formatter import fmt_term
from .model import Model
from .parser import parse_expr, parse_model
from .semantics import Lts, build_lts
from .simulate import (
    SimulationConfig,
    prepare,
    run_replications,
    simulate_trajectory,
    sweep_parameter,
    write_summary_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .rng import stream
from .tdsha import (
    Tdsha,
    compositional_mapping,
    from_lts,
    prune_unreachable,
)
from .validate import validate_well_defined

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2
EXIT_CHAIN_CAP = 3
EXIT_UNKNOWN = 4


def _f(x: float) -> str:
    return format(float(x), ".17g")


def _load(path: str) -> Model:
    """Parse and report; exits 2 on unreadable input or parse errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    model, diags = parse_model(text, path)
    for d in diags:
        print(str(d), file=sys.stderr)
    if model is None or any(d.severity == "error" for d in diags):
        raise SystemExit(EXIT_PARSE)
    return model


def _checked(model: Model) -> Model:
    report = validate_well_defined(model)
    if not report.ok:
        for v in report.violations:
            print(str(v), file=sys.stderr)
        raise SystemExit(EXIT_VIOLATION)
    return model


def _ready(model: Model, overrides=None) -> Model:
    return expand_general_durations(model).resolve(overrides)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_overrides(pairs) -> dict:
    out = {}
    for p in pairs or ():
        name, _, value = p.partition("=")
        if not _ or not name:
            print(f"bad --param {p!r}; expected NAME=VALUE", file=sys.stderr)
            raise SystemExit(EXIT_PARSE)
        try:
            out[name] = float(value)
        except ValueError:
            print(f"bad --param value {value!r}", file=sys.stderr)
            raise SystemExit(EXIT_PARSE)
    return out


# ---------------------------------------------------------------------------
# serialization


def lts_json(lts: Lts, model: Model) -> str:
    doc = {
        "configurations": [
            {"id": i, "term": fmt_term(c.term), "state": str(c.state)}
            for i, c in enumerate(lts.configurations)
        ],
        "transitions": [
            {"src": s, "event": e, "tgt": t, "mult": mult}
            for (s, e, t), mult in sorted(lts.transitions.items())
        ],
        "initial": lts.initial,
    }
    return json.dumps(doc, indent=2) + "\n"


def lts_dot(lts: Lts, model: Model) -> str:
    lines = ["digraph lts {"]
    for i, c in enumerate(lts.configurations):
        shape = ", shape=doublecircle" if i == lts.initial else ""
        lines.append(f'  n{i} [label="{i}"{shape}];')
    for (s, e, t), mult in sorted(lts.transitions.items()):
        label = e if mult == 1 else f"{e} x{mult}"
        lines.append(f'  n{s} -> n{t} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _mode_ids(t: Tdsha) -> dict:
    return {q: i for i, q in enumerate(t.modes)}


def tdsha_json(t: Tdsha) -> str:
    ids = _mode_ids(t)
    doc = {
        "variables": list(t.variables),
        "modes": [{"id": i, "label": str(q)} for q, i in ids.items()],
        "tc": [
            {"mode": ids[q], "stoichiometry": [[v, c] for v, c in stoich],
             "rate": ex.fmt_expr(rate)}
            for q, stoich, rate in t.tc
        ],
        "td": [
            {"src": ids[e.src], "tgt": ids[e.tgt], "event": e.event,
             "guard": ex.fmt_guard(e.guard), "reset": ex.fmt_reset(e.reset),
             "weight": e.weight}
            for e in t.td
        ],
        "ts": [
            {"src": ids[e.src], "tgt": ids[e.tgt], "event": e.event,
             "rate": ex.fmt_expr(e.rate), "reset": ex.fmt_reset(e.reset)}
            for e in t.ts
        ],
        "init_mode": ids[t.init_mode],
        "init_reset": ex.fmt_reset(t.init_reset),
    }
    return json.dumps(doc, indent=2) + "\n"


def tdsha_dot(t: Tdsha) -> str:
    ids = _mode_ids(t)
    lines = ["digraph tdsha {"]
    for q, i in ids.items():
        shape = ", shape=doublecircle" if q == t.init_mode else ""
        lines.append(f'  m{i} [label="{i}"{shape}];')
    for e in t.td:
        lines.append(
            f'  m{ids[e.src]} -> m{ids[e.tgt]} '
            f'[label="{e.event} [{ex.fmt_guard(e.guard)}]"];')
    for e in t.ts:
        lines.append(
            f'  m{ids[e.src]} -> m{ids[e.tgt]} '
            f'[label="{e.event} @{ex.fmt_expr(e.rate)}", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    model = _load(args.model)
    report = validate_well_defined(model)
    if not report.ok:
        for v in report.violations:
            print(str(v), file=sys.stderr)
        return EXIT_VIOLATION
    print(f"{args.model}: well defined")
    return EXIT_OK


def cmd_lts(args) -> int:
    model = _ready(_checked(_load(args.model)))
    lts = build_lts(model)
    text = lts_dot(lts, model) if args.format == "dot" else lts_json(lts, model)
    _emit(text, args.out)
    return EXIT_OK


def cmd_tdsha(args) -> int:
    model = _ready(_checked(_load(args.model)))
    if args.method == "sos":
        t = from_lts(build_lts(model), model)
    else:
        t = compositional_mapping(model)
        if not args.no_prune:
            t = prune_unreachable(t)
    text = tdsha_dot(t) if args.format == "dot" else tdsha_json(t)
    _emit(text, args.out)
    return EXIT_OK


def _trace_path(base: str, rep: int, reps: int) -> str:
    if reps == 1:
        return base
    stem, dot, extension = base.rpartition(".")
    if not dot:
        return f"{base}.rep{rep}"
    return f"{stem}.rep{rep}.{extension}"


def cmd_simulate(args) -> int:
    model = _checked(_load(args.model))
    overrides = _parse_overrides(args.param)
    cfg = SimulationConfig(
        t_end=args.t_end, master_seed=args.seed, dt=args.dt,
        replication_count=args.reps, record_stride=args.record_stride)
    try:
        compiled = prepare(model, overrides or None)
        if args.summary:
            result = run_replications(compiled, cfg)
            out = args.out or "summary.csv"
            write_summary_csv(result.summary, out)
            for rep, err in result.failures:
                print(f"replication {rep} failed: {err}", file=sys.stderr)
            if result.failures:
                return EXIT_VIOLATION
        else:
            out = args.out or "trace.csv"
            for rep in range(args.reps):
                trace = simulate_trajectory(compiled, cfg, stream(args.seed, rep))
                write_trace_csv(trace, _trace_path(out, rep, args.reps))
    except ChainCapExceeded as exc:
        print(f"instantaneous chain cap exceeded at t={_f(exc.time)}",
              file=sys.stderr)
        return EXIT_CHAIN_CAP
    except ShypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bisim(args) -> int:
    p = _checked(_load(args.model_a))
    q = _checked(_load(args.model_b))
    kind = (StateEquivKind.DOTEQ if args.equiv == "doteq"
            else StateEquivKind.EQUALITY)
    try:
        res = check_stochastic_system_bisim(p, q, kind)
    except ShypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VIOLATION
    if isinstance(res, BisimPartition):
        _emit(json.dumps(res.to_json(), indent=2) + "\n", args.out)
        print(f"bisimilar ({len(res.blocks)} blocks)", file=sys.stderr)
        return EXIT_OK
    assert isinstance(res, NotBisimilar)
    _emit(json.dumps(res.to_json(), indent=2) + "\n", args.out)
    print("not bisimilar", file=sys.stderr)
    return EXIT_VIOLATION


def cmd_wellbehaved(args) -> int:
    model = _checked(_load(args.model))
    verdict = check_well_behaved(model)
    if isinstance(verdict, WellBehaved):
        print(f"well behaved: {verdict.reason}")
        return EXIT_OK
    assert isinstance(verdict, Unknown)
    doc = {"verdict": "unknown", "cycles": [list(c) for c in verdict.cycles]}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    print("unknown: activation graph has cycles", file=sys.stderr)
    return EXIT_UNKNOWN


def cmd_sweep(args) -> int:
    model = _checked(_load(args.model))
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        print(f"bad --values {args.values!r}", file=sys.stderr)
        return EXIT_PARSE
    try:
        cost = parse_expr(args.cost)
    except ShypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    cfg = SimulationConfig(
        t_end=args.t_end, master_seed=args.seed, dt=args.dt,
        replication_count=args.reps, record_stride=args.record_stride)
    try:
        rows = sweep_parameter(model, args.param, values, cost, cfg)
    except ChainCapExceeded as exc:
        print(f"instantaneous chain cap exceeded at t={_f(exc.time)}",
              file=sys.stderr)
        return EXIT_CHAIN_CAP
    except ShypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VIOLATION
    if args.out:
        write_sweep_csv(rows, args.param, args.out)
    print(f"{args.param:>12} {'mean_cost':>14} {'std_error':>12}")
    for r in rows:
        print(f"{r.value:12g} {r.mean_cost:14.4f} {r.std_error:12.4f}")
    best = min(rows, key=lambda r: r.mean_cost)
    print(f"argmin {args.param} = {best.value:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shype",
        description="Stochastic process-algebra toolchain: parse, validate, "
                    "derive transition systems, compile hybrid automata, "
                    "simulate and compare models.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    v = sub.add_parser("validate", help="check a model file is well defined")
    v.add_argument("model", help="model file")
    v.set_defaults(fn=cmd_validate)

    l = sub.add_parser("lts", help="derive the labelled transition system")
    l.add_argument("model", help="model file")
    l.add_argument("--format", choices=("json", "dot"), default="json",
                   help="output format (default: json)")
    l.add_argument("--out", default=None,
                   help="output file (default: standard output)")
    l.set_defaults(fn=cmd_lts)

    t = sub.add_parser("tdsha", help="compile the hybrid automaton")
    t.add_argument("model", help="model file")
    t.add_argument("--format", choices=("json", "dot"), default="json",
                   help="output format (default: json)")
    t.add_argument("--method", choices=("sos", "compositional"),
                   default="sos",
                   help="construction method (default: sos)")
    t.add_argument("--no-prune", action="store_true",
                   help="keep unreachable modes of the compositional product")
    t.add_argument("--out", default=None,
                   help="output file (default: standard output)")
    t.set_defaults(fn=cmd_tdsha)

    s = sub.add_parser("simulate", help="simulate trajectories")
    s.add_argument("model", help="model file")
    s.add_argument("--t-end", type=float, default=50.0,
                   help="end time (default: 50.0)")
    s.add_argument("--dt", type=float, default=1e-3,
                   help="integration step (default: 0.001)")
    s.add_argument("--seed", type=int, required=True,
                   help="master seed (required)")
    s.add_argument("--reps", type=int, default=1,
                   help="replication count (default: 1)")
    s.add_argument("--record-stride", type=int, default=1,
                   help="record every Nth step (default: 1)")
    s.add_argument("--summary", action="store_true",
                   help="write a mean/sd summary instead of traces")
    s.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override a model parameter (repeatable)")
    s.add_argument("--out", default=None,
                   help="output CSV (default: trace.csv or summary.csv)")
    s.set_defaults(fn=cmd_simulate)

    b = sub.add_parser("bisim", help="compare two models for bisimilarity")
    b.add_argument("model_a", help="first model file")
    b.add_argument("model_b", help="second model file")
    b.add_argument("--equiv", choices=("eq", "doteq"), default="eq",
                   help="state equivalence: exact or flow-sum (default: eq)")
    b.add_argument("--out", default=None,
                   help="partition/witness JSON (default: standard output)")
    b.set_defaults(fn=cmd_bisim)

    w = sub.add_parser("wellbehaved",
                       help="check finiteness of simultaneous event bursts")
    w.add_argument("model", help="model file")
    w.add_argument("--out", default=None,
                   help="cycle report JSON (default: standard output)")
    w.set_defaults(fn=cmd_wellbehaved)

    sw = sub.add_parser("sweep", help="sweep a parameter against a cost")
    sw.add_argument("model", help="model file")
    sw.add_argument("--param", required=True, help="parameter name (required)")
    sw.add_argument("--values", required=True,
                    help="comma-separated parameter values (required)")
    sw.add_argument("--cost", required=True,
                    help="cost expression over the terminal valuation "
                         "(required)")
    sw.add_argument("--t-end", type=float, default=50.0,
                    help="end time (default: 50.0)")
    sw.add_argument("--dt", type=float, default=1e-3,
                    help="integration step (default: 0.001)")
    sw.add_argument("--seed", type=int, required=True,
                    help="master seed (required)")
    sw.add_argument("--reps", type=int, default=100,
                    help="replications per value (default: 100)")
    sw.add_argument("--record-stride", type=int, default=1,
                    help="record every Nth step (default: 1)")
    sw.add_argument("--out", default=None, help="sweep table CSV")
    sw.set_defaults(fn=cmd_sweep)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except ShypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
