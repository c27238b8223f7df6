#!/usr/bin/env python3
"""Compare the compiled integration kernel against the pure-Python one.

Runs the same seeded trajectories through both backends and reports
wall-clock time plus the speedup. The traces are asserted bit-identical
first, so the numbers compare equal work.

Usage: python3 benchmarks/bench_kernel.py [--reps N] [--t-end T]
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from shype.parser import parse_model
from shype.rng import stream
from shype.simulate import SimulationConfig, prepare, simulate_trajectory
from shype.simulator import _kernel_py, kernel

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def load(name):
    path = MODELS / f"{name}.shype"
    model, diags = parse_model(path.read_text(), str(path))
    assert model is not None, diags
    return model


def run(compiled, cfg, reps):
    t0 = time.perf_counter()
    traces = [simulate_trajectory(compiled, cfg, stream(cfg.master_seed, r))
              for r in range(reps)]
    return time.perf_counter() - t0, traces


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20,
                    help="replications per backend (default: 20)")
    ap.add_argument("--t-end", type=float, default=50.0,
                    help="end time (default: 50.0)")
    ap.add_argument("--dt", type=float, default=1e-3,
                    help="integration step (default: 0.001)")
    args = ap.parse_args()

    if kernel.BACKEND != "compiled":
        print("compiled backend unavailable; nothing to compare")
        return 1

    cfg = SimulationConfig(t_end=args.t_end, master_seed=11, dt=args.dt)
    print(f"{'model':<12} {'compiled':>10} {'python':>10} {'speedup':>9}")
    for name in ("buffer", "assembler"):
        compiled = prepare(load(name))
        compiled_time, a = run(compiled, cfg, args.reps)
        kernel.advance = _kernel_py.advance
        python_time, b = run(compiled, cfg, args.reps)
        kernel.advance = kernel._impl.advance
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.samples, tb.samples), "backends diverge"
        print(f"{name:<12} {compiled_time:>9.3f}s {python_time:>9.3f}s "
              f"{python_time / compiled_time:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
