"""Timing comparison of the compiled and plain-numpy kernel builds.

Builds a mid-run step functional on a uniform mesh, then times each kernel
pair on identical inputs: full objective evaluation, cursor refresh, one
coordinate sweep over all unknowns, one dense line search, and the
stationarity probe. The compiled builds are warmed up before timing so JIT
compilation is excluded.

Usage:
    python3 benchmarks/bench_kernels.py --n 32 --repeats 20
"""
import argparse
import time

import numpy as np

from viscontact import kernels
from viscontact.harness import build_scenario_problem, scenario
from viscontact.stepper import make_Lj, run


def build_state(scenario_name, n):
    sc = scenario(scenario_name, n_per_side=n, n_steps=4)
    problem = build_scenario_problem(sc)
    hist = run(problem)
    fn = make_Lj(problem, 3, hist.displacements[2])
    x0 = hist.velocities[2].copy()
    return fn, x0


def make_calls(fn, x0, rng):
    """One zero-argument closure per (kernel, family), on shared inputs."""
    p = fn.problem
    ta, sa, tb, sb = (p.quad.dofx_a, p.quad.shape_a,
                      p.quad.dofx_b, p.quad.shape_b)
    ids = np.arange(p.n_free, dtype=np.int64)
    direction = rng.standard_normal(p.n_free)
    ax0 = np.empty(p.n_free)
    vx0 = np.empty(p.quad.n_points)
    kernels.refresh_state_py(x0, fn.b, p.A_indptr, p.A_indices, p.A_data,
                             ta, sa, tb, sb, fn.gtw, fn.cexp, fn.clin,
                             ax0, vx0)

    calls = {}
    for family in ("py", "nb"):
        if family == "nb" and not kernels.NUMBA_AVAILABLE:
            continue
        value_at = getattr(kernels, f"value_at_{family}")
        refresh = getattr(kernels, f"refresh_state_{family}")
        sweep = getattr(kernels, f"sweep_coords_{family}")
        line = getattr(kernels, f"line_dense_{family}")
        probe = getattr(kernels, f"probe_gap_{family}")

        def call_value(value_at=value_at):
            return value_at(x0, fn.b, p.A_indptr, p.A_indices, p.A_data,
                            ta, sa, tb, sb, fn.gtw, fn.cexp, fn.clin)

        def call_refresh(refresh=refresh):
            ax = np.empty(p.n_free)
            vx = np.empty(p.quad.n_points)
            return refresh(x0, fn.b, p.A_indptr, p.A_indices, p.A_data,
                           ta, sa, tb, sb, fn.gtw, fn.cexp, fn.clin, ax, vx)

        def call_sweep(sweep=sweep):
            x = x0.copy()
            ax = ax0.copy()
            vx = vx0.copy()
            return sweep(ids, x, ax, vx, fn.b, p.A_indptr, p.A_indices,
                         p.A_data, p.A_diag, p.qp_ptr, p.qp_idx, p.qp_shp,
                         fn.gtw, fn.cexp, fn.clin, 2.0, 48, 60)

        def call_line(line=line):
            x = x0.copy()
            ax = ax0.copy()
            vx = vx0.copy()
            return line(direction, x, ax, vx, fn.b, p.A_indptr, p.A_indices,
                        p.A_data, ta, sa, tb, sb, fn.gtw, fn.cexp, fn.clin,
                        2.0, 48, 60)

        def call_probe(probe=probe):
            return probe(1e-5, ax0, fn.b, p.A_diag, vx0,
                         p.qp_ptr, p.qp_idx, p.qp_shp,
                         fn.gtw, fn.cexp, fn.clin)

        calls[("value_at", family)] = call_value
        calls[("refresh_state", family)] = call_refresh
        calls[("sweep_coords", family)] = call_sweep
        calls[("line_dense", family)] = call_line
        calls[("probe_gap", family)] = call_probe
    return calls


def time_call(call, repeats, warmup=3):
    for _ in range(warmup):
        call()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        call()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare compiled and plain-numpy solver kernels")
    parser.add_argument("--scenario", default="base")
    parser.add_argument("--n", type=int, default=32,
                        help="mesh subdivisions per side (default 32)")
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed repetitions per kernel (default 20)")
    args = parser.parse_args(argv)

    fn, x0 = build_state(args.scenario, args.n)
    rng = np.random.default_rng(20240817)
    calls = make_calls(fn, x0, rng)

    print(f"scenario={args.scenario} n={args.n} "
          f"unknowns={fn.problem.n_free} "
          f"numba={'yes' if kernels.NUMBA_AVAILABLE else 'no'}")
    print(f"{'kernel':>14s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    names = ["value_at", "refresh_state", "sweep_coords", "line_dense",
             "probe_gap"]
    for name in names:
        t_py = time_call(calls[(name, "py")], args.repeats)
        if (name, "nb") in calls:
            t_nb = time_call(calls[(name, "nb")], args.repeats)
            print(f"{name:>14s} {t_py * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us "
                  f"{t_py / t_nb:>8.1f}x")
        else:
            print(f"{name:>14s} {t_py * 1e6:>10.1f}us {'-':>12s} {'-':>9s}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
