"""End-to-end acceptance gate for the contact solver.

Each test prints one PASS/FAIL line tagged [acceptance] and then asserts,
so a plain ``pytest -v`` run shows the verdict for every criterion:

  1. first-order convergence in the time step on the fixed desk protocol
  2. first-order convergence in the mesh size on the fixed desk protocol
  3. frictionless runs reproduce the direct SPD linear solve per step
  4. the minimizer solves its reference problems and decreases monotonically
  5. every accepted time step of every scenario carries a stationarity
     certificate within tolerance
  6. structural facts about the assembled operators and loads
  7. qualitative physics across the scenario catalog variants
  8. zero data reproduces exact rest bitwise

The heavy runs (two refinement sweeps, five scenario histories) are shared
module-scoped fixtures, so the whole gate costs a few minutes once.
"""
import time

import numpy as np
import pytest
import scipy.linalg

from viscontact.fem import (
    LoadData,
    MaterialParams,
    assemble_elasticity,
    assemble_load,
    assemble_load_full,
    assemble_operator_full,
    assemble_viscosity,
    build_dofmap,
    contact_trace,
    v_norm,
)
from viscontact.harness import (
    SCENARIO_NAMES,
    build_scenario_problem,
    run_scenario,
    scenario,
    space_sweep,
    time_sweep,
)
from viscontact.laws import NORM, BoundFunction, ContactLaw
from viscontact.mesh import build_uniform
from viscontact.nsopt import PowellConfig, powell_minimize
from viscontact.stepper import run


def _report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[acceptance] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def timed_time_report():
    t0 = time.perf_counter()
    rep = time_sweep()
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def timed_space_report():
    t0 = time.perf_counter()
    rep = space_sweep()
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def scenario_results():
    return {name: run_scenario(scenario(name)) for name in SCENARIO_NAMES}


def _max_penetration(result):
    quad = result.problem.quad
    worst = 0.0
    for d in result.history.displacements:
        worst = max(worst, float(contact_trace(quad, d).u_nu.max()))
    return worst


def test_criterion_1_time_convergence(timed_time_report, capsys):
    rep, wall = timed_time_report
    errs = rep.errors
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    slope = rep.lsq_slope()
    ok = decreasing and slope >= 0.8 and wall <= 600.0
    detail = (f"errors={['%.3e' % e for e in errs]} slope={slope:.4f} "
              f"wall={wall:.1f}s (limit 600s)")
    _report(capsys, "time-axis first-order convergence", ok, detail)


def test_criterion_2_space_convergence(timed_space_report, capsys):
    rep, wall = timed_space_report
    errs = rep.errors
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    slope = rep.lsq_slope()
    ok = decreasing and slope >= 0.7 and wall <= 1200.0
    detail = (f"errors={['%.3e' % e for e in errs]} slope={slope:.4f} "
              f"wall={wall:.1f}s (limit 1200s)")
    _report(capsys, "space-axis first-order convergence", ok, detail)


def test_criterion_3_frictionless_matches_linear_solve(capsys):
    zero_bound = BoundFunction(slope=0.0, eta_cap=0.1)
    law = ContactLaw(g_nu=zero_bound, g_tau=zero_bound, j_tau=NORM)
    s = scenario("base", n_per_side=16, n_steps=16, law=law)
    problem = build_scenario_problem(s)
    hist = run(problem, PowellConfig(tol_abs=0.0, tol_rel=0.0,
                                     max_outer_iters=1200))
    cho = scipy.linalg.cho_factor(problem.A.toarray())
    d_prev = np.zeros(problem.n_free)
    worst = 0.0
    for j in range(1, problem.grid.N + 1):
        rhs = problem.load_vector(j) - problem.B @ d_prev
        v_ref = scipy.linalg.cho_solve(cho, rhs)
        err = v_norm(problem.mesh, problem.dofmap, hist.velocity_at(j) - v_ref)
        ref = v_norm(problem.mesh, problem.dofmap, v_ref)
        worst = max(worst, err / ref)
        d_prev = d_prev + problem.grid.k * v_ref
    ok = worst <= 1e-6
    _report(capsys, "frictionless equals direct solve", ok,
            f"worst relative step error {worst:.3e} (limit 1e-06)")


def test_criterion_4_optimizer_reference_problems(capsys):
    reports = []

    r1 = powell_minimize(lambda x: (x[0] - 1.0) ** 2 + (x[1] + 2.0) ** 2,
                         np.zeros(2))
    reports.append(r1)
    e1 = float(np.linalg.norm(r1.argmin - np.array([1.0, -2.0])))

    def kinked(x):
        t = float(np.asarray(x).reshape(()))
        return abs(t) + 0.5 * (t - 1.0) ** 2

    r2 = powell_minimize(kinked, np.array([2.0]))
    reports.append(r2)
    grid = np.arange(-3.0, 3.0, 1e-6)
    t_grid = grid[np.argmin(np.abs(grid) + 0.5 * (grid - 1.0) ** 2)]
    e2 = abs(float(r2.argmin[0]) - float(t_grid))

    def separable(x):
        return (abs(x[0]) + abs(x[1])
                + 0.5 * ((x[0] - 1.0) ** 2 + (x[1] - 1.0) ** 2))

    r3 = powell_minimize(separable, np.array([-1.0, 2.0]))
    reports.append(r3)
    e3 = float(np.max(np.abs(r3.argmin - np.array([t_grid, t_grid]))))

    monotone = all(
        all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        for vals in (r.metadata["sweep_values"] for r in reports))
    ok = e1 <= 1e-8 and e2 <= 1e-4 and e3 <= 1e-4 and monotone
    detail = (f"quadratic err {e1:.2e} (limit 1e-08), kinked err {e2:.2e}, "
              f"separable err {e3:.2e} (limit 1e-04), monotone={monotone}")
    _report(capsys, "optimizer reference problems", ok, detail)


def test_criterion_5_stationarity_certificates(scenario_results, capsys):
    worst_ratio = 0.0
    steps = 0
    for res in scenario_results.values():
        for rep in res.history.reports:
            gap = rep.metadata["stationarity_gap"]
            bound = 1e-4 * (1.0 + abs(rep.value))
            worst_ratio = max(worst_ratio, gap / bound)
            steps += 1
    ok = worst_ratio <= 1.0 and steps == 5 * 32
    _report(capsys, "stationarity certificates", ok,
            f"{steps} steps, worst gap/bound ratio {worst_ratio:.4f}")


def test_criterion_6_operator_structure(capsys):
    mesh = build_uniform(16)
    dofmap = build_dofmap(mesh)
    params = MaterialParams(phi=2.0, xi=2.0, eta=4.0, lam=4.0, T=1.0)
    A = assemble_viscosity(mesh, params, dofmap)
    B = assemble_elasticity(mesh, params, dofmap)
    sym = max(np.abs(A - A.T).max(), np.abs(B - B.T).max())
    try:
        scipy.linalg.cholesky(A.toarray())
        scipy.linalg.cholesky(B.toarray())
        spd = True
    except scipy.linalg.LinAlgError:
        spd = False

    # horizontal shear u = (x, 0): both quadratic forms have closed values
    u = np.zeros(2 * mesh.n_nodes)
    u[0::2] = mesh.nodes[:, 0]
    ea = u @ (assemble_operator_full(mesh, params.phi, params.xi) @ u)
    eb = u @ (assemble_operator_full(mesh, params.eta, params.lam) @ u)

    # hats sum to one: constant loads integrate to f0 |domain| + fN |Neumann|
    loads = LoadData.constant([-2.5, -0.5], [0.3, -0.7])
    full = assemble_load_full(mesh, loads, 0.5)
    e_load = max(abs(float(np.sum(full[0::2])) - (-2.5 + 0.3 * 2.0)),
                 abs(float(np.sum(full[1::2])) - (-0.5 - 0.7 * 2.0)))
    reduced = assemble_load(mesh, loads, 0.5, dofmap)
    consistent = np.array_equal(reduced, full[dofmap.free_dofs])

    e_ident = max(abs(ea - 6.0), abs(eb - 12.0))
    ok = (sym <= 1e-12 and spd and consistent
          and e_ident <= 1e-12 and e_load <= 1e-12)
    detail = (f"symmetry {sym:.2e}, cholesky={spd}, energy identity err "
              f"{e_ident:.2e}, load partition err {e_load:.2e} (limits 1e-12)")
    _report(capsys, "operator structure", ok, detail)


def test_criterion_7_scenario_differentials(scenario_results, capsys):
    pen_base = _max_penetration(scenario_results["base"])
    pen_stiff = _max_penetration(scenario_results["stiff_gnu"])

    greased = scenario_results["greased"]
    quad = greased.problem.quad
    disp = contact_trace(quad, greased.history.final_displacement())
    bounds = np.asarray(greased.problem.law.g_tau(quad.x, disp.u_nu))
    right = bounds[quad.x > 0.5]
    left = bounds[quad.x <= 0.5]

    def mean_ux(res):
        full = res.problem.dofmap.scatter(res.history.final_displacement())
        return float(np.mean(full[0::2]))

    ux_rev = mean_ux(scenario_results["reversed_f0"])
    ux_base = mean_ux(scenario_results["base"])

    ok = (pen_stiff < pen_base
          and right.size > 0 and np.all(right == 0.0)
          and np.any(left > 0.0)
          and ux_rev > 0.0 and ux_base < 0.0)
    detail = (f"penetration stiff {pen_stiff:.3e} < base {pen_base:.3e}; "
              f"greased bound right-half max {right.max():.3e}; "
              f"mean u_x reversed {ux_rev:.3e} vs base {ux_base:.3e}")
    _report(capsys, "scenario differentials", ok, detail)


def test_criterion_8_zero_data_exact_rest(capsys):
    s = scenario("base", n_per_side=8, n_steps=4, f0=(0.0, 0.0),
                 fN=(0.0, 0.0))
    problem = build_scenario_problem(s)
    hist = run(problem)
    at_rest = (np.all(hist.velocities == 0.0)
               and np.all(hist.displacements == 0.0))
    immediate = all(r.converged and r.outer_iters == 1
                    for r in hist.reports)
    ok = at_rest and immediate and not hist.degraded
    _report(capsys, "zero data exact rest", ok,
            f"bitwise rest={at_rest}, immediate termination={immediate}")
