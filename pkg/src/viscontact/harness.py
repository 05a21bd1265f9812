"""Experiment driver: named scenarios, convergence sweeps, artifacts.

The five scenarios share one material (phi = xi = 2, eta = lam = 4, T = 1)
and differ in contact law and volume/traction loads. Sweeps halve one
resolution axis against a fixed finer reference and report relative
V-norm errors of the final-time velocity with observed orders.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import io as vio
from .fem import LoadData, MaterialParams, contact_trace, v_norm, v_norm_full
from .laws import ContactLaw, catalog
from .mesh import Mesh, build_uniform, prolongate
from .nsopt import PowellConfig
from .stepper import DiscreteProblem, StateHistory, TimeGrid, build_problem, run

#: loads (f0, fN) per scenario name; laws come from the law catalog
_SCENARIO_LOADS = {
    "base": ((-2.5, -0.5), (0.0, 0.0)),
    "stiff_gnu": ((-2.5, -0.5), (0.0, 0.0)),
    "reversed_f0": ((2.5, -0.5), (0.0, 0.0)),
    "greased": ((-2.5, -0.5), (0.0, 0.0)),
    "convergence": ((-1.0, -0.4), (-0.2, -0.2)),
}

SCENARIO_NAMES = tuple(_SCENARIO_LOADS)

#: config for the deep solves of the convergence sweeps; the frequent
#: resets keep the replacement-direction set short so sweeps stay near
#: matrix-product cost even when a cold start needs thousands of them
SWEEP_CONFIG = PowellConfig(max_outer_iters=3000, restart_every=50)


@dataclass(frozen=True)
class Scenario:
    """A named experiment: material, law, loads, resolution."""

    name: str
    material: MaterialParams
    law: ContactLaw
    f0: tuple
    fN: tuple
    n_per_side: int = 32
    n_steps: int = 32

    @property
    def loads(self) -> LoadData:
        return LoadData.constant(self.f0, self.fN)


def scenario(name: str, n_per_side: int = 32, n_steps: int = 32,
             material: Optional[MaterialParams] = None,
             law: Optional[ContactLaw] = None,
             f0: Optional[tuple] = None, fN: Optional[tuple] = None) -> Scenario:
    """Look up a scenario; keyword arguments override catalog entries."""
    if name not in _SCENARIO_LOADS:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(_SCENARIO_LOADS)}")
    f0_cat, fN_cat = _SCENARIO_LOADS[name]
    return Scenario(
        name=name,
        material=material or MaterialParams(phi=2.0, xi=2.0, eta=4.0, lam=4.0, T=1.0),
        law=law or catalog(name),
        f0=tuple(f0 if f0 is not None else f0_cat),
        fN=tuple(fN if fN is not None else fN_cat),
        n_per_side=n_per_side,
        n_steps=n_steps,
    )


def build_scenario_problem(s: Scenario) -> DiscreteProblem:
    mesh = build_uniform(s.n_per_side)
    grid = TimeGrid(T=s.material.T, N=s.n_steps)
    return build_problem(mesh, s.material, s.law, s.loads, grid)


@dataclass
class ScenarioResult:
    scenario: Scenario
    problem: DiscreteProblem
    history: StateHistory
    artifacts: dict


def run_scenario(s: Scenario, out_dir: Optional[str] = None,
                 cfg: Optional[PowellConfig] = None) -> ScenarioResult:
    """Run a scenario; write the final deformed mesh and contact data."""
    problem = build_scenario_problem(s)
    history = run(problem, cfg or PowellConfig())
    artifacts = {}
    if out_dir is not None:
        vio.ensure_dir(out_dir)
        d_full = problem.dofmap.scatter(history.final_displacement()).reshape(-1, 2)
        v_full = problem.dofmap.scatter(history.final_velocity()).reshape(-1, 2)
        vtk_path = os.path.join(out_dir, f"{s.name}_final.vtk")
        vio.write_vtk(vtk_path, problem.mesh, displacement=d_full,
                      point_vectors={"displacement": d_full, "velocity": v_full},
                      title=f"{s.name} at final time")
        artifacts["vtk"] = vtk_path
        contact_path = os.path.join(out_dir, f"{s.name}_contact.csv")
        artifacts["contact_csv"] = write_contact_forces(contact_path, problem, history)
        state_path = os.path.join(out_dir, f"{s.name}_state.csv")
        vio.write_state_csv(state_path, problem.mesh, d_full, v_full)
        artifacts["state_csv"] = state_path
    return ScenarioResult(scenario=s, problem=problem, history=history,
                          artifacts=artifacts)


def write_contact_forces(path: str, problem: DiscreteProblem,
                         history: StateHistory) -> str:
    """Per contact quadrature point: position, penetration, law forces.

    The normal pressure is the compliance bound at the final displacement
    and the friction bound is its tangential counterpart; the last column
    is the tangential velocity at final time.
    """
    quad = problem.quad
    disp = contact_trace(quad, history.final_displacement())
    vel = contact_trace(quad, history.final_velocity())
    law = problem.law
    return vio.write_contact_csv(path, {
        "x": quad.x,
        "penetration": disp.u_nu,
        "normal_pressure": np.asarray(law.g_nu(quad.x, disp.u_nu)),
        "friction_bound": np.asarray(law.g_tau(quad.x, disp.u_nu)),
        "v_tau_x": vel.u_tau[:, 0],
    })


def write_history_series(problem: DiscreteProblem, history: StateHistory,
                         out_dir: str, basename: str, every: int = 1) -> list:
    """VTK snapshot per selected time node (displaced mesh plus fields)."""
    vio.ensure_dir(out_dir)
    paths = []
    for j in range(0, history.grid.N + 1, every):
        d_full = problem.dofmap.scatter(history.displacements[j]).reshape(-1, 2)
        if j == 0:
            v_full = np.zeros_like(d_full)
        else:
            v_full = problem.dofmap.scatter(history.velocity_at(j)).reshape(-1, 2)
        path = os.path.join(out_dir, f"{basename}_{j:04d}.vtk")
        vio.write_vtk(path, problem.mesh, displacement=d_full,
                      point_vectors={"displacement": d_full, "velocity": v_full},
                      title=f"{basename} node {j}")
        paths.append(path)
    return paths


@dataclass
class ConvergenceReport:
    """Error table of one sweep.

    ``levels`` rows are (resolution, relative error, observed order), the
    order being log2 of the error ratio between successive halvings (None
    on the first row). Both reference velocity norms are reported since
    either scaling may be wanted downstream.
    """

    axis: str
    levels: list
    reference: float
    ref_norm_final: float
    ref_norm_max: float

    @property
    def errors(self) -> list:
        return [row[1] for row in self.levels]

    @property
    def resolutions(self) -> list:
        return [row[0] for row in self.levels]

    def lsq_slope(self) -> float:
        if any(e <= 0.0 for e in self.errors):
            raise ValueError("slope undefined: a level has zero error "
                             "(was the reference resolution swept?)")
        return vio.least_squares_slope(
            [math.log2(r) for r in self.resolutions],
            [math.log2(e) for e in self.errors])


def _orders(resolutions: Sequence[float], errors: Sequence[float]) -> list:
    rows = []
    for idx, (res, err) in enumerate(zip(resolutions, errors)):
        if idx == 0 or err == 0.0 or errors[idx - 1] == 0.0:
            rows.append((res, err, None))
        else:
            ratio = math.log2(resolutions[idx - 1] / res)
            rows.append((res, err, math.log2(errors[idx - 1] / err) / ratio))
    return rows


def _as_steps(T: float, k: float) -> int:
    N = round(T / k)
    if N < 1 or abs(N * k - T) > 1e-9 * T:
        raise ValueError(f"time step {k} does not divide the horizon {T}")
    return N


def time_sweep(h_fixed: float = 1.0 / 32.0,
               k_levels: Sequence[float] = (1 / 2, 1 / 4, 1 / 8, 1 / 16),
               k_ref: float = 1.0 / 64.0,
               scenario_name: str = "convergence",
               cfg: Optional[PowellConfig] = None,
               max_over_steps: bool = False) -> ConvergenceReport:
    """Halve the time step on a fixed mesh against a finer-in-time reference.

    Errors compare final-time velocities on the identical mesh, so DOF
    vectors subtract directly. ``max_over_steps`` switches to the worst
    relative error over the level's time nodes.
    """
    cfg = cfg or SWEEP_CONFIG
    s = scenario(scenario_name)
    n = round(1.0 / h_fixed)
    if abs(n * h_fixed - 1.0) > 1e-9:
        raise ValueError(f"mesh size {h_fixed} is not the inverse of an integer")
    for k in k_levels:
        ratio = k / k_ref
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(f"level step {k} is not a multiple of the reference {k_ref}")

    mesh = build_uniform(n)
    T = s.material.T
    N_ref = _as_steps(T, k_ref)
    ref_problem = build_problem(mesh, s.material, s.law, s.loads,
                                TimeGrid(T=T, N=N_ref))
    ref_history = run(ref_problem, cfg)
    dofmap = ref_problem.dofmap
    ref_norms = [v_norm(mesh, dofmap, ref_history.velocity_at(j))
                 for j in range(1, N_ref + 1)]
    ref_norm_final = ref_norms[-1]
    ref_norm_max = max(ref_norms)

    errors = []
    for k in k_levels:
        N = _as_steps(T, k)
        problem = build_problem(mesh, s.material, s.law, s.loads, TimeGrid(T=T, N=N))
        history = run(problem, cfg)
        stride = N_ref // N
        if max_over_steps:
            err = max(
                v_norm(mesh, dofmap, history.velocity_at(j)
                       - ref_history.velocity_at(j * stride))
                / ref_norms[j * stride - 1]
                for j in range(1, N + 1))
        else:
            err = v_norm(mesh, dofmap, history.final_velocity()
                         - ref_history.final_velocity()) / ref_norm_final
        errors.append(err)

    return ConvergenceReport(axis="time", levels=_orders(list(k_levels), errors),
                             reference=k_ref, ref_norm_final=ref_norm_final,
                             ref_norm_max=ref_norm_max)


def space_sweep(k_fixed: float = 1.0 / 64.0,
                h_levels: Sequence[float] = (1 / 2, 1 / 4, 1 / 8, 1 / 16),
                h_ref: float = 1.0 / 64.0,
                scenario_name: str = "convergence",
                cfg: Optional[PowellConfig] = None,
                max_over_steps: bool = False) -> ConvergenceReport:
    """Halve the mesh size at a fixed time step against a finer mesh.

    Coarse final-time velocities are prolongated to the reference mesh and
    compared there in the relative V-norm.
    """
    cfg = cfg or SWEEP_CONFIG
    s = scenario(scenario_name)
    n_ref = round(1.0 / h_ref)
    n_levels = []
    for h in h_levels:
        n = round(1.0 / h)
        if abs(n * h - 1.0) > 1e-9:
            raise ValueError(f"mesh size {h} is not the inverse of an integer")
        if n_ref % n != 0:
            raise ValueError(f"level mesh 1/{n} does not nest in the reference 1/{n_ref}")
        n_levels.append(n)

    T = s.material.T
    N = _as_steps(T, k_fixed)
    mesh_ref = build_uniform(n_ref)
    ref_problem = build_problem(mesh_ref, s.material, s.law, s.loads,
                                TimeGrid(T=T, N=N))
    ref_history = run(ref_problem, cfg)
    ref_dofmap = ref_problem.dofmap
    ref_norms = [v_norm(mesh_ref, ref_dofmap, ref_history.velocity_at(j))
                 for j in range(1, N + 1)]
    ref_norm_final = ref_norms[-1]
    ref_norm_max = max(ref_norms)
    ref_final_full = ref_dofmap.scatter(ref_history.final_velocity()).reshape(-1, 2)

    errors = []
    for n in n_levels:
        mesh = build_uniform(n)
        problem = build_problem(mesh, s.material, s.law, s.loads, TimeGrid(T=T, N=N))
        history = run(problem, cfg)
        if max_over_steps:
            err = 0.0
            for j in range(1, N + 1):
                lvl_full = problem.dofmap.scatter(history.velocity_at(j)).reshape(-1, 2)
                lifted = prolongate(lvl_full, mesh, mesh_ref)
                ref_full = ref_dofmap.scatter(ref_history.velocity_at(j)).reshape(-1, 2)
                err = max(err, v_norm_full(mesh_ref, (lifted - ref_full).ravel())
                          / ref_norms[j - 1])
        else:
            lvl_full = problem.dofmap.scatter(history.final_velocity()).reshape(-1, 2)
            lifted = prolongate(lvl_full, mesh, mesh_ref)
            err = v_norm_full(mesh_ref, (lifted - ref_final_full).ravel()) / ref_norm_final
        errors.append(err)

    h_vals = [1.0 / n for n in n_levels]
    return ConvergenceReport(axis="space", levels=_orders(h_vals, errors),
                             reference=h_ref, ref_norm_final=ref_norm_final,
                             ref_norm_max=ref_norm_max)


def emit_loglog(report: ConvergenceReport, out_dir: str,
                basename: Optional[str] = None) -> dict:
    """Write a sweep report as CSV, plain-text table, and log2 plot data."""
    if not report.levels:
        raise ValueError("cannot emit an empty report")
    vio.ensure_dir(out_dir)
    base = basename or f"{report.axis}_sweep"
    paths = {}

    csv_path = os.path.join(out_dir, f"{base}.csv")
    label = "k" if report.axis == "time" else "h"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow([label, "error", "order"])
        for res, err, order in report.levels:
            writer.writerow([repr(float(res)), repr(float(err)),
                             "" if order is None else repr(float(order))])
    paths["csv"] = csv_path

    table_path = os.path.join(out_dir, f"{base}.txt")
    vio.write_report_table(table_path, report.axis, report.levels,
                           repr(float(report.reference)),
                           report.ref_norm_final, report.ref_norm_max)
    paths["table"] = table_path

    # log2 of a zero error is undefined, so the plot file is skipped for
    # degenerate sweeps that include the reference resolution itself
    if all(e > 0.0 for e in report.errors):
        dat_path = os.path.join(out_dir, f"{base}.dat")
        vio.write_loglog(dat_path, report.resolutions, report.errors)
        paths["loglog"] = dat_path
    return paths
