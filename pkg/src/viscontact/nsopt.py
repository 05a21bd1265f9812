"""Derivative-free minimization of nonsmooth convex-dominated functionals.

Powell's conjugate direction method with golden-section line searches. The
objective only ever needs point evaluations, which is what makes the method
usable on functionals with a nondifferentiable boundary term.

Objectives can be plain callables on vectors. An objective may instead
expose ``open_cursor(x0)`` returning a cursor object that performs its own
line searches against cached internal structure; the per-step functionals in
:mod:`viscontact.stepper` use this to avoid a full re-evaluation per trial
point. A cursor provides

    n          dimension
    x          current point (ndarray)
    value      current objective value
    f_evals    cumulative evaluation count
    line_min(d)        line search along d (int coordinate or ndarray),
                       commits the step, returns the decrease (>= 0)
    value_at(y)        fresh evaluation at y, no commit
    refresh()          recompute value exactly at the current point

``powell_minimize`` drives either kind through the same loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0      # 0.618...
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0     # 0.382...


@dataclass(frozen=True)
class LineSearchConfig:
    """Bracketing and golden-section parameters."""

    growth: float = 2.0          # bracket expansion factor
    gs_tol: float = 1e-10        # final bracket width relative to initial
    max_expansions: int = 60


@dataclass(frozen=True)
class PowellConfig:
    tol_abs: float = 1e-10
    tol_rel: float = 1e-8
    max_outer_iters: int = 400
    restart_every: Optional[int] = None   # None: reset directions every n sweeps
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)


@dataclass
class MinimizeReport:
    """Outcome of a minimization run.

    ``argmin`` is the best point seen (iterates are monotone, so it is the
    final one). ``converged`` means an outer sweep decreased the value by
    less than tol_abs + tol_rel * |value|.
    """

    argmin: np.ndarray
    value: float
    outer_iters: int
    f_evals: int
    converged: bool
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LineSearchResult:
    step: float
    bracketed: bool


def _gs_iterations(gs_tol: float) -> int:
    return max(1, int(math.ceil(math.log(gs_tol) / math.log(INV_PHI))))


def minimize_scalar_on_line(phi: Callable[[float], float], f0: float, scale: float,
                            cfg: LineSearchConfig):
    """Bracket and golden-section minimize phi with phi(0) = f0 known.

    The bracket starts as [-scale, scale] and whichever end undercuts the
    interior is pushed out by the growth factor until the profile turns
    back up. Returns (t, phi(t), evals, bracketed); on bracketing failure
    t = 0 is returned with the flag cleared. The result never increases
    the objective: if the refined point is no better than t = 0, t = 0
    wins.
    """
    evals = 0
    lo, hi = -scale, scale
    f_lo = phi(lo)
    f_hi = phi(hi)
    evals += 2

    if f_hi < f0 and f_hi <= f_lo:
        t_prev, t_cur, f_cur = 0.0, hi, f_hi
        grew = 0
        while True:
            t_next = t_cur * cfg.growth
            f_next = phi(t_next)
            evals += 1
            if f_next >= f_cur:
                lo, hi = t_prev, t_next
                break
            t_prev, t_cur, f_cur = t_cur, t_next, f_next
            grew += 1
            if grew >= cfg.max_expansions:
                return 0.0, f0, evals, False
    elif f_lo < f0:
        t_prev, t_cur, f_cur = 0.0, lo, f_lo
        grew = 0
        while True:
            t_next = t_cur * cfg.growth
            f_next = phi(t_next)
            evals += 1
            if f_next >= f_cur:
                lo, hi = t_next, t_prev
                break
            t_prev, t_cur, f_cur = t_cur, t_next, f_next
            grew += 1
            if grew >= cfg.max_expansions:
                return 0.0, f0, evals, False

    a, b = lo, hi
    c = a + INV_PHI2 * (b - a)
    d = a + INV_PHI * (b - a)
    fc = phi(c)
    fd = phi(d)
    evals += 2
    for _ in range(_gs_iterations(cfg.gs_tol)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = a + INV_PHI2 * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = phi(d)
        evals += 1
    if fc <= fd:
        t, f_t = c, fc
    else:
        t, f_t = d, fd
    if f_t >= f0:
        return 0.0, f0, evals, True
    return t, f_t, evals, True


def golden_line_search(objective: Callable[[np.ndarray], float], x: np.ndarray,
                       d: np.ndarray, cfg: Optional[LineSearchConfig] = None) -> LineSearchResult:
    """Line search min_t objective(x + t d) by bracketing plus golden section.

    The initial bracket is [-1, 1] scaled by 1 / |d|. Raises on a zero
    direction; returns step 0 with ``bracketed`` cleared when the doubling
    expansion runs out before the profile turns upward.
    """
    cfg = cfg or LineSearchConfig()
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    nd = float(np.linalg.norm(d))
    if nd == 0.0:
        raise ValueError("line search direction must be nonzero")
    f0 = float(objective(x))
    t, _, _, ok = minimize_scalar_on_line(
        lambda t: float(objective(x + t * d)), f0, 1.0 / nd, cfg)
    return LineSearchResult(step=t, bracketed=ok)


class _BlackBoxCursor:
    """Cursor over a plain callable; every trial is a full evaluation."""

    def __init__(self, f: Callable[[np.ndarray], float], x0: np.ndarray,
                 ls_cfg: LineSearchConfig):
        self._f = f
        self._ls = ls_cfg
        self.x = np.array(x0, dtype=np.float64)
        self.n = self.x.size
        self.f_evals = 0
        self.value = self.value_at(self.x)

    def value_at(self, y: np.ndarray) -> float:
        self.f_evals += 1
        return float(self._f(y))

    def line_min(self, d: Union[int, np.ndarray]) -> float:
        if isinstance(d, (int, np.integer)):
            d_vec = np.zeros(self.n)
            d_vec[d] = 1.0
        else:
            d_vec = np.asarray(d, dtype=np.float64)
        nd = float(np.linalg.norm(d_vec))
        if nd == 0.0:
            return 0.0
        evals = 0

        def phi(t: float) -> float:
            nonlocal evals
            evals += 1
            return float(self._f(self.x + t * d_vec))

        t, f_t, _, _ = minimize_scalar_on_line(phi, self.value, 1.0 / nd, self._ls)
        self.f_evals += evals
        dec = self.value - f_t
        if t != 0.0:
            self.x = self.x + t * d_vec
            self.value = f_t
        return max(dec, 0.0)

    def refresh(self) -> None:
        self.value = self.value_at(self.x)


def _open_cursor(objective, x0: np.ndarray, cfg: PowellConfig):
    if hasattr(objective, "open_cursor"):
        return objective.open_cursor(np.asarray(x0, dtype=np.float64), cfg.line_search)
    return _BlackBoxCursor(objective, x0, cfg.line_search)


def powell_minimize(objective, x0: np.ndarray,
                    cfg: Optional[PowellConfig] = None) -> MinimizeReport:
    """Minimize by Powell's conjugate direction method.

    Each outer sweep line-searches every direction in the current set, then
    considers replacing the direction of largest single decrease with the
    net sweep displacement, accepting via the standard extrapolation test.
    The direction set resets to the coordinate basis every ``restart_every``
    sweeps (the dimension by default). Deterministic: identical inputs give
    identical reports.
    """
    cfg = cfg or PowellConfig()
    cursor = _open_cursor(objective, x0, cfg)
    n = cursor.n
    if not math.isfinite(cursor.value):
        raise ValueError(f"objective is not finite at the start point: {cursor.value}")
    restart_every = cfg.restart_every if cfg.restart_every is not None else n
    if restart_every <= 0:
        raise ValueError("restart_every must be positive")

    # The direction set is the coordinate block followed by the replacement
    # directions, in insertion order. Dropping the direction of largest
    # decrease and appending the sweep displacement preserves that shape, so
    # the whole coordinate block can go through one batched call when the
    # cursor supports it.
    coord_ids = np.arange(n, dtype=np.int64)
    dense_dirs: list = []
    has_block = hasattr(cursor, "line_min_block")
    sweep_values: list = []
    replacements = 0
    restarts = 0
    converged = False
    sweeps = 0

    while sweeps < cfg.max_outer_iters:
        sweeps += 1
        f_start = cursor.value
        x_start = cursor.x.copy()
        best_dec = 0.0
        best_pos = -1
        # Sum the per-direction decreases for the convergence measure: a
        # difference of two full evaluations drowns in assembly rounding
        # long before the per-search decreases do.
        sweep_dec = 0.0
        if has_block and coord_ids.size > 0:
            blk_total, blk_best, blk_pos, _ = cursor.line_min_block(coord_ids)
            sweep_dec += blk_total
            if blk_best > best_dec:
                best_dec = blk_best
                best_pos = blk_pos
        else:
            for pos in range(coord_ids.size):
                dec = cursor.line_min(int(coord_ids[pos]))
                sweep_dec += dec
                if dec > best_dec:
                    best_dec = dec
                    best_pos = pos
        for k, d in enumerate(dense_dirs):
            dec = cursor.line_min(d)
            sweep_dec += dec
            if dec > best_dec:
                best_dec = dec
                best_pos = coord_ids.size + k
        cursor.refresh()
        f_end = cursor.value
        if not math.isfinite(f_end):
            raise ValueError(f"objective became non-finite during sweep {sweeps}")
        sweep_values.append(f_end)
        if sweep_dec <= cfg.tol_abs + cfg.tol_rel * abs(f_end):
            converged = True
            break

        d_new = cursor.x - x_start
        if best_pos >= 0 and float(np.linalg.norm(d_new)) > 0.0:
            f_ext = cursor.value_at(2.0 * cursor.x - x_start)
            if f_ext < f_start:
                test = (2.0 * (f_start - 2.0 * f_end + f_ext)
                        * (f_start - f_end - best_dec) ** 2
                        - best_dec * (f_start - f_ext) ** 2)
                if test < 0.0:
                    cursor.line_min(d_new)
                    if best_pos < coord_ids.size:
                        coord_ids = np.delete(coord_ids, best_pos)
                    else:
                        dense_dirs.pop(best_pos - coord_ids.size)
                    dense_dirs.append(d_new)
                    replacements += 1

        if sweeps % restart_every == 0:
            coord_ids = np.arange(n, dtype=np.int64)
            dense_dirs = []
            restarts += 1

    cursor.refresh()
    return MinimizeReport(
        argmin=cursor.x.copy(),
        value=cursor.value,
        outer_iters=sweeps,
        f_evals=cursor.f_evals,
        converged=converged,
        metadata={
            "sweep_values": sweep_values,
            "replacements": replacements,
            "restarts": restarts,
        },
    )


def stationarity_gap(objective, x: np.ndarray, h_probe: float) -> float:
    """Largest descent rate over signed coordinate probes of size h_probe.

    max over 2n probes of (f(x) - f(x + h e)) / h. Near a minimizer of a
    smooth function this is about -h/2 times the diagonal curvature, so
    values at or below O(h) certify approximate coordinate-wise
    stationarity; a markedly positive value exhibits a descent direction.
    """
    if h_probe <= 0.0:
        raise ValueError("h_probe must be positive")
    if hasattr(objective, "probe_gap"):
        return float(objective.probe_gap(np.asarray(x, dtype=np.float64), h_probe))
    x = np.asarray(x, dtype=np.float64)
    f0 = float(objective(x))
    gap = -math.inf
    e = np.zeros_like(x)
    for i in range(x.size):
        for s in (h_probe, -h_probe):
            e[i] = s
            gap = max(gap, (f0 - float(objective(x + e))) / h_probe)
            e[i] = 0.0
    return gap
