"""Hot numeric kernels: CSR products, cached line searches, probe sweeps.

Each per-step functional has the shape

    F(x) = 1/2 x . A x + b . x + sum_q gtw_q * jtau(|vx_q(x)|)

with A sparse symmetric, b the per-step linear coefficient (elastic history
minus load plus the folded-in normal compliance term, which is linear in the
velocity), and vx the x-component trace of x at the contact quadrature
points. jtau(r) = cexp * exp(-r) + clin * r. All kernels work on this folded
form through plain arrays so they compile under numba.

The kernels keep (x, A x, vx, value) as in-place state. A line search along
a coordinate touches one CSR row and at most a handful of quadrature points;
a line search along a dense direction costs one matrix product up front and
O(contact points) per trial. That is what makes thousands of Powell sweeps
affordable at reference resolutions.

Every kernel has a numba build (suffix ``_nb``) and a numpy build
(``_py``). The public unsuffixed names bind to the numba builds unless
numba is unavailable or ``VISCONTACT_PURE_NUMPY`` is set to 1/true/yes/on.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False


def _flag_disabled() -> bool:
    return os.environ.get("VISCONTACT_PURE_NUMPY", "").strip().lower() in (
        "1", "true", "yes", "on",
    )


USING_NUMBA = NUMBA_AVAILABLE and not _flag_disabled()

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


# ----------------------------------------------------------------------
# numpy builds
# ----------------------------------------------------------------------

def csr_matvec_py(indptr, indices, data, x):
    prod = data * x[indices]
    cs = np.concatenate((np.zeros(1), np.cumsum(prod)))
    return cs[indptr[1:]] - cs[indptr[:-1]]


def trace_x_py(d, t_dofa, t_shpa, t_dofb, t_shpb):
    """x-component boundary trace of a free vector at the contact points."""
    va = np.where(t_dofa >= 0, d[np.maximum(t_dofa, 0)] * t_shpa, 0.0)
    vb = np.where(t_dofb >= 0, d[np.maximum(t_dofb, 0)] * t_shpb, 0.0)
    return va + vb


def boundary_value_py(vx, gtw, cexp, clin):
    r = np.abs(vx)
    return float(np.sum(gtw * (cexp * np.exp(-r) + clin * r)))


def value_at_py(y, b, indptr, indices, data, t_dofa, t_shpa, t_dofb, t_shpb,
                gtw, cexp, clin):
    ay = csr_matvec_py(indptr, indices, data, y)
    vy = trace_x_py(y, t_dofa, t_shpa, t_dofb, t_shpb)
    return float(0.5 * np.dot(y, ay) + np.dot(b, y) + boundary_value_py(vy, gtw, cexp, clin))


def refresh_state_py(x, b, indptr, indices, data, t_dofa, t_shpa, t_dofb, t_shpb,
                     gtw, cexp, clin, ax_out, vx_out):
    ax_out[:] = csr_matvec_py(indptr, indices, data, x)
    vx_out[:] = trace_x_py(x, t_dofa, t_shpa, t_dofb, t_shpb)
    return float(0.5 * np.dot(x, ax_out) + np.dot(b, x)
                 + boundary_value_py(vx_out, gtw, cexp, clin))


def _minimize_delta_py(phi, scale, growth, gs_iters, max_expansions):
    """Bracket and golden-section minimize a delta profile with phi(0) = 0.

    Reference implementation of the search the numba kernels inline.
    Returns (t, delta, evals, bracketed); never returns a positive delta.
    """
    evals = 0
    lo, hi = -scale, scale
    f_lo = phi(lo)
    f_hi = phi(hi)
    evals += 2
    if f_hi < 0.0 and f_hi <= f_lo:
        t_prev, t_cur, f_cur = 0.0, hi, f_hi
        grew = 0
        while True:
            t_next = t_cur * growth
            f_next = phi(t_next)
            evals += 1
            if f_next >= f_cur:
                lo, hi = t_prev, t_next
                break
            t_prev, t_cur, f_cur = t_cur, t_next, f_next
            grew += 1
            if grew >= max_expansions:
                return 0.0, 0.0, evals, False
    elif f_lo < 0.0:
        t_prev, t_cur, f_cur = 0.0, lo, f_lo
        grew = 0
        while True:
            t_next = t_cur * growth
            f_next = phi(t_next)
            evals += 1
            if f_next >= f_cur:
                lo, hi = t_next, t_prev
                break
            t_prev, t_cur, f_cur = t_cur, t_next, f_next
            grew += 1
            if grew >= max_expansions:
                return 0.0, 0.0, evals, False
    a, bb_ = lo, hi
    c = a + INV_PHI2 * (bb_ - a)
    d = a + INV_PHI * (bb_ - a)
    fc = phi(c)
    fd = phi(d)
    evals += 2
    for _ in range(gs_iters):
        if fc <= fd:
            bb_, d, fd = d, c, fc
            c = a + INV_PHI2 * (bb_ - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (bb_ - a)
            fd = phi(d)
        evals += 1
    if fc <= fd:
        t, f_t = c, fc
    else:
        t, f_t = d, fd
    if f_t >= 0.0:
        return 0.0, 0.0, evals, True
    return t, f_t, evals, True


def _parabola_min_py(aa, bb):
    t = -bb / (2.0 * aa)
    delta = (aa * t + bb) * t
    if delta >= 0.0:
        return 0.0, 0.0, 1
    return t, delta, 1


def _piecewise_min_py(aa, bb, v0, qs, gw, clin, phi):
    """Exact minimizer of aa t^2 + bb t + clin * sum gw |v0 + t qs| - const.

    The restriction is a convex piecewise parabola. Candidates are the
    clipped vertex of every sign interval; a kink minimizer shows up as a
    clipped vertex of its neighbour interval.
    """
    kinks = np.sort(np.unique(-v0[qs != 0.0] / qs[qs != 0.0]))
    m = kinks.shape[0]
    if m == 0:
        return _parabola_min_py(aa, bb)
    best_t, best_delta, evals = 0.0, 0.0, 0
    for p in range(m + 1):
        if p == 0:
            rep = kinks[0] - 1.0
        elif p == m:
            rep = kinks[m - 1] + 1.0
        else:
            rep = 0.5 * (kinks[p - 1] + kinks[p])
        sgn = np.where(v0 + rep * qs >= 0.0, 1.0, -1.0)
        slope = bb + clin * float(np.sum(gw * sgn * qs))
        tv = -slope / (2.0 * aa)
        if p > 0 and tv < kinks[p - 1]:
            tv = kinks[p - 1]
        if p < m and tv > kinks[p]:
            tv = kinks[p]
        delta = phi(tv)
        evals += 1
        if delta < best_delta:
            best_t, best_delta = tv, delta
    return best_t, best_delta, evals


def line_coord_py(i, x, ax, vx, b, indptr, indices, data, diag,
                  qp_ptr, qp_idx, qp_shp, gtw, cexp, clin,
                  growth, gs_iters, max_expansions):
    aa = 0.5 * diag[i]
    bb = ax[i] + b[i]
    r0, r1 = qp_ptr[i], qp_ptr[i + 1]
    qi = qp_idx[r0:r1]
    qs = qp_shp[r0:r1]
    if r1 == r0:
        t, delta, evals = _parabola_min_py(aa, bb)
    else:
        v0 = vx[qi]
        gw = gtw[qi]
        j0 = gw * (cexp * np.exp(-np.abs(v0)) + clin * np.abs(v0))

        def phi(t):
            rn = np.abs(v0 + t * qs)
            return aa * t * t + bb * t + float(
                np.sum(gw * (cexp * np.exp(-rn) + clin * rn) - j0))

        if cexp == 0.0:
            t, delta, evals = _piecewise_min_py(aa, bb, v0, qs, gw, clin, phi)
        else:
            t, delta, evals, _ = _minimize_delta_py(phi, 1.0, growth, gs_iters,
                                                    max_expansions)
    if t != 0.0:
        x[i] += t
        lo, hi = indptr[i], indptr[i + 1]
        ax[indices[lo:hi]] += t * data[lo:hi]
        vx[qi] += t * qs
    return -delta, evals


def sweep_coords_py(ids, x, ax, vx, b, indptr, indices, data, diag,
                    qp_ptr, qp_idx, qp_shp, gtw, cexp, clin,
                    growth, gs_iters, max_expansions):
    total = 0.0
    best = 0.0
    best_pos = -1
    evals = 0
    for pos in range(ids.shape[0]):
        dec, ev = line_coord_py(ids[pos], x, ax, vx, b, indptr, indices, data,
                                diag, qp_ptr, qp_idx, qp_shp, gtw, cexp, clin,
                                growth, gs_iters, max_expansions)
        evals += ev
        total += dec
        if dec > best:
            best = dec
            best_pos = pos
    return total, best, best_pos, evals


def line_dense_py(d, x, ax, vx, b, indptr, indices, data,
                  t_dofa, t_shpa, t_dofb, t_shpb, gtw, cexp, clin,
                  growth, gs_iters, max_expansions):
    ad = csr_matvec_py(indptr, indices, data, d)
    aa = 0.5 * float(np.dot(d, ad))
    bb = float(np.dot(d, ax) + np.dot(d, b))
    dvx = trace_x_py(d, t_dofa, t_shpa, t_dofb, t_shpb)
    nd = math.sqrt(float(np.dot(d, d)))
    if nd == 0.0:
        return 0.0, 0
    if cexp == 0.0 and not np.any(gtw * np.abs(dvx)):
        # friction inert along this direction, so the profile is a parabola
        t, delta, evals = _parabola_min_py(aa, bb)
    else:
        j0 = gtw * (cexp * np.exp(-np.abs(vx)) + clin * np.abs(vx))

        def phi(t):
            rn = np.abs(vx + t * dvx)
            return aa * t * t + bb * t + float(
                np.sum(gtw * (cexp * np.exp(-rn) + clin * rn) - j0))

        t, delta, evals, _ = _minimize_delta_py(phi, 1.0 / nd, growth, gs_iters,
                                                max_expansions)
    if t != 0.0:
        x += t * d
        ax += t * ad
        vx += t * dvx
    return -delta, evals


def probe_gap_py(h, ax, b, diag, vx, qp_ptr, qp_idx, qp_shp, gtw, cexp, clin):
    g = ax + b
    gap = float(np.max(np.maximum(-(h * g + 0.5 * h * h * diag),
                                  -(-h * g + 0.5 * h * h * diag)) / h))
    # friction corrections only exist on DOFs with contact adjacency
    touched = np.nonzero(np.diff(qp_ptr) > 0)[0]
    for i in touched:
        r0, r1 = qp_ptr[i], qp_ptr[i + 1]
        qi = qp_idx[r0:r1]
        qs = qp_shp[r0:r1]
        v0 = vx[qi]
        gw = gtw[qi]
        j0 = np.sum(gw * (cexp * np.exp(-np.abs(v0)) + clin * np.abs(v0)))
        for s in (h, -h):
            rn = np.abs(v0 + s * qs)
            fr = np.sum(gw * (cexp * np.exp(-rn) + clin * rn)) - j0
            delta = s * g[i] + 0.5 * h * h * diag[i] + fr
            gap = max(gap, -delta / h)
    return float(gap)


# ----------------------------------------------------------------------
# numba builds
# ----------------------------------------------------------------------

if NUMBA_AVAILABLE:
    _njit = numba.njit(cache=True)

    @_njit
    def _jt(r, cexp, clin):
        return cexp * math.exp(-r) + clin * r

    @_njit
    def csr_matvec_nb(indptr, indices, data, x):
        n = indptr.shape[0] - 1
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * x[indices[p]]
            out[i] = acc
        return out

    @_njit
    def trace_x_nb(d, t_dofa, t_shpa, t_dofb, t_shpb):
        nq = t_dofa.shape[0]
        out = np.zeros(nq)
        for q in range(nq):
            v = 0.0
            if t_dofa[q] >= 0:
                v += d[t_dofa[q]] * t_shpa[q]
            if t_dofb[q] >= 0:
                v += d[t_dofb[q]] * t_shpb[q]
            out[q] = v
        return out

    @_njit
    def boundary_value_nb(vx, gtw, cexp, clin):
        acc = 0.0
        for q in range(vx.shape[0]):
            acc += gtw[q] * _jt(abs(vx[q]), cexp, clin)
        return acc

    @_njit
    def value_at_nb(y, b, indptr, indices, data, t_dofa, t_shpa, t_dofb, t_shpb,
                    gtw, cexp, clin):
        ay = csr_matvec_nb(indptr, indices, data, y)
        vy = trace_x_nb(y, t_dofa, t_shpa, t_dofb, t_shpb)
        acc = 0.0
        for i in range(y.shape[0]):
            acc += (0.5 * ay[i] + b[i]) * y[i]
        return acc + boundary_value_nb(vy, gtw, cexp, clin)

    @_njit
    def refresh_state_nb(x, b, indptr, indices, data, t_dofa, t_shpa, t_dofb,
                         t_shpb, gtw, cexp, clin, ax_out, vx_out):
        ax = csr_matvec_nb(indptr, indices, data, x)
        vx = trace_x_nb(x, t_dofa, t_shpa, t_dofb, t_shpb)
        acc = 0.0
        for i in range(x.shape[0]):
            ax_out[i] = ax[i]
            acc += (0.5 * ax[i] + b[i]) * x[i]
        for q in range(vx.shape[0]):
            vx_out[q] = vx[q]
        return acc + boundary_value_nb(vx, gtw, cexp, clin)

    @_njit
    def _phi_coord_nb(t, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin):
        v = aa * t * t + bb * t
        for j in range(r0, r1):
            q = qp_idx[j]
            v += gtw[q] * (_jt(abs(vx[q] + t * qp_shp[j]), cexp, clin)
                           - _jt(abs(vx[q]), cexp, clin))
        return v

    @_njit
    def _search_coord_nb(aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin,
                         growth, gs_iters, max_expansions):
        nq = r1 - r0
        if nq == 0:
            t = -bb / (2.0 * aa)
            delta = (aa * t + bb) * t
            if delta >= 0.0:
                return 0.0, 0.0, 1
            return t, delta, 1
        if cexp == 0.0:
            # convex piecewise parabola: take the best clipped vertex over
            # the sign intervals cut by the trace zero crossings
            kinks = np.empty(nq)
            m = 0
            for j in range(r0, r1):
                s = qp_shp[j]
                if s != 0.0:
                    kk = -vx[qp_idx[j]] / s
                    dup = False
                    for p in range(m):
                        if kinks[p] == kk:
                            dup = True
                            break
                    if not dup:
                        p = m
                        while p > 0 and kinks[p - 1] > kk:
                            kinks[p] = kinks[p - 1]
                            p -= 1
                        kinks[p] = kk
                        m += 1
            if m == 0:
                t = -bb / (2.0 * aa)
                delta = (aa * t + bb) * t
                if delta >= 0.0:
                    return 0.0, 0.0, 1
                return t, delta, 1
            best_t = 0.0
            best_delta = 0.0
            evals = 0
            for p in range(m + 1):
                if p == 0:
                    rep = kinks[0] - 1.0
                elif p == m:
                    rep = kinks[m - 1] + 1.0
                else:
                    rep = 0.5 * (kinks[p - 1] + kinks[p])
                slope = bb
                for j in range(r0, r1):
                    q = qp_idx[j]
                    s = qp_shp[j]
                    if vx[q] + rep * s >= 0.0:
                        slope += clin * gtw[q] * s
                    else:
                        slope -= clin * gtw[q] * s
                tv = -slope / (2.0 * aa)
                if p > 0 and tv < kinks[p - 1]:
                    tv = kinks[p - 1]
                if p < m and tv > kinks[p]:
                    tv = kinks[p]
                delta = _phi_coord_nb(tv, aa, bb, r0, r1, qp_idx, qp_shp, vx,
                                      gtw, cexp, clin)
                evals += 1
                if delta < best_delta:
                    best_t = tv
                    best_delta = delta
            if best_delta >= 0.0:
                return 0.0, 0.0, evals
            return best_t, best_delta, evals
        evals = 0
        lo = -1.0
        hi = 1.0
        f_lo = _phi_coord_nb(lo, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin)
        f_hi = _phi_coord_nb(hi, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin)
        evals += 2
        if f_hi < 0.0 and f_hi <= f_lo:
            t_prev = 0.0
            t_cur = hi
            f_cur = f_hi
            grew = 0
            while True:
                t_next = t_cur * growth
                f_next = _phi_coord_nb(t_next, aa, bb, r0, r1, qp_idx, qp_shp,
                                       vx, gtw, cexp, clin)
                evals += 1
                if f_next >= f_cur:
                    lo = t_prev
                    hi = t_next
                    break
                t_prev = t_cur
                t_cur = t_next
                f_cur = f_next
                grew += 1
                if grew >= max_expansions:
                    return 0.0, 0.0, evals
        elif f_lo < 0.0:
            t_prev = 0.0
            t_cur = lo
            f_cur = f_lo
            grew = 0
            while True:
                t_next = t_cur * growth
                f_next = _phi_coord_nb(t_next, aa, bb, r0, r1, qp_idx, qp_shp,
                                       vx, gtw, cexp, clin)
                evals += 1
                if f_next >= f_cur:
                    lo = t_next
                    hi = t_prev
                    break
                t_prev = t_cur
                t_cur = t_next
                f_cur = f_next
                grew += 1
                if grew >= max_expansions:
                    return 0.0, 0.0, evals
        a = lo
        b_ = hi
        c = a + INV_PHI2 * (b_ - a)
        d = a + INV_PHI * (b_ - a)
        fc = _phi_coord_nb(c, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin)
        fd = _phi_coord_nb(d, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw, cexp, clin)
        evals += 2
        for _ in range(gs_iters):
            if fc <= fd:
                b_ = d
                d = c
                fd = fc
                c = a + INV_PHI2 * (b_ - a)
                fc = _phi_coord_nb(c, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw,
                                   cexp, clin)
            else:
                a = c
                c = d
                fc = fd
                d = a + INV_PHI * (b_ - a)
                fd = _phi_coord_nb(d, aa, bb, r0, r1, qp_idx, qp_shp, vx, gtw,
                                   cexp, clin)
            evals += 1
        if fc <= fd:
            t = c
            f_t = fc
        else:
            t = d
            f_t = fd
        if f_t >= 0.0:
            return 0.0, 0.0, evals
        return t, f_t, evals

    @_njit
    def line_coord_nb(i, x, ax, vx, b, indptr, indices, data, diag,
                      qp_ptr, qp_idx, qp_shp, gtw, cexp, clin,
                      growth, gs_iters, max_expansions):
        aa = 0.5 * diag[i]
        bb = ax[i] + b[i]
        r0 = qp_ptr[i]
        r1 = qp_ptr[i + 1]
        t, delta, evals = _search_coord_nb(aa, bb, r0, r1, qp_idx, qp_shp, vx,
                                           gtw, cexp, clin, growth, gs_iters,
                                           max_expansions)
        if t != 0.0:
            x[i] += t
            for p in range(indptr[i], indptr[i + 1]):
                ax[indices[p]] += t * data[p]
            for j in range(r0, r1):
                vx[qp_idx[j]] += t * qp_shp[j]
        return -delta, evals

    @_njit
    def sweep_coords_nb(ids, x, ax, vx, b, indptr, indices, data, diag,
                        qp_ptr, qp_idx, qp_shp, gtw, cexp, clin,
                        growth, gs_iters, max_expansions):
        total = 0.0
        best = 0.0
        best_pos = -1
        evals = 0
        for pos in range(ids.shape[0]):
            dec, ev = line_coord_nb(ids[pos], x, ax, vx, b, indptr, indices,
                                    data, diag, qp_ptr, qp_idx, qp_shp, gtw,
                                    cexp, clin, growth, gs_iters, max_expansions)
            evals += ev
            total += dec
            if dec > best:
                best = dec
                best_pos = pos
        return total, best, best_pos, evals

    @_njit
    def _phi_dense_nb(t, aa, bb, vx, dvx, gtw, cexp, clin):
        v = aa * t * t + bb * t
        for q in range(vx.shape[0]):
            if dvx[q] != 0.0:
                v += gtw[q] * (_jt(abs(vx[q] + t * dvx[q]), cexp, clin)
                               - _jt(abs(vx[q]), cexp, clin))
        return v

    @_njit
    def line_dense_nb(d, x, ax, vx, b, indptr, indices, data,
                      t_dofa, t_shpa, t_dofb, t_shpb, gtw, cexp, clin,
                      growth, gs_iters, max_expansions):
        n = x.shape[0]
        ad = csr_matvec_nb(indptr, indices, data, d)
        aa = 0.0
        bb = 0.0
        nd2 = 0.0
        for i in range(n):
            aa += d[i] * ad[i]
            bb += d[i] * (ax[i] + b[i])
            nd2 += d[i] * d[i]
        aa *= 0.5
        if nd2 == 0.0:
            return 0.0, 0
        dvx = trace_x_nb(d, t_dofa, t_shpa, t_dofb, t_shpb)
        scale = 1.0 / math.sqrt(nd2)

        fr_active = cexp != 0.0
        if not fr_active:
            for q in range(dvx.shape[0]):
                if gtw[q] != 0.0 and dvx[q] != 0.0:
                    fr_active = True
                    break
        if not fr_active:
            t = -bb / (2.0 * aa)
            f_t = (aa * t + bb) * t
            if f_t >= 0.0:
                return 0.0, 1
            for i in range(n):
                x[i] += t * d[i]
                ax[i] += t * ad[i]
            for q in range(vx.shape[0]):
                vx[q] += t * dvx[q]
            return -f_t, 1

        evals = 0
        lo = -scale
        hi = scale
        f_lo = _phi_dense_nb(lo, aa, bb, vx, dvx, gtw, cexp, clin)
        f_hi = _phi_dense_nb(hi, aa, bb, vx, dvx, gtw, cexp, clin)
        evals += 2
        failed = False
        if f_hi < 0.0 and f_hi <= f_lo:
            t_prev = 0.0
            t_cur = hi
            f_cur = f_hi
            grew = 0
            while True:
                t_next = t_cur * growth
                f_next = _phi_dense_nb(t_next, aa, bb, vx, dvx, gtw, cexp, clin)
                evals += 1
                if f_next >= f_cur:
                    lo = t_prev
                    hi = t_next
                    break
                t_prev = t_cur
                t_cur = t_next
                f_cur = f_next
                grew += 1
                if grew >= max_expansions:
                    failed = True
                    break
        elif f_lo < 0.0:
            t_prev = 0.0
            t_cur = lo
            f_cur = f_lo
            grew = 0
            while True:
                t_next = t_cur * growth
                f_next = _phi_dense_nb(t_next, aa, bb, vx, dvx, gtw, cexp, clin)
                evals += 1
                if f_next >= f_cur:
                    lo = t_next
                    hi = t_prev
                    break
                t_prev = t_cur
                t_cur = t_next
                f_cur = f_next
                grew += 1
                if grew >= max_expansions:
                    failed = True
                    break
        if failed:
            return 0.0, evals
        a = lo
        b_ = hi
        c = a + INV_PHI2 * (b_ - a)
        d_ = a + INV_PHI * (b_ - a)
        fc = _phi_dense_nb(c, aa, bb, vx, dvx, gtw, cexp, clin)
        fd = _phi_dense_nb(d_, aa, bb, vx, dvx, gtw, cexp, clin)
        evals += 2
        for _ in range(gs_iters):
            if fc <= fd:
                b_ = d_
                d_ = c
                fd = fc
                c = a + INV_PHI2 * (b_ - a)
                fc = _phi_dense_nb(c, aa, bb, vx, dvx, gtw, cexp, clin)
            else:
                a = c
                c = d_
                fc = fd
                d_ = a + INV_PHI * (b_ - a)
                fd = _phi_dense_nb(d_, aa, bb, vx, dvx, gtw, cexp, clin)
            evals += 1
        if fc <= fd:
            t = c
            f_t = fc
        else:
            t = d_
            f_t = fd
        if f_t >= 0.0:
            return 0.0, evals
        for i in range(n):
            x[i] += t * d[i]
            ax[i] += t * ad[i]
        for q in range(vx.shape[0]):
            vx[q] += t * dvx[q]
        return -f_t, evals

    @_njit
    def probe_gap_nb(h, ax, b, diag, vx, qp_ptr, qp_idx, qp_shp, gtw, cexp, clin):
        n = ax.shape[0]
        gap = -1.0e300
        for i in range(n):
            g = ax[i] + b[i]
            quad = 0.5 * h * h * diag[i]
            fr_plus = 0.0
            fr_minus = 0.0
            for j in range(qp_ptr[i], qp_ptr[i + 1]):
                q = qp_idx[j]
                s = qp_shp[j]
                j0 = gtw[q] * _jt(abs(vx[q]), cexp, clin)
                fr_plus += gtw[q] * _jt(abs(vx[q] + h * s), cexp, clin) - j0
                fr_minus += gtw[q] * _jt(abs(vx[q] - h * s), cexp, clin) - j0
            d_plus = h * g + quad + fr_plus
            d_minus = -h * g + quad + fr_minus
            if -d_plus / h > gap:
                gap = -d_plus / h
            if -d_minus / h > gap:
                gap = -d_minus / h
        return gap


if USING_NUMBA:
    csr_matvec = csr_matvec_nb
    trace_x = trace_x_nb
    boundary_value = boundary_value_nb
    value_at = value_at_nb
    refresh_state = refresh_state_nb
    line_coord = line_coord_nb
    sweep_coords = sweep_coords_nb
    line_dense = line_dense_nb
    probe_gap = probe_gap_nb
else:
    csr_matvec = csr_matvec_py
    trace_x = trace_x_py
    boundary_value = boundary_value_py
    value_at = value_at_py
    refresh_state = refresh_state_py
    line_coord = line_coord_py
    sweep_coords = sweep_coords_py
    line_dense = line_dense_py
    probe_gap = probe_gap_py
