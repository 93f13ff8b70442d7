"""Hot numeric kernels.

Everything here is written in the numba-compatible subset of Python/numpy and
decorated with :func:`optdesign._jit.njit`, so the same source runs compiled
or, with ``OPTDESIGN_NO_JIT=1``, as plain numpy.

Criterion codes: ``D_CODE`` (det of inverse information) and ``I_CODE``
(N * tr(M^-1 W)). Invalid (singular) designs score :data:`PENALTY` inside the
optimizers (scaled up by the estimated rank deficit).
"""

import math

import numpy as np

from optdesign._jit import njit

D_CODE = 0
I_CODE = 1
PENALTY = 1e12
PIVOT_RTOL = 1e-12
GOLDEN = 0.3819660112501051
SQRT_EPS = 1.4901161193847656e-08


@njit
def expand_row(x, k, out):
    out[0] = 1.0
    for j in range(k):
        out[1 + j] = x[j]
    t = 1 + k
    for a in range(k):
        for b in range(a + 1, k):
            out[t] = x[a] * x[b]
            t += 1
    for j in range(k):
        out[t + j] = x[j] * x[j]


@njit
def info_matrix(X, k, m, f):
    p = m.shape[0]
    m[:, :] = 0.0
    for i in range(X.shape[0]):
        expand_row(X[i], k, f)
        for u in range(p):
            fu = f[u]
            for v in range(u, p):
                m[u, v] += fu * f[v]
    for u in range(p):
        for v in range(u + 1, p):
            m[v, u] = m[u, v]


@njit
def info_matrix_flat(xflat, n, k, m, f):
    p = m.shape[0]
    m[:, :] = 0.0
    for i in range(n):
        expand_row(xflat[i * k:(i + 1) * k], k, f)
        for u in range(p):
            fu = f[u]
            for v in range(u, p):
                m[u, v] += fu * f[v]
    for u in range(p):
        for v in range(u + 1, p):
            m[v, u] = m[u, v]


@njit
def cholesky_logdet(m, L):
    """Lower Cholesky factor of ``m`` into ``L``; returns (logdet, deficiency).

    A pivot below ``PIVOT_RTOL`` times the largest diagonal entry of ``m`` is
    treated as zero: its column is dropped and counted in ``deficiency``, so
    deficiency 0 means the matrix is numerically nonsingular and otherwise
    estimates its rank deficit.
    """
    p = m.shape[0]
    dmax = 0.0
    for u in range(p):
        if m[u, u] > dmax:
            dmax = m[u, u]
    if not dmax > 0.0:
        return 0.0, p
    floor = PIVOT_RTOL * dmax
    logdet = 0.0
    deficiency = 0
    for j in range(p):
        s = m[j, j]
        for t in range(j):
            s -= L[j, t] * L[j, t]
        if not s > floor:
            deficiency += 1
            for r in range(j, p):
                L[r, j] = 0.0
            continue
        d = math.sqrt(s)
        L[j, j] = d
        logdet += 2.0 * math.log(d)
        for r in range(j + 1, p):
            s = m[r, j]
            for t in range(j):
                s -= L[r, t] * L[j, t]
            L[r, j] = s / d
    return logdet, deficiency


@njit
def score_info(m, crit, wchol, n, L, Y):
    """Criterion value of information matrix ``m``: (value, logdet, valid).

    Singular matrices score ``PENALTY * (1 + deficiency)`` so that repairing
    rank counts as progress. For the I-criterion,
    tr(M^-1 W) = ||L^-1 C||_F^2 with W = C C'.
    """
    logdet, deficiency = cholesky_logdet(m, L)
    if deficiency > 0:
        return PENALTY * (1.0 + deficiency), 0.0, False
    if crit == D_CODE:
        return math.exp(-logdet), logdet, True
    p = m.shape[0]
    acc = 0.0
    for c in range(p):
        for r in range(c, p):
            s = wchol[r, c]
            for t in range(c, r):
                s -= L[r, t] * Y[t, c]
            y = s / L[r, r]
            Y[r, c] = y
            acc += y * y
    return n * acc, logdet, True


@njit
def score_design(X, crit, wchol):
    n, k = X.shape
    p = wchol.shape[0]
    m = np.empty((p, p))
    f = np.empty(p)
    L = np.zeros((p, p))
    Y = np.zeros((p, p))
    info_matrix(X, k, m, f)
    return score_info(m, crit, wchol, n, L, Y)


# -- local solvers ----------------------------------------------------------

@njit
def brent_min(obj, args, a, b, x0, xtol, ftol, max_evals):
    """Bounded golden-section/parabolic minimization started at ``x0``.

    Returns (x, fx, f0, evals); ``fx <= f0`` always and ``x == x0`` unless the
    improvement exceeds ``ftol * |f0|``. Near-bound optima within ``100*xtol``
    of a bound are snapped onto it when that is no worse.
    """
    x = x0
    fx = obj(x, args)
    f0 = fx
    evals = 1
    w = x
    v = x
    fw = fx
    fv = fx
    d = 0.0
    e = 0.0
    lo = a
    hi = b
    budget = max_evals - 2
    while evals < budget:
        xm = 0.5 * (lo + hi)
        tol1 = SQRT_EPS * abs(x) + xtol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (hi - lo):
            break
        golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            pp = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                pp = -pp
            q = abs(q)
            etemp = e
            e = d
            if abs(pp) < abs(0.5 * q * etemp) and pp > q * (lo - x) and pp < q * (hi - x):
                d = pp / q
                u = x + d
                if (u - lo) < tol2 or (hi - u) < tol2:
                    d = tol1 if xm >= x else -tol1
                golden = False
        if golden:
            e = (lo - x) if x >= xm else (hi - x)
            d = GOLDEN * e
        if abs(d) >= tol1:
            u = x + d
        else:
            u = x + (tol1 if d > 0.0 else -tol1)
        u = min(max(u, a), b)
        fu = obj(u, args)
        evals += 1
        if fu <= fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v = w
            fv = fw
            w = x
            fw = fx
            x = u
            fx = fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v = w
                fv = fw
                w = u
                fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
    snap = 100.0 * xtol
    if x != a and x - a <= snap and evals < max_evals:
        fa = obj(a, args)
        evals += 1
        if fa <= fx:
            x = a
            fx = fa
    if x != b and b - x <= snap and evals < max_evals:
        fb = obj(b, args)
        evals += 1
        if fb <= fx:
            x = b
            fx = fb
    if not fx < f0 - ftol * abs(f0):
        return x0, f0, f0, evals
    return x, fx, f0, evals


@njit
def hooke_jeeves(obj, args, lo, hi, x0, xtol, ftol, max_evals):
    """Box-projected Hooke-Jeeves pattern search started at ``x0``.

    Exploratory moves poll +step then -step along each axis (clipped to the
    box); a successful exploration is followed by a pattern move, a failed
    one about the base point halves the step. Returns (x, fx, f0, evals) with
    ``fx <= f0``; ``x`` is a fresh array.
    """
    m = x0.shape[0]
    base = x0.copy()
    fbase = obj(base, args)
    f0 = fbase
    evals = 1
    width = hi[0] - lo[0]
    for j in range(m):
        width = min(width, hi[j] - lo[j])
    step = 0.25 * width
    pt = base.copy()
    fpt = fbase
    prev = np.empty(m)
    pattern = False
    while step >= xtol and evals < max_evals:
        for j in range(m):
            if evals >= max_evals:
                break
            old = pt[j]
            cand = min(old + step, hi[j])
            if cand != old:
                pt[j] = cand
                fc = obj(pt, args)
                evals += 1
                if fc < fpt - ftol * abs(fpt):
                    fpt = fc
                    continue
            pt[j] = old
            if evals >= max_evals:
                break
            cand = max(old - step, lo[j])
            if cand != old:
                pt[j] = cand
                fc = obj(pt, args)
                evals += 1
                if fc < fpt - ftol * abs(fpt):
                    fpt = fc
                    continue
            pt[j] = old
        if fpt < fbase - ftol * abs(fbase):
            prev[:] = base
            base[:] = pt
            fbase = fpt
            if evals >= max_evals:
                break
            for j in range(m):
                pt[j] = min(max(2.0 * base[j] - prev[j], lo[j]), hi[j])
            fpt = obj(pt, args)
            evals += 1
            pattern = True
        else:
            if not pattern:
                step *= 0.5
            pt[:] = base
            fpt = fbase
            pattern = False
    return base, fbase, f0, evals


# -- exchange objectives ----------------------------------------------------

@njit
def _coord_objective(t, args):
    mminus, row, j, crit, wchol, n, k, f, m, L, Y = args
    row[j] = t
    return _row_value(row, mminus, crit, wchol, n, k, f, m, L, Y)


@njit
def _coord_objective_1d(x, args):
    return _coord_objective(x[0], args)


@njit
def _row_objective(x, args):
    mminus, crit, wchol, n, k, f, m, L, Y = args
    return _row_value(x, mminus, crit, wchol, n, k, f, m, L, Y)


@njit
def _row_value(x, mminus, crit, wchol, n, k, f, m, L, Y):
    p = mminus.shape[0]
    expand_row(x, k, f)
    for u in range(p):
        fu = f[u]
        for v in range(p):
            m[u, v] = mminus[u, v] + fu * f[v]
    value, _, _ = score_info(m, crit, wchol, n, L, Y)
    return value


@njit
def _info_without_row(F, i, mminus):
    p = F.shape[1]
    mminus[:, :] = 0.0
    for r in range(F.shape[0]):
        if r == i:
            continue
        for u in range(p):
            fu = F[r, u]
            for v in range(u, p):
                mminus[u, v] += fu * F[r, v]
    for u in range(p):
        for v in range(u + 1, p):
            mminus[v, u] = mminus[u, v]


@njit(cache=False)
def exchange_run(X, crit, wchol, rowwise, improvement_tol, max_passes,
                 xtol, ftol, max_evals, trace, scalar_brent=False):
    """Run one exchange search in place on ``X``.

    ``rowwise`` False sweeps single coordinates (i outer, j inner) with the
    scalar solver (pattern search, or Brent when ``scalar_brent``); True
    proposes whole rows with the box solver (K=1 rows use the scalar solver,
    so both variants coincide there). ``trace[t]`` receives
    the full-design score after sweep t. Returns (passes, evals, still_improving).
    """
    n, k = X.shape
    p = wchol.shape[0]
    F = np.empty((n, p))
    for i in range(n):
        expand_row(X[i], k, F[i])
    mminus = np.empty((p, p))
    m = np.empty((p, p))
    L = np.zeros((p, p))
    Y = np.zeros((p, p))
    f = np.empty(p)
    row = np.empty(k)
    lo = np.full(k, -1.0)
    hi = np.full(k, 1.0)
    lo1 = np.full(1, -1.0)
    hi1 = np.full(1, 1.0)
    x1 = np.empty(1)
    evals = 0
    passes = 0
    improved = True
    while passes < max_passes:
        improved = False
        for i in range(n):
            _info_without_row(F, i, mminus)
            row[:] = X[i]
            if rowwise and k > 1:
                args = (mminus, crit, wchol, n, k, f, m, L, Y)
                xs, fs, f0, ev = hooke_jeeves(_row_objective, args, lo, hi, row,
                                              xtol, ftol, max_evals)
                evals += ev
                if fs < f0 - improvement_tol * abs(f0):
                    X[i, :] = xs
                    improved = True
            else:
                for j in range(k):
                    cargs = (mminus, row, j, crit, wchol, n, k, f, m, L, Y)
                    if scalar_brent:
                        xs1, fs1, f01, ev1 = brent_min(_coord_objective, cargs, -1.0, 1.0,
                                                       X[i, j], xtol, ftol, max_evals)
                    else:
                        x1[0] = X[i, j]
                        xv, fs1, f01, ev1 = hooke_jeeves(_coord_objective_1d, cargs, lo1, hi1,
                                                         x1, xtol, ftol, max_evals)
                        xs1 = xv[0]
                    evals += ev1
                    if fs1 < f01 - improvement_tol * abs(f01):
                        X[i, j] = xs1
                        improved = True
                    row[j] = X[i, j]
            expand_row(X[i], k, F[i])
        info_matrix(X, k, m, f)
        value, _, _ = score_info(m, crit, wchol, n, L, Y)
        trace[passes] = value
        passes += 1
        if not improved:
            break
    return passes, evals, improved


# -- particle swarm ---------------------------------------------------------

@njit
def pso_run(rng, n, k, crit, wchol, swarm_size, iterations, w_start, w_end,
            c1, c2, vmax, trace):
    """Global-best PSO over flattened N*K designs.

    ``trace[0]`` is the best initial score, ``trace[t]`` the gbest score after
    iteration t. Returns (gbest_position, gbest_value, evals).
    """
    dim = n * k
    p = wchol.shape[0]
    m = np.empty((p, p))
    L = np.zeros((p, p))
    Y = np.zeros((p, p))
    f = np.empty(p)
    pos = 2.0 * rng.random((swarm_size, dim)) - 1.0
    vel = np.zeros((swarm_size, dim))
    pbest = pos.copy()
    pbest_f = np.empty(swarm_size)
    for s in range(swarm_size):
        info_matrix_flat(pos[s], n, k, m, f)
        pbest_f[s], _, _ = score_info(m, crit, wchol, n, L, Y)
    evals = swarm_size
    g = 0
    for s in range(1, swarm_size):
        if pbest_f[s] < pbest_f[g]:
            g = s
    gbest = pbest[g].copy()
    gbest_f = pbest_f[g]
    trace[0] = gbest_f
    for it in range(iterations):
        if iterations > 1:
            w = w_start - (w_start - w_end) * it / (iterations - 1)
        else:
            w = w_start
        r1 = rng.random((swarm_size, dim))
        r2 = rng.random((swarm_size, dim))
        for s in range(swarm_size):
            for d in range(dim):
                x = pos[s, d]
                vd = (w * vel[s, d] + c1 * r1[s, d] * (pbest[s, d] - x)
                      + c2 * r2[s, d] * (gbest[d] - x))
                if vd > vmax:
                    vd = vmax
                elif vd < -vmax:
                    vd = -vmax
                x += vd
                if x > 1.0:
                    x = 1.0
                    vd = 0.0
                elif x < -1.0:
                    x = -1.0
                    vd = 0.0
                pos[s, d] = x
                vel[s, d] = vd
            info_matrix_flat(pos[s], n, k, m, f)
            val, _, _ = score_info(m, crit, wchol, n, L, Y)
            if val < pbest_f[s]:
                pbest_f[s] = val
                pbest[s, :] = pos[s]
        evals += swarm_size
        g = 0
        for s in range(1, swarm_size):
            if pbest_f[s] < pbest_f[g]:
                g = s
        if pbest_f[g] < gbest_f:
            gbest_f = pbest_f[g]
            gbest[:] = pbest[g]
        trace[it + 1] = gbest_f
    return gbest, gbest_f, evals
