"""Numeric inner loops: curve evaluation, bounded least squares, quadrature,
crossing search and the signed-rank null distribution.

Everything here works on plain float64/int64 arrays and integer family
codes so it can be compiled by numba.  Higher-level modules wrap these in
dataclasses.
"""

import math

import numpy as np

from ._accel import JIT_ENABLED, jit

LOGISTIC = 0
GOMPERTZ = 1
BASS = 2
RICHARDS = 3
CUMNORMAL = 4
EXPONENTIAL = 5
BERTALANFFY = 6
POLYNOMIAL = 7
LINEAR = 8

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

if JIT_ENABLED:

    @jit
    def _ndtr(z):
        out = np.empty_like(z)
        for i in range(z.shape[0]):
            out[i] = 0.5 * math.erfc(-z[i] / _SQRT2)
        return out

else:
    from scipy.special import ndtr as _ndtr


@jit
def _poly(coef, t):
    out = np.zeros_like(t)
    for k in range(coef.shape[0] - 1, -1, -1):
        out = out * t + coef[k]
    return out


@jit
def curve_value(code, p, t):
    """Evaluate family ``code`` with parameters ``p`` at times ``t``."""
    if code == LOGISTIC:
        return p[0] / (1.0 + np.exp(-p[1] * (t - p[2])))
    if code == GOMPERTZ:
        return p[0] * np.exp(-p[1] * np.exp(-p[2] * t))
    if code == BASS:
        s = p[1] + p[2]
        e = np.exp(-s * t)
        return p[0] * (1.0 - e) / (1.0 + (p[2] / p[1]) * e)
    if code == RICHARDS:
        e = np.exp(-p[1] * (t - p[2]))
        return p[0] * (1.0 + e) ** (-1.0 / p[3])
    if code == CUMNORMAL:
        return p[0] * _ndtr((t - p[1]) / p[2])
    if code == EXPONENTIAL:
        return p[0] * np.expm1(p[1] * t)
    if code == BERTALANFFY:
        w = np.maximum(-np.expm1(-p[1] * (t - p[2])), 0.0)
        return p[0] * w * w * w
    return _poly(p, t)


@jit
def curve_slope(code, p, t):
    """Time derivative dC/dt."""
    if code == LOGISTIC:
        e = np.exp(-p[1] * (t - p[2]))
        return p[0] * p[1] * e / (1.0 + e) ** 2
    if code == GOMPERTZ:
        u = np.exp(-p[2] * t)
        return p[0] * np.exp(-p[1] * u) * p[1] * p[2] * u
    if code == BASS:
        s = p[1] + p[2]
        e = np.exp(-s * t)
        ratio = p[2] / p[1]
        d = 1.0 + ratio * e
        return p[0] * s * e * (1.0 + ratio) / (d * d)
    if code == RICHARDS:
        e = np.exp(-p[1] * (t - p[2]))
        return p[0] * p[1] * e * (1.0 + e) ** (-1.0 / p[3] - 1.0) / p[3]
    if code == CUMNORMAL:
        z = (t - p[1]) / p[2]
        return p[0] * _INV_SQRT2PI * np.exp(-0.5 * z * z) / p[2]
    if code == EXPONENTIAL:
        return p[0] * p[1] * np.exp(p[1] * t)
    if code == BERTALANFFY:
        e = np.exp(-p[1] * (t - p[2]))
        w = np.maximum(1.0 - e, 0.0)
        return 3.0 * p[0] * w * w * e * p[1]
    n = p.shape[0]
    if n < 2:
        return np.zeros_like(t)
    d = np.empty(n - 1)
    for k in range(1, n):
        d[k - 1] = k * p[k]
    return _poly(d, t)


@jit
def param_jacobian(code, p, t):
    """d value / d params, shape (len(t), len(p)). Nonlinear families only."""
    n = t.shape[0]
    m = p.shape[0]
    jac = np.zeros((n, m))
    if code == LOGISTIC:
        e = np.exp(-p[1] * (t - p[2]))
        q = 1.0 / (1.0 + e)
        jac[:, 0] = q
        jac[:, 1] = p[0] * e * (t - p[2]) * q * q
        jac[:, 2] = -p[0] * e * p[1] * q * q
    elif code == GOMPERTZ:
        u = np.exp(-p[2] * t)
        v = np.exp(-p[1] * u)
        jac[:, 0] = v
        jac[:, 1] = -p[0] * u * v
        jac[:, 2] = p[0] * v * p[1] * u * t
    elif code == BASS:
        s = p[1] + p[2]
        e = np.exp(-s * t)
        ratio = p[2] / p[1]
        num = 1.0 - e
        den = 1.0 + ratio * e
        dnum = t * e  # same for p and q
        dden_p = -(p[2] / (p[1] * p[1])) * e - ratio * t * e
        dden_q = e / p[1] - ratio * t * e
        jac[:, 0] = num / den
        jac[:, 1] = p[0] * (dnum * den - num * dden_p) / (den * den)
        jac[:, 2] = p[0] * (dnum * den - num * dden_q) / (den * den)
    elif code == RICHARDS:
        e = np.exp(-p[1] * (t - p[2]))
        base = 1.0 + e
        f0 = base ** (-1.0 / p[3])
        f1 = base ** (-1.0 / p[3] - 1.0)
        jac[:, 0] = f0
        jac[:, 1] = p[0] * (t - p[2]) * e * f1 / p[3]
        jac[:, 2] = -p[0] * p[1] * e * f1 / p[3]
        jac[:, 3] = p[0] * f0 * np.log1p(e) / (p[3] * p[3])
    elif code == CUMNORMAL:
        z = (t - p[1]) / p[2]
        phi = _INV_SQRT2PI * np.exp(-0.5 * z * z)
        jac[:, 0] = _ndtr(z)
        jac[:, 1] = -p[0] * phi / p[2]
        jac[:, 2] = -p[0] * phi * z / p[2]
    elif code == EXPONENTIAL:
        jac[:, 0] = np.expm1(p[1] * t)
        jac[:, 1] = p[0] * t * np.exp(p[1] * t)
    elif code == BERTALANFFY:
        dt = t - p[2]
        e = np.exp(-p[1] * dt)
        w = np.maximum(1.0 - e, 0.0)
        jac[:, 0] = w * w * w
        jac[:, 1] = 3.0 * p[0] * w * w * e * dt
        jac[:, 2] = -3.0 * p[0] * w * w * e * p[1]
    return jac


@jit
def _project(p, lo, hi):
    return np.minimum(np.maximum(p, lo), hi)


@jit
def levenberg_marquardt(code, p0, lo, hi, t, y, max_iter, xtol):
    """Box-projected Levenberg-Marquardt with Marquardt diagonal scaling.

    Parameters held on a bound by the gradient are frozen for that step, so
    the remaining ones solve the reduced problem.  Returns ``(params, sse, converged, iterations)``.  Convergence means the
    relative parameter step fell below ``xtol`` or damping saturated with no
    further decrease (a stationary point on the box).
    """
    p = _project(p0.copy(), lo, hi)
    r = y - curve_value(code, p, t)
    sse = np.sum(r * r)
    if not np.isfinite(sse):
        return p, np.inf, False, 0
    lam = 1e-3
    m = p.shape[0]
    it = 0
    while it < max_iter:
        it += 1
        jac = param_jacobian(code, p, t)
        grad = jac.T @ r
        jtj = jac.T @ jac
        diag = np.empty(m)
        dmax = 0.0
        for k in range(m):
            if jtj[k, k] > dmax:
                dmax = jtj[k, k]
        floor = max(dmax * 1e-12, 1e-300)
        for k in range(m):
            diag[k] = max(jtj[k, k], floor)
        # parameters pinned on a bound with the gradient pointing outward sit out the step
        for k in range(m):
            if (p[k] <= lo[k] and grad[k] < 0.0) or (p[k] >= hi[k] and grad[k] > 0.0):
                for j in range(m):
                    jtj[k, j] = 0.0
                    jtj[j, k] = 0.0
                jtj[k, k] = 1.0
                diag[k] = 1.0
                grad[k] = 0.0
        accepted = False
        p_new = p
        r_new = r
        sse_new = sse
        while lam < 1e16:
            mat = jtj.copy()
            for k in range(m):
                mat[k, k] += lam * diag[k]
            step = np.linalg.solve(mat, grad)
            cand = _project(p + step, lo, hi)
            rc = y - curve_value(code, cand, t)
            sc = np.sum(rc * rc)
            if np.isfinite(sc) and sc <= sse:
                p_new = cand
                r_new = rc
                sse_new = sc
                accepted = True
                lam = max(lam / 3.0, 1e-12)
                break
            lam *= 4.0
        if not accepted:
            return p, sse, True, it
        moved = np.sqrt(np.sum((p_new - p) ** 2))
        size = np.sqrt(np.sum(p * p))
        p = p_new
        r = r_new
        sse = sse_new
        if moved <= xtol * (size + xtol) or sse == 0.0:
            return p, sse, True, it
    return p, sse, False, it


@jit
def fit_multistart(code, seeds, lo, hi, t, y, max_iter, xtol):
    """Run LM from every row of ``seeds``; keep the best converged start.

    Returns ``(params, sse, n_converged)``; ``n_converged == 0`` means failure.
    Ties keep the earliest seed, which keeps the result deterministic.
    """
    best = seeds[0].copy()
    best_sse = np.inf
    n_ok = 0
    for s in range(seeds.shape[0]):
        p, sse, ok, _ = levenberg_marquardt(code, seeds[s], lo, hi, t, y, max_iter, xtol)
        if ok and np.isfinite(sse):
            n_ok += 1
            if sse < best_sse:
                best_sse = sse
                best = p
    return best, best_sse, n_ok


# Gauss-Kronrod 7/15 nodes on [-1, 1] (QUADPACK qk15 constants).
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.129484966168869693270611432679082, 0.0,
])


@jit
def _gk15(code, p, a, b):
    half = 0.5 * (b - a)
    f = curve_value(code, p, 0.5 * (a + b) + half * _XK)
    k = half * np.sum(_WK * f)
    g = half * np.sum(_WG * f)
    return k, abs(k - g)


@jit
def integrate_curve(code, p, a, b, epsrel, limit):
    """Globally adaptive Gauss-Kronrod integral of a curve over [a, b].

    Bisects the interval with the largest error estimate until the summed
    estimate is within ``epsrel`` of the total.  Non-finite samples yield nan.
    """
    if b == a:
        return 0.0, 0.0
    left = np.empty(limit)
    right = np.empty(limit)
    val = np.empty(limit)
    err = np.empty(limit)
    left[0] = a
    right[0] = b
    val[0], err[0] = _gk15(code, p, a, b)
    n = 1
    total = val[0]
    total_err = err[0]
    while total_err > epsrel * abs(total) and n < limit:
        if not np.isfinite(total):
            return np.nan, np.inf
        i = np.argmax(err[:n])
        mid = 0.5 * (left[i] + right[i])
        v1, e1 = _gk15(code, p, left[i], mid)
        v2, e2 = _gk15(code, p, mid, right[i])
        left[n] = mid
        right[n] = right[i]
        val[n] = v2
        err[n] = e2
        right[i] = mid
        val[i] = v1
        err[i] = e1
        n += 1
        total = np.sum(val[:n])
        total_err = np.sum(err[:n])
    return total, total_err


@jit
def _gap_at(ci, pi, cm, pm, x):
    xs = np.array([x])
    return curve_value(ci, pi, xs)[0] - curve_value(cm, pm, xs)[0]


@jit
def _sign(v):
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


@jit
def scan_crossings(ci, pi, cm, pm, a, b, ncells, xtol, edge, merge, slope_tol, probe):
    """Sign-change roots of C_i - C_m on the open interval (a, b).

    Uniform scan over ``ncells`` cells, then bisection to ``xtol``.  Values
    within 1e-12 of the curves' scale count as zero; a run of more than two
    such nodes is a stretch of coincidence, and no root is taken across it.
    ``edge``, ``merge`` and ``probe`` are absolute time distances.

    Returns ``(roots, alpha_signs, coincident)``.
    """
    tt = np.linspace(a, b, ncells + 1)
    vi = curve_value(ci, pi, tt)
    vm = curve_value(cm, pm, tt)
    g = vi - vm
    scale = max(np.max(np.abs(vi)), np.max(np.abs(vm)))
    ztol = 1e-12 * scale
    roots = np.empty(ncells + 1)
    after = np.empty(ncells + 1, dtype=np.int64)
    nroot = 0
    coincident = False
    last_idx = -1
    last_sign = 0
    zero_run = 0
    for k in range(ncells + 1):
        gk = g[k]
        if abs(gk) <= ztol:
            zero_run += 1
            if zero_run > 2:
                coincident = True
            continue
        zero_run = 0
        s = 1 if gk > 0.0 else -1
        if last_sign != 0:
            gap = k - last_idx - 1
            if gap <= 2 and s != last_sign:
                lo = tt[last_idx]
                hi = tt[k]
                while hi - lo > xtol:
                    mid = 0.5 * (lo + hi)
                    gm = _gap_at(ci, pi, cm, pm, mid)
                    if gm == 0.0:
                        lo = mid
                        hi = mid
                        break
                    if _sign(gm) == last_sign:
                        lo = mid
                    else:
                        hi = mid
                roots[nroot] = 0.5 * (lo + hi)
                after[nroot] = s
                nroot += 1
        last_idx = k
        last_sign = s

    out_t = np.empty(nroot)
    out_a = np.empty(nroot, dtype=np.int64)
    n = 0
    for j in range(nroot):
        r = roots[j]
        if r - a <= edge or b - r <= edge:
            continue
        if n > 0 and r - out_t[n - 1] < merge:
            continue
        xs = np.array([r])
        dslope = curve_slope(ci, pi, xs)[0] - curve_slope(cm, pm, xs)[0]
        if abs(dslope) >= slope_tol:
            sa = _sign(dslope)
        else:
            sa = _sign(_gap_at(ci, pi, cm, pm, r + probe))
            if sa == 0:
                sa = after[j]
        out_t[n] = r
        out_a[n] = sa
        n += 1
    return out_t[:n], out_a[:n], coincident


@jit
def signed_rank_null_counts(doubled_ranks):
    """Number of sign assignments giving each doubled positive-rank sum.

    ``doubled_ranks`` holds 2*rank as integers so mid-ranks stay exact.
    Entry ``s`` of the result counts subsets whose doubled rank sum is ``s``.
    """
    total = 0
    for r in doubled_ranks:
        total += r
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    reach = 0
    for r in doubled_ranks:
        for s in range(reach, -1, -1):
            if counts[s] != 0.0:
                counts[s + r] += counts[s]
        reach += r
    return counts
