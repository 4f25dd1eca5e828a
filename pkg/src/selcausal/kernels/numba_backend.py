"""Numba implementations of the numeric kernels.

Same functions, signatures and status codes as ``numpy_backend``; inner
accumulations are written as explicit loops so the JIT produces tight
machine code.  Compiled artifacts are cached on disk (cache=True) so each
worker process pays the compile cost at most once.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_HULL = 1
STATUS_MAXITER = 2


@njit(cache=True)
def _expit1(u):
    if u >= 0.0:
        return 1.0 / (1.0 + np.exp(-u))
    e = np.exp(u)
    return e / (1.0 + e)


@njit(cache=True)
def _softplus1(u):
    if u > 0.0:
        return u + np.log1p(np.exp(-u))
    return np.log1p(np.exp(u))


@njit(cache=True)
def expit(u):
    out = np.empty_like(u)
    for j in range(u.shape[0]):
        out[j] = _expit1(u[j])
    return out


@njit(cache=True)
def dual_solve(g, tol, max_iter):
    m, r = g.shape
    lam = np.zeros(r)
    lam_new = np.empty(r)
    d = np.ones(m)
    d_new = np.empty(m)
    grad = np.empty(r)
    hess = np.empty((r, r))
    fval = 0.0
    dmin = 1.0 / m
    for it in range(1, max_iter + 1):
        for k in range(r):
            grad[k] = 0.0
        wsum = 0.0
        for j in range(m):
            w = 1.0 / d[j]
            wsum += w
            for k in range(r):
                grad[k] -= g[j, k] * w
        gmax = 0.0
        for k in range(r):
            a = abs(grad[k])
            if a > gmax:
                gmax = a
        if gmax < tol:
            if abs(wsum - m) > 1e-6 * m:
                return lam, fval, STATUS_HULL, it - 1
            return lam, fval, STATUS_OK, it - 1
        if it == 1:
            # a single-signed column with a non-negligible sum is
            # infeasible for positive weights; noise-scale columns are
            # left to the gradient check
            for k in range(r):
                if abs(grad[k]) < tol:
                    continue
                col_min = g[0, k]
                col_max = g[0, k]
                for j in range(1, m):
                    v = g[j, k]
                    if v < col_min:
                        col_min = v
                    if v > col_max:
                        col_max = v
                if col_min >= 0.0 or col_max <= 0.0:
                    return lam, -np.inf, STATUS_HULL, 0
        for a in range(r):
            for b in range(r):
                hess[a, b] = 0.0
        for j in range(m):
            w2 = 1.0 / (d[j] * d[j])
            for a in range(r):
                ga = g[j, a] * w2
                for b in range(a, r):
                    hess[a, b] += ga * g[j, b]
        trace = 0.0
        for a in range(r):
            trace += hess[a, a]
        # trace-relative damping; trace = 0 implies the gradient check above
        # has already returned
        ridge = 1e-12 * trace / r
        for a in range(r):
            hess[a, a] += ridge
            for b in range(a):
                hess[a, b] = hess[b, a]
        step = np.linalg.solve(hess, -grad)
        slope = 0.0
        for k in range(r):
            slope += grad[k] * step[k]
        t = 1.0
        accepted = False
        f_new = 0.0
        for _ in range(60):
            for k in range(r):
                lam_new[k] = lam[k] + t * step[k]
            ok = True
            for j in range(m):
                s = 1.0
                for k in range(r):
                    s += g[j, k] * lam_new[k]
                if s <= dmin:
                    ok = False
                    break
                d_new[j] = s
            if ok:
                f_new = 0.0
                for j in range(m):
                    f_new -= np.log(d_new[j])
                if f_new <= fval + 1e-4 * t * slope + 1e-13 * (1.0 + abs(fval)):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return lam, fval, STATUS_HULL, it
        for k in range(r):
            lam[k] = lam_new[k]
        for j in range(m):
            d[j] = d_new[j]
        fval = f_new
    return lam, fval, STATUS_MAXITER, max_iter


@njit(cache=True)
def dual_value_at(g, lam):
    m, r = g.shape
    f = 0.0
    for j in range(m):
        s = 1.0
        for k in range(r):
            s += g[j, k] * lam[k]
        if s <= 0.0:
            return -np.inf
        f -= np.log(s)
    return f


@njit(cache=True)
def _build_g(c, yt, w, shift):
    n, k = c.shape
    g = np.empty((n, k + 1))
    for j in range(n):
        for a in range(k):
            g[j, a] = c[j, a]
        g[j, k] = yt[j] - shift * w[j]
    return g


@njit(cache=True)
def pair_loglik(c1, yt1, w1, c0, yt0, w0, mu1, theta, tol, max_iter):
    g1 = _build_g(c1, yt1, w1, mu1)
    lam1, f1, s1, _ = dual_solve(g1, tol, max_iter)
    if s1 != STATUS_OK:
        return -np.inf, s1
    g0 = _build_g(c0, yt0, w0, mu1 - theta)
    lam0, f0, s0, _ = dual_solve(g0, tol, max_iter)
    if s0 != STATUS_OK:
        return -np.inf, s0
    return f1 + f0, STATUS_OK


_GOLDEN_MEAN = 0.5 * (3.0 - np.sqrt(5.0))
_SQRT_EPS = np.sqrt(np.finfo(np.float64).eps)


@njit(cache=True)
def _brent_max(c1, yt1, w1, c0, yt0, w0, theta, lo, hi, xtol, tol, max_iter):
    a = lo
    b = hi
    xf = a + _GOLDEN_MEAN * (b - a)
    nfc = xf
    fulc = xf
    rat = 0.0
    e = 0.0
    v, _ = pair_loglik(c1, yt1, w1, c0, yt0, w0, xf, theta, tol, max_iter)
    fx = -v
    ffulc = fx
    fnfc = fx
    xm = 0.5 * (a + b)
    tol1 = _SQRT_EPS * abs(xf) + xtol / 3.0
    tol2 = 2.0 * tol1
    for _ in range(200):
        if abs(xf - xm) <= tol2 - 0.5 * (b - a):
            break
        golden = True
        if abs(e) > tol1 and np.isfinite(fx) and np.isfinite(fnfc) \
                and np.isfinite(ffulc):
            r = (xf - nfc) * (fx - ffulc)
            q = (xf - fulc) * (fx - fnfc)
            p = (xf - fulc) * q - (xf - nfc) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            r = e
            e = rat
            if (abs(p) < abs(0.5 * q * r)) and (p > q * (a - xf)) and (p < q * (b - xf)):
                golden = False
                rat = p / q
                x = xf + rat
                if (x - a) < tol2 or (b - x) < tol2:
                    rat = tol1 if xm - xf >= 0.0 else -tol1
        if golden:
            if xf >= xm:
                e = a - xf
            else:
                e = b - xf
            rat = _GOLDEN_MEAN * e
        step = abs(rat)
        if step < tol1:
            step = tol1
        x = xf + (step if rat >= 0.0 else -step)
        v, _ = pair_loglik(c1, yt1, w1, c0, yt0, w0, x, theta, tol, max_iter)
        fu = -v
        if fu <= fx:
            if x >= xf:
                a = xf
            else:
                b = xf
            fulc = nfc
            ffulc = fnfc
            nfc = xf
            fnfc = fx
            xf = x
            fx = fu
        else:
            if x < xf:
                a = x
            else:
                b = x
            if fu <= fnfc or nfc == xf:
                fulc = nfc
                ffulc = fnfc
                nfc = x
                fnfc = fu
            elif fu <= ffulc or fulc == xf or fulc == nfc:
                fulc = x
                ffulc = fu
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * abs(xf) + xtol / 3.0
        tol2 = 2.0 * tol1
    return xf, -fx


_SCAN_POINTS = 64


@njit(cache=True)
def profile_mu1(c1, yt1, w1, c0, yt0, w0, theta, center, halfwidth,
                xtol, tol, max_iter, max_expand):
    hw = halfwidth
    mu = np.nan
    val = -np.inf
    for _ in range(max_expand + 1):
        lo = center - hw
        hi = center + hw
        mu, val = _brent_max(c1, yt1, w1, c0, yt0, w0, theta, lo, hi,
                             xtol, tol, max_iter)
        if not np.isfinite(val):
            break
        if min(mu - lo, hi - mu) >= 4.0 * xtol:
            return mu, val, STATUS_OK
        hw *= 2.0
    if np.isfinite(val):
        return mu, val, STATUS_OK
    # feasibility requires the last column of each arm to change sign;
    # scan that window for a feasible seed, then polish locally
    y1lo = np.inf
    y1hi = -np.inf
    for j in range(yt1.shape[0]):
        y = yt1[j] / w1[j]
        if y < y1lo:
            y1lo = y
        if y > y1hi:
            y1hi = y
    y0lo = np.inf
    y0hi = -np.inf
    for j in range(yt0.shape[0]):
        y = yt0[j] / w0[j]
        if y < y0lo:
            y0lo = y
        if y > y0hi:
            y0hi = y
    lo = max(y1lo, theta + y0lo)
    hi = min(y1hi, theta + y0hi)
    if lo < hi:
        best_x = np.nan
        best_f = -np.inf
        for i in range(_SCAN_POINTS):
            x = lo + (hi - lo) * (i + 0.5) / _SCAN_POINTS
            f, _ = pair_loglik(c1, yt1, w1, c0, yt0, w0, x, theta, tol, max_iter)
            if f > best_f:
                best_x = x
                best_f = f
        if np.isfinite(best_f):
            step = 2.0 * (hi - lo) / _SCAN_POINTS
            mu, val = _brent_max(c1, yt1, w1, c0, yt0, w0, theta,
                                 max(lo, best_x - step), min(hi, best_x + step),
                                 xtol, tol, max_iter)
            if np.isfinite(val) and val >= best_f:
                return mu, val, STATUS_OK
            return best_x, best_f, STATUS_OK
    return np.nan, -np.inf, STATUS_HULL


@njit(cache=True)
def logistic_irls(x, t, tol_score, tol_step, max_iter):
    n, p = x.shape
    alpha = np.zeros(p)
    alpha_new = np.empty(p)
    u = np.zeros(n)
    u_new = np.empty(n)
    score = np.empty(p)
    hess = np.empty((p, p))
    ll = 0.0
    for j in range(n):
        ll -= _softplus1(0.0)
    for it in range(1, max_iter + 1):
        for a in range(p):
            score[a] = 0.0
            for b in range(p):
                hess[a, b] = 0.0
        for j in range(n):
            tau = _expit1(u[j])
            resid = t[j] - tau
            wt = tau * (1.0 - tau)
            for a in range(p):
                score[a] += x[j, a] * resid
                xa = x[j, a] * wt
                for b in range(a, p):
                    hess[a, b] += xa * x[j, b]
        smax = 0.0
        for a in range(p):
            v = abs(score[a])
            if v > smax:
                smax = v
        if smax < tol_score:
            return alpha, STATUS_OK, it - 1
        trace = 0.0
        for a in range(p):
            trace += hess[a, a]
        ridge = 1e-12 * max(trace / p, 1.0)
        for a in range(p):
            hess[a, a] += ridge
            for b in range(a):
                hess[a, b] = hess[b, a]
        delta = np.linalg.solve(hess, score)
        s = 1.0
        ll_new = ll
        for _ in range(40):
            for a in range(p):
                alpha_new[a] = alpha[a] + s * delta[a]
            ll_new = 0.0
            for j in range(n):
                un = 0.0
                for a in range(p):
                    un += x[j, a] * alpha_new[a]
                u_new[j] = un
                ll_new += t[j] * un - _softplus1(un)
            if ll_new >= ll - 1e-13 * (1.0 + abs(ll)):
                break
            s *= 0.5
        dmax = 0.0
        amax = 1.0
        for a in range(p):
            v = abs(s * delta[a])
            if v > dmax:
                dmax = v
            w = abs(alpha[a])
            if w > amax:
                amax = w
        for a in range(p):
            alpha[a] = alpha_new[a]
        for j in range(n):
            u[j] = u_new[j]
        ll = ll_new
        if dmax / amax < tol_step:
            return alpha, STATUS_OK, it
    return alpha, STATUS_MAXITER, max_iter


@njit(cache=True)
def phi_score_hess(mc1, yt1, w1, mc0, yt0, w0, theta, phi):
    n1 = yt1.shape[0]
    n0 = yt0.shape[0]
    l11 = phi[0]
    l12 = phi[1]
    l01 = phi[2]
    l02 = phi[3]
    mu1 = phi[4]
    score = np.zeros(5)
    hess = np.zeros((5, 5))
    dmin1 = np.inf
    dmin0 = np.inf
    value = 0.0
    for j in range(n1):
        b = yt1[j] - mu1 * w1[j]
        d = 1.0 + l11 * mc1[j] + l12 * b
        if d < dmin1:
            dmin1 = d
        if d <= 0.0:
            return score, hess, dmin1, 1.0, -np.inf
        i1 = 1.0 / d
        i1s = i1 * i1
        value -= np.log(d)
        score[0] -= mc1[j] * i1
        score[1] -= b * i1
        score[4] += l12 * w1[j] * i1
        hess[0, 0] += mc1[j] * mc1[j] * i1s
        hess[0, 1] += mc1[j] * b * i1s
        hess[1, 1] += b * b * i1s
        hess[0, 4] -= l12 * w1[j] * mc1[j] * i1s
        hess[1, 4] += w1[j] * i1 - l12 * w1[j] * b * i1s
        hess[4, 4] += l12 * l12 * w1[j] * w1[j] * i1s
    for j in range(n0):
        b = yt0[j] - (mu1 - theta) * w0[j]
        d = 1.0 + l01 * mc0[j] + l02 * b
        if d < dmin0:
            dmin0 = d
        if d <= 0.0:
            return score, hess, dmin1, dmin0, -np.inf
        i0 = 1.0 / d
        i0s = i0 * i0
        value -= np.log(d)
        score[2] -= mc0[j] * i0
        score[3] -= b * i0
        score[4] += l02 * w0[j] * i0
        hess[2, 2] += mc0[j] * mc0[j] * i0s
        hess[2, 3] += mc0[j] * b * i0s
        hess[3, 3] += b * b * i0s
        hess[2, 4] -= l02 * w0[j] * mc0[j] * i0s
        hess[3, 4] += w0[j] * i0 - l02 * w0[j] * b * i0s
        hess[4, 4] += l02 * l02 * w0[j] * w0[j] * i0s
    for i in range(5):
        for j in range(i):
            hess[i, j] = hess[j, i]
    return score, hess, dmin1, dmin0, value


@njit(cache=True)
def phi_newton(mc1, yt1, w1, mc0, yt0, w0, theta, phi0, tol, max_iter):
    n1 = yt1.shape[0]
    n0 = yt0.shape[0]
    dmin1_req = 1.0 / n1
    dmin0_req = 1.0 / n0
    phi = phi0.copy()
    phi_new = np.empty(5)
    score, hess, dm1, dm0, value = phi_score_hess(mc1, yt1, w1, mc0, yt0, w0, theta, phi)
    if dm1 <= dmin1_req or dm0 <= dmin0_req:
        return phi, value, STATUS_HULL, 0
    snorm = 0.0
    for k in range(5):
        v = abs(score[k])
        if v > snorm:
            snorm = v
    for it in range(1, max_iter + 1):
        if snorm < tol:
            return phi, value, STATUS_OK, it - 1
        dmax = 1.0
        for k in range(5):
            v = abs(hess[k, k])
            if v > dmax:
                dmax = v
        ridge = 1e-12 * dmax
        for k in range(5):
            hess[k, k] += ridge
        step = np.linalg.solve(hess, -score)
        t = 1.0
        accepted = False
        sn_new = snorm
        s_new = score
        h_new = hess
        v_new = value
        for _ in range(50):
            for k in range(5):
                phi_new[k] = phi[k] + t * step[k]
            s_new, h_new, dm1, dm0, v_new = phi_score_hess(
                mc1, yt1, w1, mc0, yt0, w0, theta, phi_new)
            if dm1 > dmin1_req and dm0 > dmin0_req:
                sn_new = 0.0
                for k in range(5):
                    v = abs(s_new[k])
                    if v > sn_new:
                        sn_new = v
                if sn_new <= (1.0 - 1e-4 * t) * snorm + 1e-13:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return phi, value, STATUS_MAXITER, it
        for k in range(5):
            phi[k] = phi_new[k]
        score = s_new
        hess = h_new
        value = v_new
        snorm = sn_new
    return phi, value, STATUS_MAXITER, max_iter
