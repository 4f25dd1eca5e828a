"""Pure-numpy implementations of the numeric kernels.

Reference semantics for the numba backend: both backends expose the same
functions with identical signatures and status codes, and must agree to
floating-point noise.  Selection happens in ``selcausal.kernels``.

Status codes (shared by all solvers):
    0 converged, 1 hull violation / infeasible, 2 iteration budget exhausted.
"""

import numpy as np

STATUS_OK = 0
STATUS_HULL = 1
STATUS_MAXITER = 2

_NEG_INF = -np.inf


def expit(u):
    """Numerically stable logistic function."""
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _softplus(u):
    # log(1 + exp(u)) without overflow
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def dual_solve(g, tol, max_iter):
    """Damped Newton on the convex dual D(lam) = -sum(log(1 + g @ lam)).

    Iterates stay in the restricted domain 1 + g @ lam > 1/m, which bounds
    every induced weight by 1.  Returns (lam, dual_value, status, n_iter).
    A stationary point automatically satisfies sum(1/(m*(1+g@lam))) = 1;
    a tiny gradient combined with a broken normalization identifies dual
    divergence, i.e. zero outside the convex hull of the rows of g.
    """
    m, r = g.shape
    lam = np.zeros(r)
    d = np.ones(m)
    fval = 0.0
    dmin = 1.0 / m
    eye = np.eye(r)
    for it in range(1, max_iter + 1):
        w = 1.0 / d
        grad = -(g.T @ w)
        if np.max(np.abs(grad)) < tol:
            if abs(w.sum() - m) > 1e-6 * m:
                return lam, fval, STATUS_HULL, it - 1
            return lam, fval, STATUS_OK, it - 1
        if it == 1:
            # a single-signed column with a non-negligible sum makes
            # sum(p_j g_jk) = 0 unattainable for positive weights; columns
            # at floating-noise scale are left to the gradient check
            for k in range(r):
                if abs(grad[k]) < tol:
                    continue
                col_min = g[:, k].min()
                col_max = g[:, k].max()
                if col_min >= 0.0 or col_max <= 0.0:
                    return lam, -np.inf, STATUS_HULL, 0
        gw = g * (w * w)[:, None]
        hess = g.T @ gw
        # trace-relative damping: trace(hess) = 0 only when every g_j = 0,
        # in which case the gradient check above has already returned
        ridge = 1e-12 * np.trace(hess) / r
        step = np.linalg.solve(hess + ridge * eye, -grad)
        slope = grad @ step
        t = 1.0
        accepted = False
        for _ in range(60):
            lam_new = lam + t * step
            d_new = 1.0 + g @ lam_new
            if d_new.min() > dmin:
                f_new = -np.log(d_new).sum()
                if f_new <= fval + 1e-4 * t * slope + 1e-13 * (1.0 + abs(fval)):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return lam, fval, STATUS_HULL, it
        lam, d, fval = lam_new, d_new, f_new
    # no stationarity certificate; report budget exhaustion
    return lam, fval, STATUS_MAXITER, max_iter


def dual_value_at(g, lam):
    """-sum(log(1 + g @ lam)); -inf outside the domain."""
    d = 1.0 + g @ lam
    if d.min() <= 0.0:
        return _NEG_INF
    return -np.log(d).sum()


def _build_g(c, yt, w, shift):
    n, k = c.shape
    g = np.empty((n, k + 1))
    g[:, :k] = c
    g[:, k] = yt - shift * w
    return g


def pair_loglik(c1, yt1, w1, c0, yt0, w0, mu1, theta, tol, max_iter):
    """Sum of the two per-arm dual optima at a fixed (mu1, theta).

    Arm-1 constraint rows are [c1_j, yt1_j - mu1*w1_j]; arm-0 rows use the
    shift mu1 - theta.  Returns (value, status); value is -inf unless both
    arms converge.
    """
    g1 = _build_g(c1, yt1, w1, mu1)
    lam1, f1, s1, _ = dual_solve(g1, tol, max_iter)
    if s1 != STATUS_OK:
        return _NEG_INF, s1
    g0 = _build_g(c0, yt0, w0, mu1 - theta)
    lam0, f0, s0, _ = dual_solve(g0, tol, max_iter)
    if s0 != STATUS_OK:
        return _NEG_INF, s0
    return f1 + f0, STATUS_OK


_GOLDEN_MEAN = 0.5 * (3.0 - np.sqrt(5.0))
_SQRT_EPS = np.sqrt(np.finfo(np.float64).eps)


def _brent_max(c1, yt1, w1, c0, yt0, w0, theta, lo, hi, xtol, tol, max_iter):
    """Bounded Brent maximization of the profiled pair log-likelihood.

    Infeasible evaluations return -inf, which the golden-section fallback
    handles (a NaN parabolic trial simply fails its acceptance test).
    """

    def neg(x):
        v, _ = pair_loglik(c1, yt1, w1, c0, yt0, w0, x, theta, tol, max_iter)
        return -v

    a, b = lo, hi
    xf = a + _GOLDEN_MEAN * (b - a)
    nfc = fulc = xf
    rat = e = 0.0
    fx = neg(xf)
    ffulc = fnfc = fx
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
            e = (a if xf >= xm else b) - xf
            rat = _GOLDEN_MEAN * e
        step = max(abs(rat), tol1)
        x = xf + (step if rat >= 0.0 else -step)
        fu = neg(x)
        if fu <= fx:
            if x >= xf:
                a = xf
            else:
                b = xf
            fulc, ffulc = nfc, fnfc
            nfc, fnfc = xf, fx
            xf, fx = x, fu
        else:
            if x < xf:
                a = x
            else:
                b = x
            if fu <= fnfc or nfc == xf:
                fulc, ffulc = nfc, fnfc
                nfc, fnfc = x, fu
            elif fu <= ffulc or fulc == xf or fulc == nfc:
                fulc, ffulc = x, fu
        xm = 0.5 * (a + b)
        tol1 = _SQRT_EPS * abs(xf) + xtol / 3.0
        tol2 = 2.0 * tol1
    return xf, -fx


_SCAN_POINTS = 64


def profile_mu1(c1, yt1, w1, c0, yt0, w0, theta, center, halfwidth,
                xtol, tol, max_iter, max_expand):
    """Maximize the pair log-likelihood over mu1 at a fixed theta.

    Brent on [center - hw, center + hw]; the bracket doubles (up to
    max_expand times) whenever the maximizer lands at an edge.  When the
    bracket turns out infeasible, the interval where the parameter column
    of each arm changes sign is scanned on a coarse grid for a feasible
    seed and Brent reruns locally around it; only then is hull failure
    reported.  Returns (mu1_star, value, status).
    """
    hw = halfwidth
    val = _NEG_INF
    mu = np.nan
    for _ in range(max_expand + 1):
        lo, hi = center - hw, center + hw
        mu, val = _brent_max(c1, yt1, w1, c0, yt0, w0, theta, lo, hi,
                             xtol, tol, max_iter)
        if not np.isfinite(val):
            break
        if min(mu - lo, hi - mu) >= 4.0 * xtol:
            return mu, val, STATUS_OK
        hw *= 2.0
    if np.isfinite(val):
        # maximum pinned at the widest bracket's edge; accept it
        return mu, val, STATUS_OK
    # feasibility requires the last column of each arm to change sign
    y1 = yt1 / w1
    y0 = yt0 / w0
    lo = max(y1.min(), theta + y0.min())
    hi = min(y1.max(), theta + y0.max())
    if lo < hi:
        best_x = np.nan
        best_f = _NEG_INF
        for i in range(_SCAN_POINTS):
            x = lo + (hi - lo) * (i + 0.5) / _SCAN_POINTS
            f, _ = pair_loglik(c1, yt1, w1, c0, yt0, w0, x, theta, tol, max_iter)
            if f > best_f:
                best_x, best_f = x, f
        if np.isfinite(best_f):
            step = 2.0 * (hi - lo) / _SCAN_POINTS
            mu, val = _brent_max(c1, yt1, w1, c0, yt0, w0, theta,
                                 max(lo, best_x - step), min(hi, best_x + step),
                                 xtol, tol, max_iter)
            if np.isfinite(val) and val >= best_f:
                return mu, val, STATUS_OK
            return best_x, best_f, STATUS_OK
    return np.nan, _NEG_INF, STATUS_HULL


def logistic_irls(x, t, tol_score, tol_step, max_iter):
    """Logistic-regression MLE by Newton-Raphson with step halving.

    Returns (alpha, status, n_iter).  Convergence: max |score| < tol_score
    or relative coefficient change < tol_step.
    """
    n, p = x.shape
    alpha = np.zeros(p)
    u = np.zeros(n)
    ll = -(_softplus(u) - t * u).sum()
    eye = np.eye(p)
    for it in range(1, max_iter + 1):
        tau = expit(u)
        score = x.T @ (t - tau)
        if np.max(np.abs(score)) < tol_score:
            return alpha, STATUS_OK, it - 1
        wt = tau * (1.0 - tau)
        hess = x.T @ (x * wt[:, None])
        ridge = 1e-12 * max(np.trace(hess) / p, 1.0)
        delta = np.linalg.solve(hess + ridge * eye, score)
        s = 1.0
        for _ in range(40):
            alpha_new = alpha + s * delta
            u_new = x @ alpha_new
            ll_new = -(_softplus(u_new) - t * u_new).sum()
            if ll_new >= ll - 1e-13 * (1.0 + abs(ll)):
                break
            s *= 0.5
        rel_change = np.max(np.abs(s * delta)) / max(1.0, np.max(np.abs(alpha)))
        alpha, u, ll = alpha_new, u_new, ll_new
        if rel_change < tol_step:
            return alpha, STATUS_OK, it
    return alpha, STATUS_MAXITER, max_iter


def phi_score_hess(mc1, yt1, w1, mc0, yt0, w0, theta, phi):
    """Score and Hessian of the joint weighted-constraint objective.

    phi = (lam1[2], lam0[2], mu1); the objective is
    -sum log(1 + lam1 . a1_j) - sum log(1 + lam0 . a0_j) with
    a1_j = (mc1_j, yt1_j - mu1*w1_j), a0_j = (mc0_j, yt0_j - (mu1-theta)*w0_j).
    Returns (score, hess, dmin1, dmin0, value).
    """
    l11, l12, l01, l02, mu1 = phi
    b1 = yt1 - mu1 * w1
    d1 = 1.0 + l11 * mc1 + l12 * b1
    b0 = yt0 - (mu1 - theta) * w0
    d0 = 1.0 + l01 * mc0 + l02 * b0

    score = np.empty(5)
    hess = np.zeros((5, 5))
    dmin1 = d1.min()
    dmin0 = d0.min()
    if dmin1 <= 0.0 or dmin0 <= 0.0:
        return score, hess, dmin1, dmin0, _NEG_INF
    value = -np.log(d1).sum() - np.log(d0).sum()

    i1 = 1.0 / d1
    i0 = 1.0 / d0
    i1s = i1 * i1
    i0s = i0 * i0

    score[0] = -(mc1 * i1).sum()
    score[1] = -(b1 * i1).sum()
    score[2] = -(mc0 * i0).sum()
    score[3] = -(b0 * i0).sum()
    score[4] = l12 * (w1 * i1).sum() + l02 * (w0 * i0).sum()

    hess[0, 0] = (mc1 * mc1 * i1s).sum()
    hess[0, 1] = (mc1 * b1 * i1s).sum()
    hess[1, 1] = (b1 * b1 * i1s).sum()
    hess[2, 2] = (mc0 * mc0 * i0s).sum()
    hess[2, 3] = (mc0 * b0 * i0s).sum()
    hess[3, 3] = (b0 * b0 * i0s).sum()
    hess[0, 4] = -l12 * (w1 * mc1 * i1s).sum()
    hess[1, 4] = (w1 * i1).sum() - l12 * (w1 * b1 * i1s).sum()
    hess[2, 4] = -l02 * (w0 * mc0 * i0s).sum()
    hess[3, 4] = (w0 * i0).sum() - l02 * (w0 * b0 * i0s).sum()
    hess[4, 4] = l12 * l12 * (w1 * w1 * i1s).sum() + l02 * l02 * (w0 * w0 * i0s).sum()
    for i in range(5):
        for j in range(i):
            hess[i, j] = hess[j, i]
    return score, hess, dmin1, dmin0, value


def phi_newton(mc1, yt1, w1, mc0, yt0, w0, theta, phi0, tol, max_iter):
    """Damped Newton for the stationarity system of the joint objective.

    Backtracks on the score norm while keeping 1 + lam . a > 1/n_i in each
    arm.  Returns (phi, value, status, n_iter).
    """
    n1 = yt1.shape[0]
    n0 = yt0.shape[0]
    dmin1_req = 1.0 / n1
    dmin0_req = 1.0 / n0
    phi = phi0.copy()
    score, hess, dm1, dm0, value = phi_score_hess(mc1, yt1, w1, mc0, yt0, w0, theta, phi)
    if dm1 <= dmin1_req or dm0 <= dmin0_req:
        return phi, value, STATUS_HULL, 0
    snorm = np.max(np.abs(score))
    eye = np.eye(5)
    for it in range(1, max_iter + 1):
        if snorm < tol:
            return phi, value, STATUS_OK, it - 1
        ridge = 1e-12 * max(np.max(np.abs(np.diag(hess))), 1.0)
        try:
            step = np.linalg.solve(hess + ridge * eye, -score)
        except np.linalg.LinAlgError:
            return phi, value, STATUS_HULL, it
        t = 1.0
        accepted = False
        for _ in range(50):
            phi_new = phi + t * step
            s_new, h_new, dm1, dm0, v_new = phi_score_hess(
                mc1, yt1, w1, mc0, yt0, w0, theta, phi_new)
            if dm1 > dmin1_req and dm0 > dmin0_req:
                sn_new = np.max(np.abs(s_new))
                if sn_new <= (1.0 - 1e-4 * t) * snorm + 1e-13:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return phi, value, STATUS_MAXITER, it
        phi, score, hess, value, snorm = phi_new, s_new, h_new, v_new, sn_new
    return phi, value, STATUS_MAXITER, max_iter
