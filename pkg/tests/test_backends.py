"""The numba kernels and the pure-numpy fallback must agree."""

import numpy as np
import pytest

from selcausal.kernels import numba_backend as nb
from selcausal.kernels import numpy_backend as npb

BACKENDS = (nb, npb)


def test_dual_solve_agreement():
    rng = np.random.default_rng(3)
    n_converged = 0
    for _ in range(40):
        m = int(rng.integers(5, 200))
        r = int(rng.integers(1, 4))
        g = rng.standard_normal((m, r)) * rng.uniform(0.5, 3)
        lam_a, f_a, s_a, _ = npb.dual_solve(g, 1e-9, 100)
        lam_b, f_b, s_b, _ = nb.dual_solve(g, 1e-9, 100)
        assert s_a == s_b
        if s_a == npb.STATUS_OK:
            n_converged += 1
            assert lam_a == pytest.approx(lam_b, abs=1e-8)
            assert f_a == pytest.approx(f_b, abs=1e-10)
    assert n_converged > 20


def test_irls_agreement():
    rng = np.random.default_rng(5)
    for _ in range(15):
        n = int(rng.integers(30, 300))
        p = int(rng.integers(1, 5))
        x = np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))]) \
            if p > 1 else np.ones((n, 1))
        lp = x @ rng.standard_normal(p)
        t = (rng.random(n) < 1 / (1 + np.exp(-lp))).astype(float)
        if t.sum() in (0, n):
            continue
        a_np = npb.logistic_irls(x, t, 1e-8, 1e-10, 50)
        a_nb = nb.logistic_irls(x, t, 1e-8, 1e-10, 50)
        assert a_np[1] == a_nb[1]
        if a_np[1] == npb.STATUS_OK:
            assert a_np[0] == pytest.approx(a_nb[0], abs=1e-7)


def _instance(rng, n1, n0, k):
    c1 = rng.standard_normal((n1, k)) * 0.3
    c0 = rng.standard_normal((n0, k)) * 0.3
    w1 = 1 / rng.uniform(0.2, 0.8, n1)
    w0 = 1 / rng.uniform(0.2, 0.8, n0)
    yt1 = (rng.standard_normal(n1) * 2 + 5) * w1
    yt0 = (rng.standard_normal(n0) * 2 + 2) * w0
    return c1, yt1, w1, c0, yt0, w0


def test_pair_and_profile_agreement():
    rng = np.random.default_rng(11)
    for k in (1, 2):
        args = _instance(rng, 40, 60, k)
        for mu1, theta in ((5.0, 3.0), (4.5, 2.0)):
            v_np, s_np = npb.pair_loglik(*args, mu1, theta, 1e-9, 100)
            v_nb, s_nb = nb.pair_loglik(*args, mu1, theta, 1e-9, 100)
            assert s_np == s_nb
            assert v_np == pytest.approx(v_nb, abs=1e-9)
        p_np = npb.profile_mu1(*args, 3.0, 5.0, 0.8, 1e-6, 1e-9, 100, 6)
        p_nb = nb.profile_mu1(*args, 3.0, 5.0, 0.8, 1e-6, 1e-9, 100, 6)
        assert p_np[2] == p_nb[2]
        assert p_np[0] == pytest.approx(p_nb[0], abs=1e-6)
        assert p_np[1] == pytest.approx(p_nb[1], abs=1e-8)


def test_phi_newton_agreement():
    rng = np.random.default_rng(17)
    c1, yt1, w1, c0, yt0, w0 = _instance(rng, 40, 60, 1)
    mc1 = np.ascontiguousarray(c1[:, 0])
    mc0 = np.ascontiguousarray(c0[:, 0])
    phi0 = np.array([0.0, 0.0, 0.0, 0.0, 5.0])
    p_np = npb.phi_newton(mc1, yt1, w1, mc0, yt0, w0, 3.0, phi0, 1e-9, 100)
    p_nb = nb.phi_newton(mc1, yt1, w1, mc0, yt0, w0, 3.0, phi0, 1e-9, 100)
    assert p_np[2] == p_nb[2] == npb.STATUS_OK
    assert p_np[0] == pytest.approx(p_nb[0], abs=1e-8)
    assert p_np[1] == pytest.approx(p_nb[1], abs=1e-10)


def test_expit_agreement():
    u = np.linspace(-40, 40, 101)
    assert npb.expit(u) == pytest.approx(nb.expit(u), abs=1e-15)
