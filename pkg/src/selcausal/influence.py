"""Plug-in influence vectors for the stacked constraint sums.

Each unit contributes a 6-vector whose components linearize the six
per-arm constraint averages around the truth, with correction terms that
propagate the estimation error of the logistic propensity coefficients
through the inverse information matrix.  Population expectations are
replaced by full-sample means with nuisances at their fitted values.

The propensity-weighted approach uses the middle four components (the two
model-calibration rows and the two parameter rows); the calibration-
constraint approach uses all six.
"""

import numpy as np

from .errors import NonConvergenceError


def influence_matrix(sample, ps, or_, mu1, theta):
    """n x 6 matrix of per-unit influence vectors evaluated at (mu1, theta)."""
    n = sample.n
    t = sample.t.astype(float)
    y = sample.y
    tau = ps.tau_hat
    xd = ps.design
    taubar = float(tau.mean())
    m1c = or_.m1_hat - or_.mbar1
    m0c = or_.m0_hat - or_.mbar0

    wt = tau * (1.0 - tau)
    d_mat = -(xd * wt[:, None]).T @ xd / n
    g_row = -taubar * ((1.0 - tau)[:, None] * xd).mean(axis=0)
    h_row = (wt[:, None] * xd).mean(axis=0)
    j_row = ((m1c * (1.0 - tau))[:, None] * xd).mean(axis=0)
    k_row = -((t * (1.0 - tau) * (y - mu1) / tau)[:, None] * xd).mean(axis=0)
    l_row = (1.0 - taubar) * (tau[:, None] * xd).mean(axis=0)
    m_row = ((tau * m0c)[:, None] * xd).mean(axis=0)
    n_row = (((1.0 - t) * tau * (y - mu1 + theta) / (1.0 - tau))[:, None] * xd).mean(axis=0)

    try:
        dinv_x = np.linalg.solve(d_mat, xd.T).T
    except np.linalg.LinAlgError:
        raise NonConvergenceError("singular propensity information matrix") from None

    u = t - tau
    rt1 = t / tau - 1.0
    rt0 = (1.0 - t) / (1.0 - tau) - 1.0
    b = np.empty((n, 6))
    b[:, 0] = u - rt1 * taubar + u * (dinv_x @ (g_row + h_row))
    b[:, 1] = rt1 * m1c + u * (dinv_x @ j_row)
    b[:, 2] = t * (y - mu1) / tau - u * (dinv_x @ k_row)
    b[:, 3] = -rt0 * (1.0 - taubar) - u + u * (dinv_x @ (l_row - h_row))
    b[:, 4] = rt0 * m0c - u * (dinv_x @ m_row)
    b[:, 5] = (1.0 - t) * (y - mu1 + theta) / (1.0 - tau) - u * (dinv_x @ n_row)
    return b


def centered_covariance(b):
    """n^-1 sum of outer products of the centered rows, symmetrized."""
    bc = b - b.mean(axis=0)
    omega = bc.T @ bc / b.shape[0]
    return 0.5 * (omega + omega.T)


def psd_sqrt(mat):
    """Symmetric PSD square root; negative eigenvalues floored at zero."""
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    vals = np.maximum(vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.T


def dominant_eigenvalue(mat):
    """Eigenvalue of largest magnitude and the runner-up magnitude."""
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    order = np.argsort(np.abs(eigs))
    return float(eigs[order[-1]]), float(abs(eigs[order[-2]]))
