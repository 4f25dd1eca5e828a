"""Numeric kernel backend selection.

The hot inner loops (empirical-likelihood dual solves, the joint
Newton system, logistic IRLS, golden-section profiling) exist twice:
a numba-jitted backend and a pure-numpy fallback with identical
semantics.  The active backend is chosen once at import time via the
``SELCAUSAL_BACKEND`` environment variable:

    SELCAUSAL_BACKEND=numba   require numba (ImportError if missing)
    SELCAUSAL_BACKEND=numpy   force the pure-numpy fallback
    unset / auto              numba when importable, else numpy

``benchmarks/bench_kernels.py`` compares the two.
"""

import os

STATUS_OK = 0
STATUS_HULL = 1
STATUS_MAXITER = 2

_choice = os.environ.get("SELCAUSAL_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"SELCAUSAL_BACKEND must be 'numba', 'numpy' or 'auto', got {_choice!r}")

if _choice == "numpy":
    from . import numpy_backend as _impl
    BACKEND = "numpy"
elif _choice == "numba":
    from . import numba_backend as _impl
    BACKEND = "numba"
else:
    try:
        from . import numba_backend as _impl
        BACKEND = "numba"
    except ImportError:
        from . import numpy_backend as _impl
        BACKEND = "numpy"

expit = _impl.expit
dual_solve = _impl.dual_solve
dual_value_at = _impl.dual_value_at
pair_loglik = _impl.pair_loglik
profile_mu1 = _impl.profile_mu1
logistic_irls = _impl.logistic_irls
phi_score_hess = _impl.phi_score_hess
phi_newton = _impl.phi_newton
