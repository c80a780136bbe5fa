"""Pure numpy/scipy implementations of the radial hot kernels.

Mirrors the signatures in ``_ckernels.pyx``; used when the extension is not
built or when ``BIKDV_PURE_PYTHON=1``.
"""
import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


def flux_apply(f, face, outer):
    """Return K f for the symmetric radial flux matrix K.

    ``face[i]`` couples nodes i and i+1; ``outer`` is the Dirichlet face
    coefficient (ghost value -f[n-1]).
    """
    out = np.empty_like(f)
    flux = face * (f[1:] - f[:-1])
    out[:-1] = flux
    out[-1] = -2.0 * outer * f[-1]
    out[1:] -= flux
    return out


def penta_factor(d0, d1, d2):
    """Cholesky factor of the SPD pentadiagonal matrix with diagonals d0, d1, d2."""
    n = d0.shape[0]
    ab = np.zeros((3, n))
    ab[2] = d0
    ab[1, 1:] = d1
    ab[0, 2:] = d2
    return cholesky_banded(ab, lower=False)


def penta_solve(factor, b):
    return cho_solve_banded((factor, False), b)


def moments(u, v, w):
    """Weighted sums (u^2, v^2, u^4, |v|^3, u^2 v)."""
    u2 = u * u
    av = np.abs(v)
    return (
        float(w @ u2),
        float(w @ (v * v)),
        float(w @ (u2 * u2)),
        float(w @ (av * av * av)),
        float(w @ (u2 * v)),
    )
