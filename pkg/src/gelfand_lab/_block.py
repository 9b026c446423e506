"""Interleaved banded algebra for the 2x2 block operator

    A = [[-Delta, -cu], [-cv, -Delta]]

on the unknowns (u_0, v_0, u_1, v_1, ..., u_n, v_n), with diagonal couplings
cu, cv >= 0. A is a Z-matrix, so its eigenvalue of smallest real part is
real with a positive eigenvector (the Perron root of -A shifted).
"""

import numpy as np
from scipy.linalg import solve_banded


def banded(grid, cu, cv, shift=0.0):
    """Band storage (2, 2) of A - shift I."""
    lower, diag, upper = grid.bands
    m = diag.size
    ab = np.zeros((5, 2 * m))
    ab[2, 0::2] = diag - shift
    ab[2, 1::2] = diag - shift
    ab[0, 2::2] = upper
    ab[0, 3::2] = upper
    ab[4, 0:-2:2] = lower
    ab[4, 1:-2:2] = lower
    ab[1, 1::2] = -cu
    ab[3, 0::2] = -cv
    return ab


def solve(grid, cu, cv, rhs, shift=0.0):
    ab = banded(grid, cu, cv, shift)
    return solve_banded((2, 2), ab, rhs, overwrite_ab=True, check_finite=False)


def interleave(a, b):
    out = np.empty(a.size + b.size)
    out[0::2] = a
    out[1::2] = b
    return out


def perron_root(grid, cu, cv, shift=None, tol=1e-10, max_iter=200):
    """Smallest real eigenvalue of A and its positive eigenvector.

    Noda iteration: inverse iteration whose shift is the Collatz-Wielandt
    lower bound  sigma + min_i x_i / y_i,  which stays below the root and
    increases monotonically to it. ``shift`` only sets the starting lower
    bound and defaults to the Gershgorin bound.

    Returns
    -------
    root, vector, bracket, iterations, converged
        ``bracket`` is the width of the Collatz-Wielandt enclosure of the
        root relative to ``1 + |root|``; it bounds ||A x - root x|| / ||x||
        componentwise.
    """
    m = grid.bands[1].size
    if shift is None:
        shift = -(1.0 + np.max(cu) + np.max(cv))
    x = np.ones(2 * m)
    sigma = float(shift)
    bracket = np.inf
    for k in range(1, max_iter + 1):
        try:
            y = solve(grid, cu, cv, x, sigma)
        except np.linalg.LinAlgError:
            # shift sits on the root to working precision
            return sigma, _polish(grid, cu, cv, x, sigma), 0.0, k, True
        if not np.all(y > 0):
            # rounding pushed the shift past the root
            return sigma, x, bracket, k, bracket <= tol
        ratio = x / y
        lo, hi = sigma + ratio.min(), sigma + ratio.max()
        bracket = (hi - lo) / (1.0 + abs(lo))
        x = y / np.max(y)
        sigma = lo
        if bracket <= tol:
            return sigma, _polish(grid, cu, cv, x, sigma), bracket, k, True
    return sigma, x, bracket, max_iter, False


def _polish(grid, cu, cv, x, root, steps=2):
    """A few inverse iterations just below a converged root sharpen the vector."""
    shift = root - 1e-9 * (1.0 + abs(root))
    for _ in range(steps):
        try:
            y = solve(grid, cu, cv, x, shift)
        except np.linalg.LinAlgError:
            break
        if not np.all(y > 0):
            break
        x = y / np.max(y)
    return x
