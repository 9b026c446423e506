"""Linearized stability of a pair (u, v).

The linearized operator is

    -Delta phi - mu g'(v) psi = lambda_1 phi
    -Delta psi - lam f'(u) phi = lambda_1 psi

with Dirichlet conditions. Its off-diagonal couplings are nonpositive, so the
principal eigenvalue is real with a positive eigenvector; it is computed by
Noda's shifted inverse iteration (see ``_block.perron_root``).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _block
from .grid import apply_laplacian, dirichlet_energy, integrate

__all__ = [
    "IterationStall",
    "EigenPair",
    "principal_eigenpair",
    "is_stable",
    "stability_quadratic_form",
    "random_dirichlet_fields",
]

TOL_EIG = 1e-8


class IterationStall(RuntimeError):
    """The eigen-iteration did not reach the requested residual."""


@dataclass(frozen=True, eq=False)
class EigenPair:
    lambda1: float
    phi1: np.ndarray = field(repr=False)
    psi1: np.ndarray = field(repr=False)
    residual: float
    bracket: float
    iterations: int


def _couplings(pair, nl):
    cu = pair.mu * nl.g_deriv(pair.v[:-1])
    cv = pair.lam * nl.f_deriv(pair.u[:-1])
    return cu, cv


def eigen_residual(pair, nl, lambda1, phi, psi):
    """Normwise backward error of (lambda1, phi, psi).

    ``max|(A - lambda1) x| / (||A||_inf ||x||_inf)`` with A the block operator
    and x = (phi, psi). The absolute residual has a rounding floor of order
    eps / h^2 and cannot be driven to a fixed tolerance on fine grids.
    """
    grid = pair.grid
    cu = pair.mu * nl.g_deriv(pair.v)
    cv = pair.lam * nl.f_deriv(pair.u)
    rphi = apply_laplacian(grid, phi) - cu * psi - lambda1 * phi
    rpsi = apply_laplacian(grid, psi) - cv * phi - lambda1 * psi
    lower, diag, upper = grid.bands
    row = diag.copy()
    row[:-1] += np.abs(upper)
    row[1:] += np.abs(lower)
    norm_a = np.max(row + np.maximum(cu[:-1], cv[:-1]))
    norm_x = max(np.max(np.abs(phi)), np.max(np.abs(psi)))
    worst = max(np.max(np.abs(rphi[:-1])), np.max(np.abs(rpsi[:-1])))
    return float(worst / (norm_a * norm_x))


def principal_eigenpair(pair, nl, tol=1e-10, max_iter=200):
    """Principal eigenvalue and positive eigenfunctions of the linearization at ``pair``.

    The pair need not solve the nonlinear system. Eigenfunctions are
    normalized so that ``integrate(phi1**2 + psi1**2) == 1``.

    Raises
    ------
    IterationStall
        If the Collatz-Wielandt enclosure of the eigenvalue is still wider
        than 1e-8 (relative) after ``max_iter`` iterations.
    """
    grid = pair.grid
    cu, cv = _couplings(pair, nl)
    root, x, bracket, k, ok = _block.perron_root(grid, cu, cv, tol=tol, max_iter=max_iter)
    if not ok and not bracket <= TOL_EIG:
        raise IterationStall(
            f"principal eigenvalue not resolved after {k} iterations "
            f"(relative enclosure {bracket:.3g})"
        )
    phi, psi = grid.zeros(), grid.zeros()
    phi[:-1], psi[:-1] = x[0::2], x[1::2]
    scale = np.sqrt(integrate(grid, phi**2 + psi**2))
    phi /= scale
    psi /= scale
    res = eigen_residual(pair, nl, root, phi, psi)
    return EigenPair(float(root), phi, psi, res, float(bracket), k)


def is_stable(pair, nl, tol_eig=TOL_EIG):
    return principal_eigenpair(pair, nl).lambda1 >= -tol_eig


def stability_quadratic_form(pair, nl, phi):
    """Both sides of  int sqrt(f'(u) g'(v)) phi^2 dx <= int |grad phi|^2 dx.

    Here f' and g' include the parameters: sqrt(lam mu f'(u) g'(v)).
    Nothing is asserted; callers compare ``lhs`` and ``rhs``.
    """
    grid = pair.grid
    phi = grid.check(phi)
    weight = np.sqrt(pair.lam * pair.mu * nl.f_deriv(pair.u) * nl.g_deriv(pair.v))
    return integrate(grid, weight * phi**2), dirichlet_energy(grid, phi)


def random_dirichlet_fields(grid, count, seed=0, modes=20):
    """Smooth radial test fields vanishing at r = 1.

    Cosine series  sum_k c_k cos((k - 1/2) pi r)  with c_k ~ N(0, 1) / k^2;
    each mode has zero slope at the origin and vanishes on the boundary.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    basis = np.cos(np.outer(grid.radii, (k - 0.5) * np.pi))
    coeffs = rng.standard_normal((count, modes)) / k**2
    fields = coeffs @ basis.T
    fields[:, -1] = 0.0
    return fields
