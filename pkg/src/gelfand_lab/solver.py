"""Nonlinear solves of the coupled system

    -Delta u = mu g(v),   -Delta v = lam f(u)   in the unit ball,   u = v = 0 on the boundary

for fixed (lam, mu). The Gelfand instance uses f = g = exp.

Two monotone iterations start from the subsolution (0, 0) and increase
pointwise to the minimal solution:

* ``"picard"``:  u_{k+1} = (-Delta)^{-1} mu g(v_k),  v_{k+1} = (-Delta)^{-1} lam f(u_k)
* ``"newton"``:  Newton steps taken from a subsolution. For convex f, g every
  iterate stays a subsolution below the minimal solution, as long as the
  Jacobian is a nonsingular M-matrix. A step with negative entries proves
  that it is not, i.e. no stable solution lies above the iterate.

Convergence is measured by the preconditioned residual
``(u, v) - (-Delta)^{-1}(mu g(v), lam f(u))``, which is the Picard increment and,
unlike the raw residual, is not polluted by the O(eps / h^2) rounding of the
difference operator.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from . import _block
from .grid import RadialGrid, apply_laplacian

__all__ = [
    "BlowUpError",
    "Nonlinearity",
    "gelfand",
    "SolverConfig",
    "SolutionPair",
    "residual",
    "preconditioned_residual",
    "newton_solve",
    "minimal_solution",
]


class BlowUpError(FloatingPointError):
    """A field exceeded the blow-up cap before an exponential was evaluated."""


@dataclass(frozen=True)
class Nonlinearity:
    """Nondecreasing C^1 pair (f, g) and their derivatives.

    The system uses ``lam * f(u)`` and ``mu * g(v)``; the parameters are not
    part of the descriptor.
    """

    f_value: Callable[[np.ndarray], np.ndarray]
    f_deriv: Callable[[np.ndarray], np.ndarray]
    g_value: Callable[[np.ndarray], np.ndarray]
    g_deriv: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"

    def validate(self, samples=None, rtol=1e-6):
        """Check monotonicity and derivative consistency on sample points."""
        if samples is None:
            samples = np.linspace(-5.0, 20.0, 101)
        s = np.asarray(samples, dtype=float)
        step = 1e-6 * np.maximum(1.0, np.abs(s))
        for name, fn, dfn in (("f", self.f_value, self.f_deriv),
                              ("g", self.g_value, self.g_deriv)):
            d = dfn(s)
            if np.any(d < 0):
                raise ValueError(f"{self.label}: {name}' is negative on the sample range")
            fd = (fn(s + step) - fn(s - step)) / (2 * step)
            if not np.allclose(fd, d, rtol=rtol, atol=0.0):
                raise ValueError(f"{self.label}: {name}' does not match finite differences")
        return True


def gelfand():
    """f(u) = e^u, g(v) = e^v."""
    return Nonlinearity(np.exp, np.exp, np.exp, np.exp, label="gelfand")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    newton_max_iter: int = 200
    monotone_max_iter: int = 100_000
    blowup_cap: float = 700.0
    min_step: float = 2.0**-20
    method: str = "newton"

    def __post_init__(self):
        if self.tol <= 0 or self.blowup_cap <= 0 or self.min_step <= 0:
            raise ValueError("tolerances and caps must be positive")
        if self.method not in ("newton", "picard"):
            raise ValueError(f"unknown monotone method {self.method!r}")


@dataclass(frozen=True, eq=False)
class SolutionPair:
    grid: RadialGrid = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    lam: float
    mu: float
    converged: bool
    residual_norm: float
    iterations: int = 0
    status: str = ""

    def swapped(self):
        """The pair under the symmetry (lam, mu, u, v) -> (mu, lam, v, u)."""
        return SolutionPair(self.grid, self.v, self.u, self.mu, self.lam,
                            self.converged, self.residual_norm, self.iterations, self.status)


def _capped(x, cap):
    top = np.max(x)
    if not np.isfinite(top) or top > cap:
        raise BlowUpError(f"blow-up: field value {top:.6g} exceeds cap {cap:g}")
    return x


def residual(pair, nl, cap=700.0):
    """Raw residuals (-Delta u - mu g(v), -Delta v - lam f(u)); zero on the boundary."""
    grid = pair.grid
    u, v = grid.check(pair.u), grid.check(pair.v)
    _capped(u, cap)
    _capped(v, cap)
    ru = apply_laplacian(grid, u) - pair.mu * nl.g_value(v)
    rv = apply_laplacian(grid, v) - pair.lam * nl.f_value(u)
    ru[-1] = rv[-1] = 0.0
    return ru, rv


def _sources(u, v, lam, mu, nl, cap):
    _capped(u, cap)
    _capped(v, cap)
    return mu * nl.g_value(v[:-1]), lam * nl.f_value(u[:-1])


def _picard_map(grid, u, v, lam, mu, nl, cap):
    su, sv = _sources(u, v, lam, mu, nl, cap)
    x = grid.solve_interior(np.column_stack((su, sv)))
    nu, nv = np.zeros_like(u), np.zeros_like(v)
    nu[:-1], nv[:-1] = x[:, 0], x[:, 1]
    return nu, nv


def preconditioned_residual(grid, u, v, lam, mu, nl, cap=700.0):
    """(u, v) minus one Picard image of (u, v)."""
    pu, pv = _picard_map(grid, u, v, lam, mu, nl, cap)
    return u - pu, v - pv


def _jacobian_step(grid, u, v, lam, mu, nl, gu, gv):
    """Solve J d = -(-Delta)(g_u, g_v), J the linearization at (u, v)."""
    rhs = _block.interleave(-apply_laplacian(grid, gu)[:-1], -apply_laplacian(grid, gv)[:-1])
    d = _block.solve(grid, mu * nl.g_deriv(v[:-1]), lam * nl.f_deriv(u[:-1]), rhs)
    du, dv = np.zeros_like(u), np.zeros_like(v)
    du[:-1], dv[:-1] = d[0::2], d[1::2]
    return du, dv


def _jacobian_root(grid, u, v, lam, mu, nl):
    root, *_ = _block.perron_root(grid, mu * nl.g_deriv(v[:-1]), lam * nl.f_deriv(u[:-1]))
    return root


def _norm(gu, gv):
    return float(max(np.max(np.abs(gu)), np.max(np.abs(gv))))


def _threshold(config, u, v):
    return config.tol * max(1.0, np.max(np.abs(u)), np.max(np.abs(v)))


def _initial(grid, initial):
    if initial is None:
        return grid.zeros(), grid.zeros()
    u, v = initial
    u, v = grid.check(u).copy(), grid.check(v).copy()
    u[-1] = v[-1] = 0.0
    return u, v


def newton_solve(grid, lam, mu, nl, initial=None, config=SolverConfig()):
    """Damped Newton iteration on the coupled system.

    Each step is halved until the preconditioned residual decreases. The
    last iterate is returned whether or not it converged; ``converged`` is
    set iff the residual drops below ``config.tol`` within
    ``config.newton_max_iter`` steps.
    """
    if lam <= 0 or mu <= 0:
        raise ValueError("lam and mu must be positive")
    cap = config.blowup_cap
    u, v = _initial(grid, initial)
    gu, gv = preconditioned_residual(grid, u, v, lam, mu, nl, cap)
    norm = _norm(gu, gv)
    status = "max-iter"
    k = 0
    while k < config.newton_max_iter:
        if norm < _threshold(config, u, v):
            status = "converged"
            break
        k += 1
        try:
            du, dv = _jacobian_step(grid, u, v, lam, mu, nl, gu, gv)
        except np.linalg.LinAlgError:
            status = "singular-jacobian"
            break
        step = 1.0
        accepted = False
        while step >= config.min_step:
            tu, tv = u + step * du, v + step * dv
            try:
                tgu, tgv = preconditioned_residual(grid, tu, tv, lam, mu, nl, cap)
            except BlowUpError:
                step *= 0.5
                continue
            tnorm = _norm(tgu, tgv)
            if tnorm < norm:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "stalled"
            break
        u, v, gu, gv, norm = tu, tv, tgu, tgv, tnorm
    else:
        if norm < _threshold(config, u, v):
            status = "converged"
    return SolutionPair(grid, u, v, float(lam), float(mu), status == "converged",
                        norm, k, status)


def minimal_solution(grid, lam, mu, nl, config=SolverConfig(), start=None,
                     method=None, callback=None):
    """Minimal solution by monotone iteration from a subsolution.

    Parameters
    ----------
    start : (u, v), optional
        A subsolution to start from, typically the minimal solution at
        componentwise smaller parameters. Defaults to (0, 0).
    method : {"newton", "picard"}, optional
        Overrides ``config.method``.
    callback : callable, optional
        Called as ``callback(k, u, v)`` on every iterate, including the start.

    Returns
    -------
    SolutionPair
        ``converged = False`` means the iteration blew up, lost monotonicity
        or ran out of iterations: (lam, mu) is classified as beyond the
        existence curve.
    """
    if lam <= 0 or mu <= 0:
        raise ValueError("lam and mu must be positive")
    method = method or config.method
    u, v = _initial(grid, start)
    if callback is not None:
        callback(0, u, v)
    if method == "picard":
        pair = _picard(grid, lam, mu, nl, config, u, v, callback)
        if pair.converged:
            polished = newton_solve(grid, lam, mu, nl, (pair.u, pair.v), config)
            if polished.converged:
                pair = SolutionPair(grid, polished.u, polished.v, pair.lam, pair.mu, True,
                                    polished.residual_norm,
                                    pair.iterations + polished.iterations, "converged")
        return pair
    return _monotone_newton(grid, lam, mu, nl, config, u, v, callback)


def _picard(grid, lam, mu, nl, config, u, v, callback):
    cap = config.blowup_cap
    change = np.inf
    for k in range(1, config.monotone_max_iter + 1):
        try:
            nu, nv = _picard_map(grid, u, v, lam, mu, nl, cap)
        except BlowUpError:
            return SolutionPair(grid, u, v, lam, mu, False, change, k, "blow-up")
        change = _norm(nu - u, nv - v)
        u, v = nu, nv
        if callback is not None:
            callback(k, u, v)
        if change < _threshold(config, u, v):
            return SolutionPair(grid, u, v, lam, mu, True, change, k, "converged")
    return SolutionPair(grid, u, v, lam, mu, False, change, k, "max-iter")


def _monotone_newton(grid, lam, mu, nl, config, u, v, callback):
    cap = config.blowup_cap
    norm = best = np.inf
    stalled = 0
    for k in range(1, config.monotone_max_iter + 1):
        try:
            gu, gv = preconditioned_residual(grid, u, v, lam, mu, nl, cap)
        except BlowUpError:
            return SolutionPair(grid, u, v, lam, mu, False, norm, k, "blow-up")
        norm = _norm(gu, gv)
        if norm < _threshold(config, u, v):
            return SolutionPair(grid, u, v, lam, mu, True, norm, k - 1, "converged")
        if norm < best:
            best, stalled = norm, 0
        else:
            stalled += 1
            if stalled >= 20:
                return SolutionPair(grid, u, v, lam, mu, False, norm, k, "stagnated")
        try:
            du, dv = _jacobian_step(grid, u, v, lam, mu, nl, gu, gv)
        except np.linalg.LinAlgError:
            return SolutionPair(grid, u, v, lam, mu, False, norm, k, "singular-jacobian")
        size = max(np.max(np.abs(du)), np.max(np.abs(dv)))
        lowest = min(np.min(du), np.min(dv))
        # a nonsingular M-matrix Jacobian maps the nonnegative rhs to d >= 0;
        # negative entries are either rounding noise or proof that it is not one
        if lowest < -1e-3 * size and _jacobian_root(grid, u, v, lam, mu, nl) <= 0.0:
            return SolutionPair(grid, u, v, lam, mu, False, norm, k, "lost-monotonicity")
        u = u + np.maximum(du, 0.0)
        v = v + np.maximum(dv, 0.0)
        if callback is not None:
            callback(k, u, v)
    return SolutionPair(grid, u, v, lam, mu, False, norm, k, "max-iter")
