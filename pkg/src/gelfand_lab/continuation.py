"""Existence curve of the coupled system in the (lam, mu) quadrant.

Directions are labelled by t = mu / lam and points on a ray by

    (lam, mu) = s (1, t) / |(1, t)|.

Along a ray the minimal solutions increase with s, so each converged solution
is a valid starting subsolution for the next larger s. The fold s* is the
supremum of the s for which the minimal solution exists; it is located by
bisection on existence.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from .solver import SolutionPair, SolverConfig, gelfand, minimal_solution
from .stability import IterationStall, principal_eigenpair

__all__ = [
    "InvalidBracket",
    "CurvePoint",
    "CurveTrace",
    "ExtremalApproximation",
    "ray_parameters",
    "sweep_ray",
    "fold_bisect",
    "find_fold",
    "trace_curve",
    "extremal_approximation",
    "aitken",
    "DEFAULT_N_SET",
    "THREADS_ENV",
]

THREADS_ENV = "GELFAND_LAB_THREADS"
BRACKET_RTOL = 1e-6
DEFAULT_N_SET = tuple(2**k for k in range(1, 9))


class InvalidBracket(ValueError):
    """The solver does not converge at s_lo or does converge at s_hi."""


def ray_parameters(t, s):
    """(lam, mu) at distance s along the ray of slope t."""
    if not t > 0:
        raise ValueError(f"ray slope t must be positive, got {t!r}")
    norm = math.hypot(1.0, t)
    return s / norm, s * t / norm


@dataclass(frozen=True, eq=False)
class CurvePoint:
    t: float
    lam_star: float
    mu_star: float
    s_lo: float
    s_hi: float
    bracket_width: float
    lambda1_at_fold: float
    pair_at_fold: SolutionPair = field(repr=False)


class CurveTrace(list):
    """List of CurvePoint sorted by t, plus the rays that failed (``errors``: t -> message)."""

    def __init__(self, points=(), errors=None):
        super().__init__(points)
        self.errors = dict(errors or {})


def _solve(grid, nl, t, s, config, start):
    lam, mu = ray_parameters(t, s)
    return minimal_solution(grid, lam, mu, nl, config, start=start)


def _uv(pair):
    return None if pair is None else (pair.u, pair.v)


def sweep_ray(grid, nl, t, s_max, n_geometric=6, n_uniform=20, config=SolverConfig()):
    """Minimal solutions along a ray, up to the first failure.

    The s values are ``n_geometric`` geometrically spaced points in
    [1e-3 s_max, s_max / n_uniform), then ``n_uniform`` uniform points up to
    s_max. Returns a list of (s, SolutionPair); when the sweep stops early the
    last entry is the first non-converged pair.
    """
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    first_uniform = s_max / n_uniform
    values = np.concatenate((
        np.geomspace(1e-3 * s_max, first_uniform, n_geometric, endpoint=False),
        np.linspace(first_uniform, s_max, n_uniform),
    ))
    out = []
    prev = None
    for s in values:
        pair = _solve(grid, nl, t, float(s), config, _uv(prev))
        out.append((float(s), pair))
        if not pair.converged:
            break
        prev = pair
    return out


def fold_bisect(grid, nl, t, bracket, tol=None, config=SolverConfig(), start=None,
                rtol=BRACKET_RTOL):
    """Bisect on existence of the minimal solution inside ``bracket = (s_lo, s_hi)``.

    ``tol`` is absolute in s and defaults to ``rtol * s_hi``. ``start`` may be a
    subsolution for s_lo (e.g. the minimal solution at a smaller s).
    """
    s_lo, s_hi = map(float, bracket)
    if not 0 < s_lo < s_hi:
        raise InvalidBracket(f"need 0 < s_lo < s_hi, got {bracket!r}")
    if tol is None:
        tol = rtol * s_hi
    low = _solve(grid, nl, t, s_lo, config, start)
    if not low.converged:
        raise InvalidBracket(f"no minimal solution at s_lo={s_lo!r} ({low.status})")
    if _solve(grid, nl, t, s_hi, config, _uv(low)).converged:
        raise InvalidBracket(f"minimal solution still exists at s_hi={s_hi!r}")
    while s_hi - s_lo > tol:
        mid = 0.5 * (s_lo + s_hi)
        pair = _solve(grid, nl, t, mid, config, _uv(low))
        if pair.converged:
            s_lo, low = mid, pair
        else:
            s_hi = mid
    try:
        lambda1 = principal_eigenpair(low, nl).lambda1
    except IterationStall:
        lambda1 = float("nan")
    lam, mu = ray_parameters(t, 0.5 * (s_lo + s_hi))
    return CurvePoint(float(t), lam, mu, s_lo, s_hi, s_hi - s_lo, lambda1, low)


def find_fold(grid, nl, t, s_max=None, tol=None, config=SolverConfig(), rtol=BRACKET_RTOL):
    """Sweep a ray until existence fails, then bisect.

    ``s_max`` defaults to a value above the fold of the scalar problem in
    dimensions up to 12 and is doubled until the sweep fails.
    """
    if s_max is None:
        s_max = 4.0 * (grid.dim + 1) * math.hypot(1.0, t) / math.sqrt(t)
    for _ in range(30):
        sweep = sweep_ray(grid, nl, t, s_max, config=config)
        s_last, last = sweep[-1]
        if not last.converged:
            break
        s_max *= 2.0
    else:
        raise InvalidBracket(f"no fold found along t={t!r}")
    if len(sweep) == 1:
        # failure at the first sample; restart from a smaller range
        return find_fold(grid, nl, t, s_max * 1e-3, tol, config, rtol)
    s_prev, prev = sweep[-2]
    return fold_bisect(grid, nl, t, (s_prev, s_last), tol, config, start=_uv(prev), rtol=rtol)


def _thread_count(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def trace_curve(grid, nl, t_values, s_max=None, tol=None, config=SolverConfig(), workers=None,
                rtol=BRACKET_RTOL):
    """Fold points for every direction in ``t_values``, sorted by t.

    Rays are independent and run on ``workers`` threads (default: the
    ``GELFAND_LAB_THREADS`` environment variable, else 1). A ray that
    raises is recorded in ``CurveTrace.errors`` instead of aborting the trace.
    """
    ts = sorted(float(t) for t in t_values)

    def work(t):
        try:
            return t, find_fold(grid, nl, t, s_max, tol, config, rtol), None
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return t, None, f"{type(exc).__name__}: {exc}"

    count = _thread_count(workers)
    if count == 1 or len(ts) < 2:
        results = [work(t) for t in ts]
    else:
        with ThreadPoolExecutor(max_workers=count) as pool:
            results = list(pool.map(work, ts))
    points = [cp for _, cp, _ in results if cp is not None]
    errors = {t: msg for t, _, msg in results if msg is not None}
    return CurveTrace(points, errors)


def aitken(x):
    """Aitken delta-squared estimate from the last three terms of ``x``.

    Returns nan when the last two increments do not contract (the sequence
    is not converging geometrically).
    """
    if len(x) < 3:
        return float("nan")
    x0, x1, x2 = (float(val) for val in x[-3:])
    d1, d2 = x1 - x0, x2 - x1
    if d1 == 0.0 or d2 == 0.0:
        return x2
    if abs(d2) >= abs(d1) or d1 * d2 < 0:
        return float("nan")
    return x2 - d2 * d2 / (d2 - d1)


@dataclass(frozen=True, eq=False)
class ExtremalApproximation:
    """Minimal solutions at (1 - 1/n)(lam*, mu*) for the n in ``n_values``.

    ``failures`` lists (n, status) for parameters where the solver did not
    converge, which only happens if the fold bracket is wrong.
    """

    curve_point: CurvePoint = field(repr=False)
    n_values: tuple
    pairs: tuple = field(repr=False)
    u_center: np.ndarray
    v_center: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    lambda1: np.ndarray
    u_star: float
    v_star: float
    failures: tuple = ()

    @property
    def stable(self):
        return bool(np.all(self.lambda1 >= -1e-8))


def extremal_approximation(cp, n_set=DEFAULT_N_SET, nl=None, config=SolverConfig()):
    n_set = tuple(int(n) for n in n_set)
    if any(n < 2 for n in n_set) or any(b <= a for a, b in zip(n_set, n_set[1:])):
        raise ValueError("n_set must be increasing with every n >= 2")
    pair0 = cp.pair_at_fold
    grid = pair0.grid
    nl = nl or gelfand()
    pairs, lam1, failures = [], [], []
    prev = None
    for n in n_set:
        scale = 1.0 - 1.0 / n
        pair = minimal_solution(grid, scale * cp.lam_star, scale * cp.mu_star, nl, config,
                                start=_uv(prev))
        if not pair.converged:
            failures.append((n, pair.status))
            break
        pairs.append(pair)
        lam1.append(principal_eigenpair(pair, nl).lambda1)
        prev = pair
    n_values = n_set[:len(pairs)]
    uc = np.array([p.u[0] for p in pairs])
    vc = np.array([p.v[0] for p in pairs])
    return ExtremalApproximation(
        curve_point=cp,
        n_values=n_values,
        pairs=tuple(pairs),
        u_center=uc,
        v_center=vc,
        sup_u=np.array([np.max(p.u) for p in pairs]),
        sup_v=np.array([np.max(p.v) for p in pairs]),
        lambda1=np.array(lam1),
        u_star=aitken(uc),
        v_star=aitken(vc),
        failures=tuple(failures),
    )
