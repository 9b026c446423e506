"""Numerical audit of the integral inequalities behind the regularity argument.

Every check returns an ``InequalityReport`` of the form ``lhs <= rhs``; an
inequality written the other way round is stored with its sides swapped.
All integrals use the grid quadrature and all gradients the grid's single
face-difference convention, so identities obtained by integration by parts
close to rounding and chain-rule identities close to O(h^2).

Notation used in the labels, for a pair (u, v) with parameters (lam, mu):

    A = int e^{u+v},   B = int e^{(u+v)/2},
    P = int e^{(u+v)/2} e^u,   Q = int e^{(u+v)/2} e^v,
    R = lam/mu + mu/lam.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .grid import dirichlet_energy, energy_form, integrate
from .solver import BlowUpError, gelfand
from .stability import stability_quadratic_form

__all__ = [
    "InequalityReport",
    "Step2Report",
    "RegularityReport",
    "LEMMA2_CONSTANT",
    "lemma2_ratio",
    "verify_lemma2",
    "verify_identity_a1",
    "chain_rule_identity",
    "verify_pointwise_young",
    "verify_a7",
    "verify_lemma2_chain",
    "verify_stability_fields",
    "verify_ordering",
    "compute_step2_report",
    "regularity_diagnostic",
    "GROWTH_THRESHOLD",
]

REL_TOL = 1e-8
# The Young step on the product bound holds with C = 32, and then so does the
# final e^{u+v} bound:
# 8 sqrt(lam mu)(lam+mu) A B <= lam mu A^2 + 16 (lam+mu)^2 B^2 and 64 lam mu <= 16 (lam+mu)^2.
LEMMA2_CONSTANT = 32.0
GROWTH_THRESHOLD = 1.5


@dataclass(frozen=True)
class InequalityReport:
    label: str
    lhs: float
    rhs: float
    context: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def satisfied(self):
        return bool(self.slack >= -REL_TOL * (1.0 + abs(self.rhs)))

    def to_dict(self):
        return {
            "label": self.label,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "context": dict(self.context),
            "details": dict(self.details),
        }


def _context(pair, **extra):
    ctx = {"lam": pair.lam, "mu": pair.mu, "dim": pair.grid.dim, "n": pair.grid.n}
    ctx.update(extra)
    return ctx


def _report(label, lhs, rhs, pair=None, details=None, **extra):
    ctx = _context(pair, **extra) if pair is not None else dict(extra)
    return InequalityReport(label, float(lhs), float(rhs), ctx, dict(details or {}))


def _ratio_R(pair):
    return pair.lam / pair.mu + pair.mu / pair.lam


def lemma2_ratio(pair):
    """int e^{u+v} / (|Omega| (lam/mu + mu/lam))."""
    grid = pair.grid
    return integrate(grid, np.exp(pair.u + pair.v)) / (grid.volume * _ratio_R(pair))


def verify_lemma2(pair, constant=LEMMA2_CONSTANT):
    """int e^{u+v} <= C |Omega| R for the given C; the empirical ratio is in ``details``."""
    grid = pair.grid
    lhs = integrate(grid, np.exp(pair.u + pair.v))
    scale = grid.volume * _ratio_R(pair)
    return _report("l1", lhs, constant * scale, pair,
                   {"ratio": lhs / scale, "constant": constant})


def chain_rule_identity(grid, v):
    """(int grad v . grad(e^v - 1), 4 int |grad(e^{v/2} - 1)|^2) for any Dirichlet field."""
    v = grid.check(v)
    return energy_form(grid, v, np.expm1(v)), 4.0 * dirichlet_energy(grid, np.expm1(v / 2))


def verify_identity_a1(pair):
    """The energy identity for v:

        lam int e^{u+v} >= lam int e^u (e^v - 1) = int grad v . grad(e^v - 1)
                        = 4 int |grad(e^{v/2} - 1)|^2.

    The report checks the outer inequality; ``details`` holds the middle
    terms and the relative errors of both equalities.
    """
    grid, u, v, lam = pair.grid, pair.u, pair.v, pair.lam
    total = lam * integrate(grid, np.exp(u + v))
    weighted = lam * integrate(grid, np.exp(u) * np.expm1(v))
    bilinear, chain = chain_rule_identity(grid, v)
    scale = max(abs(bilinear), 1e-300)
    return _report("a1", chain, total, pair, {
        "lam_int_eu_ev_minus_1": weighted,
        "grad_v_grad_ev": bilinear,
        "ibp_error": abs(weighted - bilinear) / scale,
        "chain_rule_error": abs(bilinear - chain) / scale,
        "middle_inequality_slack": total - weighted,
    })


def verify_pointwise_young(v, grid=None):
    """e^{v/2} <= e^v / 4 + 1 at every point; reports the worst point."""
    v = np.asarray(v, dtype=float)
    lhs = np.exp(v / 2)
    rhs = 0.25 * np.exp(v) + 1.0
    i = int(np.argmin(rhs - lhs))
    ctx = {} if grid is None else {"dim": grid.dim, "n": grid.n}
    return InequalityReport("young", float(lhs[i]), float(rhs[i]), ctx,
                            {"min_slack": float(rhs[i] - lhs[i]), "argmin": i})


def _moments(pair):
    grid, u, v = pair.grid, pair.u, pair.v
    half = np.exp((u + v) / 2)
    return {
        "A": integrate(grid, np.exp(u + v)),
        "B": integrate(grid, half),
        "P": integrate(grid, half * np.exp(u)),
        "Q": integrate(grid, half * np.exp(v)),
        "Bv": integrate(grid, half * np.exp(v / 2)),
        "Bu": integrate(grid, half * np.exp(u / 2)),
    }


def verify_a7(pair):
    """Cauchy-Schwarz:  (int e^{u+v})^2 <= int e^{(u+v)/2} e^u * int e^{(u+v)/2} e^v."""
    m = _moments(pair)
    return _report("a7", m["A"] ** 2, m["P"] * m["Q"], pair)


def verify_lemma2_chain(pair, nl=None, constant=LEMMA2_CONSTANT):
    """Every step of the e^{u+v} bound, from the stability inequality with
    e^{v/2} - 1 to the final estimate, on a converged stable pair."""
    nl = nl or gelfand()
    grid, u, v, lam, mu = pair.grid, pair.u, pair.v, pair.lam, pair.mu
    m = _moments(pair)
    A, B, P, Q, Bu, Bv = m["A"], m["B"], m["P"], m["Q"], m["Bu"], m["Bv"]
    s = math.sqrt(lam * mu)
    out = []

    lhs_v, energy_v = stability_quadratic_form(pair, nl, np.expm1(v / 2))
    lhs_u, energy_u = stability_quadratic_form(pair, nl, np.expm1(u / 2))
    out.append(_report("lemma1[e^(v/2)-1]", lhs_v, energy_v, pair))
    out.append(_report("lemma1[e^(u/2)-1]", lhs_u, energy_u, pair))
    out.append(_report("a2", 4 * lhs_v, lam * A, pair))
    out.append(_report("a2-expanded", 4 * s * Q - 8 * s * Bv, 4 * lhs_v, pair))
    out.append(_report("young-integrated", Bv, Q / 4 + B, pair))
    out.append(_report("a3", 2 * s * Q, lam * A + 8 * s * B, pair))
    out.append(_report("a4", 2 * s * P, mu * A + 8 * s * B, pair))
    a5_lhs = lam * mu * A**2 + 64 * lam * mu * B**2 + 8 * s * (lam + mu) * A * B
    out.append(_report("a5", 4 * lam * mu * P * Q, a5_lhs, pair))
    a6 = 2 * lam * mu * A**2 + constant * (lam + mu) ** 2 * B**2
    out.append(_report("a6", a5_lhs, a6, pair, {"constant": constant}))
    out.append(_report("a7", A**2, P * Q, pair))
    out.append(_report("a8", 2 * lam * mu * P * Q, constant * (lam + mu) ** 2 * B**2, pair,
                       {"constant": constant}))
    out.append(_report("a9", B**2, grid.volume * A, pair))
    out.append(_report("a9b", grid.volume * A, grid.volume * math.sqrt(P * Q), pair))
    out.append(_report("a9-final", math.sqrt(P * Q),
                       constant / 2 * (lam + mu) ** 2 / (lam * mu) * grid.volume, pair,
                       {"constant": constant}))
    out.append(verify_lemma2(pair, constant))
    return out


def verify_stability_fields(pair, fields, nl=None, label="lemma1"):
    """Stability inequality on each test field, with tolerance lhs <= rhs + 1e-6 (1 + rhs)."""
    nl = nl or gelfand()
    out = []
    for k, phi in enumerate(fields):
        lhs, rhs = stability_quadratic_form(pair, nl, phi)
        out.append(_report(f"{label}[{k}]", lhs, rhs + 1e-6 * (1 + rhs), pair,
                           {"energy": rhs}))
    return out


def verify_ordering(pair, slack=1e-10):
    """Maximum-principle ordering: v >= u when lam >= mu (u >= v otherwise)."""
    small, large = (pair.u, pair.v) if pair.lam >= pair.mu else (pair.v, pair.u)
    gap = float(np.min(large - small))
    return _report("ordering", 0.0, gap + slack, pair, {"min_gap": gap})


@dataclass(frozen=True)
class Step2Report:
    alpha: float
    epsilon: float
    X: float
    Y: float
    constant: float
    C1: float
    reports: tuple

    @property
    def satisfied(self):
        return all(r.satisfied for r in self.reports)

    def get(self, label):
        for r in self.reports:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "X": self.X,
            "Y": self.Y,
            "constant": self.constant,
            "C1": self.C1,
            "satisfied": self.satisfied,
            "reports": [r.to_dict() for r in self.reports],
        }


def compute_step2_report(pair, alpha, epsilon, constant=None, nl=None, cap=700.0):
    """The alpha-weighted estimates and their product inequality.

    ``constant`` is the C of the e^{u+v} bound, used in ``rhs2`` and in C1; by default
    the pair's own empirical ratio, which is the smallest admissible value
    for this pair. Two forms of the final inequality are reported:
    ``step2-final`` in its stated form, with C1 = C |Omega| (alpha/4 + eps) / eps,
    and ``step2-final-derived``, which carries the extra K^2 term produced
    by multiplying the two one-sided bounds, K = C |Omega| R / eps.
    """
    if not 0.5 < alpha < 4:
        raise ValueError("alpha must lie in (1/2, 4)")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    nl = nl or gelfand()
    grid, u, v, lam, mu = pair.grid, pair.u, pair.v, pair.lam, pair.mu
    top = max(np.max(u), np.max(v)) * (alpha + 1)
    if not np.isfinite(top) or top > cap:
        raise BlowUpError(f"blow-up: exponent {top:.6g} exceeds cap {cap:g}")
    s = math.sqrt(lam * mu)
    R = _ratio_R(pair)
    vol = grid.volume
    C = lemma2_ratio(pair) if constant is None else float(constant)
    ctx = {"alpha": alpha, "epsilon": epsilon}
    p, q = (2 * alpha - 1) / (2 * alpha), 1 / (2 * alpha)
    c = alpha / 4 + epsilon

    eau = np.exp(alpha * u)
    X = integrate(grid, np.exp((2 * alpha + 1) / 2 * u + v / 2))
    Y = integrate(grid, np.exp((2 * alpha + 1) / 2 * v + u / 2))
    Iuv = integrate(grid, eau * np.exp(v))
    Iuv_m1 = integrate(grid, np.expm1(alpha * u) * np.exp(v))
    Xu = integrate(grid, np.exp((alpha + 1) / 2 * u + v / 2))
    Iu = integrate(grid, np.exp(u))
    phi = np.expm1(alpha * u / 2)
    lemma1_lhs, energy = stability_quadratic_form(pair, nl, phi)
    # the analogous quantities with u and v exchanged, for Y
    Ivu = integrate(grid, np.exp(alpha * v) * np.exp(u))
    Yv = integrate(grid, np.exp((alpha + 1) / 2 * v + u / 2))
    Iv = integrate(grid, np.exp(v))

    reports = []

    def add(label, lhs, rhs, **details):
        reports.append(_report(label, lhs, rhs, pair, details, **ctx))

    add("lemma1[e^(au/2)-1]", lemma1_lhs, energy)
    add("alpha-energy", 4 / alpha * energy, mu * Iuv_m1,
        grad_u_grad_eau=energy_form(grid, u, np.expm1(alpha * u)))
    add("2161", lemma1_lhs, alpha / 4 * mu * Iuv_m1)
    add("2161b", s * X, alpha / 4 * mu * Iuv + 2 * s * Xu)
    add("rhs1", Iuv, X**p * Y**q)
    young_rhs = epsilon / 2 * math.sqrt(mu / lam) * Iuv + math.sqrt(lam / mu) / (2 * epsilon) * Iu
    add("rhs2-young", Xu, young_rhs)
    add("rhs2", Xu, epsilon / 2 * math.sqrt(mu / lam) * Iuv
        + math.sqrt(lam / mu) / (2 * epsilon) * C * vol * R, constant=C)
    K = C * vol * R / epsilon
    PXY, QXY = X**p * Y**q, Y**p * X**q
    add("step2-X", s * X, c * mu * PXY + lam * K)
    add("step2-Y", s * Y, c * lam * QXY + mu * K)
    # mirror of rhs1/rhs2 for the Y bound
    add("rhs1-sym", Ivu, Y**p * X**q)
    add("rhs2-sym", Yv, epsilon / 2 * math.sqrt(lam / mu) * Ivu
        + math.sqrt(mu / lam) / (2 * epsilon) * C * vol * R, constant=C)
    C1 = C * vol / epsilon * c
    lhs_final = (1 - c**2) * X * Y
    add("step2-final", lhs_final, C1 * R**2 * (1 + PXY + QXY), C1=C1)
    add("step2-final-derived", lhs_final,
        c * K * (mu / lam * PXY + lam / mu * QXY) + K**2, K=K)
    return Step2Report(float(alpha), float(epsilon), X, Y, C, C1, tuple(reports))


@dataclass(frozen=True)
class RegularityReport:
    """Quantities along an extremal approximation and their growth verdicts.

    ``ratios[key]`` holds q_{k+1} / q_k for successive members of the
    approximation sequence; a quantity is "diverging" when the last ratio is
    at least ``GROWTH_THRESHOLD``.
    """

    dim: int
    n_values: tuple
    quantities: dict
    ratios: dict
    verdicts: dict

    def to_dict(self):
        return {
            "dim": self.dim,
            "n_values": list(self.n_values),
            "quantities": {k: list(map(float, v)) for k, v in self.quantities.items()},
            "ratios": {k: list(map(float, v)) for k, v in self.ratios.items()},
            "verdicts": dict(self.verdicts),
        }


def regularity_diagnostic(ea, p_values=(2.0, 3.0, 4.5), threshold=GROWTH_THRESHOLD):
    """Boundedness diagnostics for the minimal solutions approaching the fold.

    Per member of the sequence: ||e^{u_n}||_inf (reported as ``sup_exp_u``;
    the sup of u_n itself grows only logarithmically when e^{u_n} blows up),
    sup u_n, sup v_n, int e^{p u_n} for every p, the Dirichlet energy of
    e^{v_n/2} - 1 and, for N >= 3, the L^{N/(N-2)} norm of e^{v_n}.
    """
    p_values = tuple(float(p) for p in p_values)
    if any(not 1 < p < 5 for p in p_values):
        raise ValueError("p values must lie in (1, 5)")
    pairs = ea.pairs
    if not pairs:
        raise ValueError("extremal approximation holds no converged pairs")
    grid = pairs[0].grid
    q = {
        "sup_exp_u": [float(np.exp(np.max(p.u))) for p in pairs],
        "sup_exp_v": [float(np.exp(np.max(p.v))) for p in pairs],
        "sup_u": [float(np.max(p.u)) for p in pairs],
        "sup_v": [float(np.max(p.v)) for p in pairs],
        "h1_exp_v_half": [dirichlet_energy(grid, np.expm1(p.v / 2)) for p in pairs],
    }
    for pv in p_values:
        q[f"int_exp_{pv:g}u"] = [integrate(grid, np.exp(pv * p.u)) for p in pairs]
    if grid.dim >= 3:
        r = grid.dim / (grid.dim - 2)
        q["lnorm_exp_v"] = [integrate(grid, np.exp(r * p.v)) ** (1 / r) for p in pairs]
    quantities = {k: np.asarray(val) for k, val in q.items()}
    ratios = {k: val[1:] / val[:-1] for k, val in quantities.items()}
    verdicts = {}
    for k, rat in ratios.items():
        if rat.size == 0:
            verdicts[k] = "undetermined"
        else:
            verdicts[k] = "diverging" if rat[-1] >= threshold else "bounded"
    return RegularityReport(grid.dim, tuple(ea.n_values), quantities, ratios, verdicts)
