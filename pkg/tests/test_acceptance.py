"""Acceptance gate. Every criterion records a single PASS/FAIL line."""

import time

import numpy as np
import pytest

import oracle
from gelfand_lab import cli
from gelfand_lab.continuation import extremal_approximation, find_fold, sweep_ray
from gelfand_lab.grid import build_radial_grid
from gelfand_lab.solver import gelfand
from gelfand_lab.stability import principal_eigenpair, random_dirichlet_fields
from gelfand_lab.verify import (compute_step2_report, lemma2_ratio, regularity_diagnostic,
                                verify_a7, verify_identity_a1, verify_ordering,
                                verify_pointwise_young, verify_stability_fields)

NL = gelfand()
RAYS = (0.25, 0.5, 1.0, 2.0, 4.0)
ALPHAS = (0.6, 1.0, 2.0, 3.0, 3.9)
EPSILONS = (0.01, 0.1)
TRACE_N = 1000
# absolute bracket width s_hi - s_lo at every fold of the traced branches
BRACKET_TOL = 1e-6
_cache = {}


def branches():
    """Swept branches and fold points for N in {1, 2, 3} and the five rays."""
    if "branches" not in _cache:
        out = []
        for dim in (1, 2, 3):
            grid = build_radial_grid(dim, TRACE_N)
            for t in RAYS:
                cp = find_fold(grid, NL, t, tol=BRACKET_TOL)
                sweep = sweep_ray(grid, NL, t, cp.s_lo, n_geometric=4, n_uniform=12)
                pairs = [p for _, p in sweep if p.converged] + [cp.pair_at_fold]
                out.append((dim, t, cp, pairs))
        _cache["branches"] = out
    return _cache["branches"]


def extremal(dim, n):
    key = ("extremal", dim, n)
    if key not in _cache:
        cp = find_fold(build_radial_grid(dim, n), NL, 1.0)
        ea = extremal_approximation(cp, nl=NL)
        _cache[key] = (cp, ea, regularity_diagnostic(ea, (2.0, 3.0, 4.5)))
    return _cache[key]


def test_criterion_1_fold_values(acceptance):
    targets = {1: (0.878458, 1e-3), 2: (2.0, 1e-2), 10: (16.0, 0.02 * 16.0)}
    parts, ok = [], True
    for dim, (target, tol) in targets.items():
        start = time.perf_counter()
        cp = find_fold(build_radial_grid(dim, 4000), NL, 1.0)
        elapsed = time.perf_counter() - start
        good = abs(cp.lam_star - target) <= tol and abs(cp.mu_star - target) <= tol
        ok &= good and elapsed < 60
        parts.append(f"N={dim} lambda*={cp.lam_star:.6f} (target {target}+-{tol:g}, {elapsed:.1f}s)")
    assert acceptance(1, ok, "; ".join(parts))


def test_criterion_2_dichotomy(acceptance):
    parts, ok = [], True
    for dim in (1, 3, 9):
        (_, a, ra), (_, b, rb) = extremal(dim, 2000), extremal(dim, 4000)
        change = abs(b.u_star - a.u_star) / abs(a.u_star)
        good = (np.isfinite(a.u_star) and change <= 0.02 and not a.failures and not b.failures
                and np.all(np.diff(b.u_center) > 0)
                and ra.verdicts["sup_exp_u"] == rb.verdicts["sup_exp_u"] == "bounded")
        ok &= good
        parts.append(f"N={dim} u*(0)={a.u_star:.4f}->{b.u_star:.4f} ({100 * change:.3f}%, "
                     f"shooting fold value {oracle.fold(dim)[1]:.4f})")
    for dim in (10, 11):
        growth = []
        for n in (2000, 4000):
            _, ea, reg = extremal(dim, n)
            growth.append(reg.ratios["sup_exp_u"][-1])
            ok &= reg.verdicts["sup_exp_u"] == "diverging" and not ea.failures
        parts.append(f"N={dim} last sup e^u_n growth {min(growth):.3f}x (>=1.5)")
    assert acceptance(2, ok, "; ".join(parts))


def test_criterion_3_stability(acceptance):
    min_lambda1, worst_excess, max_fold_lambda1, ok = np.inf, -np.inf, 0.0, True
    for dim, t, cp, pairs in branches():
        grid = pairs[0].grid
        random_fields = random_dirichlet_fields(grid, 100, seed=0)
        for pair in pairs:
            lam1 = principal_eigenpair(pair, NL).lambda1
            min_lambda1 = min(min_lambda1, lam1)
            ok &= lam1 > 0
            fields = [np.expm1(pair.v / 2)] + [np.expm1(a * pair.u / 2) for a in ALPHAS]
            for r in verify_stability_fields(pair, list(fields) + list(random_fields), NL):
                energy = r.details["energy"]
                # lhs <= rhs + 1e-6 (1 + rhs)  <=>  excess <= 1e-6
                excess = (r.lhs - energy) / (1 + energy)
                worst_excess = max(worst_excess, excess)
                ok &= excess <= 1e-6
        max_fold_lambda1 = max(max_fold_lambda1, abs(cp.lambda1_at_fold))
        ok &= abs(cp.lambda1_at_fold) <= 1e-2 and cp.bracket_width <= BRACKET_TOL
    summary = (f"min lambda1 below fold {min_lambda1:.3e} (>0); "
               f"max (lhs - rhs)/(1 + rhs) over stability-inequality tests {worst_excess:.3e} (<=1e-6); "
               f"max |lambda1| at {len(branches())} folds {max_fold_lambda1:.3e} (<=1e-2)")
    assert acceptance(3, ok, summary)


def test_criterion_4_lemma2(acceptance):
    worst = max(lemma2_ratio(p) for _, _, _, pairs in branches() for p in pairs)
    assert acceptance(4, worst < 100, f"suite maximum of int e^(u+v) / (|Omega| R) {worst:.4f} (<100)")


def test_criterion_5_step2(acceptance):
    labels = ("2161", "2161b", "rhs1", "rhs2", "step2-final")
    checked, failed, worst = 0, [], np.inf
    for dim, t, _, pairs in branches():
        for pair in pairs:
            for a in ALPHAS:
                for e in EPSILONS:
                    rep = compute_step2_report(pair, a, e, nl=NL)
                    for label in labels:
                        r = rep.get(label)
                        checked += 1
                        worst = min(worst, r.slack / (1 + abs(r.rhs)))
                        if not r.satisfied:
                            failed.append((dim, t, a, e, label))
    _, ea, reg = extremal(10, 4000)
    _, ea2, reg2 = extremal(10, 2000)
    integral_ok = reg.verdicts["int_exp_4.5u"] == reg2.verdicts["int_exp_4.5u"] == "bounded"
    integral_ok &= abs(reg.quantities["int_exp_4.5u"][-1] / reg2.quantities["int_exp_4.5u"][-1] - 1) < 0.01
    sup_ok = reg.verdicts["sup_exp_u"] == "diverging"
    ok = not failed and integral_ok and sup_ok
    summary = (f"{checked} checks, {len(failed)} violations, min relative slack {worst:.3e}; "
               f"N=10 int e^(4.5u_n) last growth {reg.ratios['int_exp_4.5u'][-1]:.3f}x "
               f"({reg.verdicts['int_exp_4.5u']}), sup e^u_n {reg.verdicts['sup_exp_u']}")
    assert acceptance(5, ok, summary)


def test_criterion_6_micro_suite(acceptance):
    # chain-rule equality of the energy identity on a converged pair
    errors = []
    for n in (500, 1000, 2000):
        grid = build_radial_grid(2, n)
        from gelfand_lab.solver import minimal_solution
        errors.append(verify_identity_a1(minimal_solution(grid, 1.5, 1.5, NL)).details["chain_rule_error"])
    rates = [errors[i] / errors[i + 1] for i in range(2)]
    a1_ok = all(3.5 <= r <= 4.5 for r in rates)

    rng = np.random.default_rng(2024)
    grid = build_radial_grid(3, 64)
    from gelfand_lab.solver import SolutionPair
    random_ok = True
    for _ in range(1000):
        u, v = rng.uniform(-10, 10, (2, grid.size))
        pair = SolutionPair(grid, u, v, 1.0, 1.0, True, 0.0)
        random_ok &= verify_a7(pair).satisfied and verify_pointwise_young(v).satisfied

    order_ok = all(verify_ordering(p).satisfied for _, _, _, pairs in branches() for p in pairs)

    folds = {(dim, t): cp for dim, t, cp, _ in branches()}
    sym = 0.0
    for dim in (1, 2, 3):
        for t in (0.25, 0.5):
            a, b = folds[(dim, t)], folds[(dim, 1 / t)]
            sym = max(sym, abs(a.lam_star / b.mu_star - 1), abs(a.mu_star / b.lam_star - 1))
    ok = a1_ok and random_ok and order_ok and sym <= 1e-6
    summary = (f"energy identity error ratios {rates[0]:.2f}, {rates[1]:.2f}; "
               f"Cauchy-Schwarz and Young on 1000 random fields {'ok' if random_ok else 'violated'}; "
               f"ordering {'ok' if order_ok else 'violated'}; fold symmetry {sym:.2e} (<=1e-6)")
    assert acceptance(6, ok, summary)


def test_criterion_7_determinism(acceptance, tmp_path):
    runs = [
        ["solve", "--dim", "3", "--n", "400", "--lambda", "2", "--mu", "1"],
        ["trace", "--dim", "1", "--n", "400", "--rays", "0.5", "1", "2"],
        ["verify", "--dim", "2", "--n", "400", "--lambda", "1", "--mu", "0.5"],
        ["extremal", "--dim", "3", "--n", "400", "--n-set", "2", "4", "8"],
    ]
    ok, compared = True, 0
    for argv in runs:
        outputs = []
        for k in range(2):
            out = tmp_path / f"{argv[0]}-{k}"
            ok &= cli.main(argv + ["--outdir", str(out)]) == 0
            outputs.append(out)
        for ext in ("json", "csv"):
            first = (outputs[0] / f"{argv[0]}.{ext}").read_bytes()
            ok &= first == (outputs[1] / f"{argv[0]}.{ext}").read_bytes()
            compared += 1
    assert acceptance(7, ok, f"{compared} artifact pairs byte-identical across repeated runs")
