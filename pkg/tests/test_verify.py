import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gelfand_lab.continuation import extremal_approximation
from gelfand_lab.grid import build_radial_grid
from gelfand_lab.solver import BlowUpError, SolutionPair, minimal_solution
from gelfand_lab.verify import (InequalityReport, chain_rule_identity, compute_step2_report,
                                lemma2_ratio, regularity_diagnostic, verify_a7,
                                verify_identity_a1, verify_lemma2, verify_lemma2_chain,
                                verify_ordering, verify_pointwise_young)


def fixed_pair(grid, u, v, lam=1.0, mu=1.0):
    return SolutionPair(grid, np.asarray(u, float), np.asarray(v, float), lam, mu, True, 0.0)


def test_report_slack_semantics():
    r = InequalityReport("x", 1.0, 1.0 - 1e-9)
    assert r.slack == pytest.approx(-1e-9) and r.satisfied
    assert not InequalityReport("x", 1.0, 0.99).satisfied
    d = r.to_dict()
    assert d["satisfied"] == r.satisfied and d["slack"] == r.slack


def test_lemma2_zero_fields():
    g = build_radial_grid(2, 100)
    for lam, mu in [(1, 1), (3, 0.5)]:
        ratio = lemma2_ratio(fixed_pair(g, g.zeros(), g.zeros(), lam, mu))
        assert ratio == pytest.approx(1 / (lam / mu + mu / lam), rel=1e-10)
        assert ratio <= 0.5


def test_lemma2_symmetric_ratio(nl):
    g = build_radial_grid(1, 500)
    p = minimal_solution(g, 0.6, 0.2, nl)
    assert lemma2_ratio(p) == pytest.approx(lemma2_ratio(p.swapped()), rel=1e-12)
    assert verify_lemma2(p).satisfied


def test_lemma2_near_fold(fold_at):
    r = verify_lemma2(fold_at(1, 1000).pair_at_fold)
    assert r.satisfied and 0 < r.details["ratio"] < 100


def test_chain_rule_identity_manufactured():
    errors = []
    for n in (100, 200, 400):
        g = build_radial_grid(2, n)
        a, b = chain_rule_identity(g, 1 - g.radii**2)
        errors.append(abs(a - b))
    assert errors[0] / errors[1] == pytest.approx(4, rel=0.1)
    assert errors[1] / errors[2] == pytest.approx(4, rel=0.1)
    g = build_radial_grid(2, 50)
    assert chain_rule_identity(g, g.zeros()) == (0.0, 0.0)


def test_identity_a1_on_solution(fold_at):
    errs = []
    for n in (1000, 2000):
        cp = fold_at(2, n)
        r = verify_identity_a1(cp.pair_at_fold)
        assert r.satisfied and r.details["ibp_error"] < 1e-9
        errs.append(r.details["chain_rule_error"])
    assert errs[0] < 1e-3
    assert errs[1] < errs[0] / 2


def test_young_cases():
    g = build_radial_grid(1, 20)
    r = verify_pointwise_young(g.zeros())
    assert r.details["min_slack"] == pytest.approx(0.25)
    r = verify_pointwise_young(np.full(4, 2 * math.log(2)))
    assert abs(r.details["min_slack"]) < 1e-14 and r.satisfied


def test_a7_cases():
    g = build_radial_grid(3, 100)
    c = 0.7
    r = verify_a7(fixed_pair(g, np.full(g.size, c), np.full(g.size, c)))
    assert r.lhs == pytest.approx((g.volume * math.exp(2 * c)) ** 2, rel=1e-12)
    assert r.rhs == pytest.approx(r.lhs, rel=1e-12)
    r = verify_a7(fixed_pair(g, g.zeros(), 1 - g.radii**2))
    assert r.slack > 0


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 33, elements=st.floats(-20, 20)),
       arrays(np.float64, 33, elements=st.floats(-20, 20)))
def test_a7_and_young_on_arbitrary_fields(u, v):
    g = build_radial_grid(2, 31)
    assert verify_a7(fixed_pair(g, u, v)).satisfied
    assert verify_pointwise_young(v).satisfied


def test_lemma2_chain_near_fold(nl, fold_at):
    for t in (1.0, 4.0):
        cp = fold_at(1, 1000, t)
        for r in verify_lemma2_chain(cp.pair_at_fold, nl):
            assert r.satisfied, r


def test_ordering(nl):
    g = build_radial_grid(2, 300)
    assert verify_ordering(minimal_solution(g, 1.5, 0.5, nl)).satisfied
    assert verify_ordering(minimal_solution(g, 0.5, 1.5, nl)).satisfied
    bad = fixed_pair(g, 1 - g.radii**2, g.zeros(), 2.0, 1.0)
    assert not verify_ordering(bad).satisfied


def test_step2_zero_fields():
    g = build_radial_grid(2, 100)
    rep = compute_step2_report(fixed_pair(g, g.zeros(), g.zeros()), 2.0, 0.1)
    assert rep.X == pytest.approx(g.volume, rel=1e-12) and rep.Y == pytest.approx(g.volume, rel=1e-12)
    r = rep.get("2161")
    assert r.lhs == 0 and r.rhs == 0 and r.satisfied


def test_step2_symmetric_pair(nl):
    g = build_radial_grid(1, 400)
    rep = compute_step2_report(minimal_solution(g, 0.5, 0.5, nl), 3.0, 0.1)
    assert abs(rep.X - rep.Y) <= 1e-10 * rep.X
    assert rep.satisfied


def test_step2_recomputed_xy(nl):
    g = build_radial_grid(3, 300)
    p = minimal_solution(g, 2.0, 1.0, nl)
    a = 2.0
    rep = compute_step2_report(p, a, 0.01)
    w = g.quad_weights
    assert rep.X == pytest.approx(w @ np.exp((2 * a + 1) / 2 * p.u + p.v / 2), rel=1e-12)
    assert rep.Y == pytest.approx(w @ np.exp((2 * a + 1) / 2 * p.v + p.u / 2), rel=1e-12)
    for r in rep.reports:
        assert r.satisfied == (r.slack >= -1e-8 * (1 + abs(r.rhs)))


@pytest.mark.parametrize("alpha", [0.6, 1.0, 2.0, 3.0, 3.9])
@pytest.mark.parametrize("epsilon", [0.01, 0.1])
def test_step2_near_fold_3d(fold_at, alpha, epsilon):
    rep = compute_step2_report(fold_at(3, 1000).pair_at_fold, alpha, epsilon)
    for label in ("2161", "2161b", "rhs1", "rhs2", "step2-final", "step2-final-derived"):
        assert rep.get(label).satisfied, rep.get(label)


def test_step2_argument_checks():
    g = build_radial_grid(1, 20)
    p = fixed_pair(g, g.zeros(), g.zeros())
    with pytest.raises(ValueError):
        compute_step2_report(p, 0.5, 0.1)
    with pytest.raises(ValueError):
        compute_step2_report(p, 2.0, 0.0)
    hot = fixed_pair(g, np.full(g.size, 300.0), g.zeros())
    with pytest.raises(BlowUpError):
        compute_step2_report(hot, 3.0, 0.1)


def test_regularity_1d_bounded(fold_at):
    ea = extremal_approximation(fold_at(1, 1000))
    rep = regularity_diagnostic(ea, [2.0, 4.5])
    assert rep.verdicts["sup_exp_u"] == "bounded"
    assert rep.verdicts["int_exp_4.5u"] == "bounded"
    with pytest.raises(ValueError):
        regularity_diagnostic(ea, [5.0])
