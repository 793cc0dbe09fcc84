import copy
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inexact_sesop.core import BoundParams, Trace, TraceFormatError
from inexact_sesop.oracles import SphereNoiseOracle
from inexact_sesop.problems import generate_quadratic
from inexact_sesop.solvers import run_sesop
from inexact_sesop.theory import (
    check_appendixA_sums, check_lemma1, check_lemma5, check_omega_sequence,
    check_orthogonality, check_theorem_bound, delta_link_estimates, lemma5_rhs,
    measured_deltas, theorem1_bound, theorem2_bound,
)


@pytest.fixture(scope="module")
def exact_run():
    p = generate_quadratic(30, 1)
    return p, run_sesop(p, SphereNoiseOracle(p, 1e-2, seed=1), 300)


@pytest.fixture(scope="module")
def iterative_run():
    p = generate_quadratic(20, 2)
    return p, run_sesop(p, SphereNoiseOracle(p, 1e-3, seed=2), 200,
                        subsolver="iterative", delta4=1e-5)


def test_theorem1_hand_values():
    assert theorem1_bound(BoundParams(L=1, R=1), 2) == pytest.approx(2.0)
    # plateau 4 (R + 17) delta1 with R = 1, delta1 = 1e-2
    assert theorem1_bound(BoundParams(L=1, R=1, delta1=1e-2), 10**9) == pytest.approx(0.72, rel=1e-9)
    assert theorem1_bound(BoundParams(L=1, R=1, gamma=0.5), 2) == pytest.approx(8.0)


def test_theorem2_hand_values():
    p = BoundParams(L=1, R=1, delta1=1e-2, delta2=1e-4, delta3=1e-3, delta4=8e-4)
    expected = 8 / 64 + 11 * 1e-2 + 4 * 1e-2 + 1e-3 + 5 * math.sqrt(1e-4)
    assert theorem2_bound(p, 8) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        theorem2_bound(p, 7)
    with pytest.raises(ValueError):
        theorem1_bound(p, 0)


def test_bound_scalings():
    base = BoundParams(L=3, R=2)
    b = theorem1_bound(base, 5)
    assert theorem1_bound(base, 10) == pytest.approx(b / 4)
    assert theorem1_bound(BoundParams(L=6, R=2), 5) == pytest.approx(2 * b)
    assert theorem1_bound(BoundParams(L=3, R=4), 5) == pytest.approx(4 * b)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1), st.integers(8, 10**6))
def test_bounds_nonincreasing_in_k(L, R, d, k):
    p = BoundParams(L=L, R=R, delta1=d, delta2=d, delta3=d, delta4=d)
    assert theorem1_bound(p, k + 1) <= theorem1_bound(p, k)
    assert theorem2_bound(p, k + 1) <= theorem2_bound(p, k)


def test_theorem1_holds_and_is_falsifiable(exact_run):
    p, tr = exact_run
    params = BoundParams(L=p.L, R=tr.meta["R"], delta1=1e-2)
    assert check_theorem_bound(tr, params).passed
    bad = copy.deepcopy(tr)
    for r in bad.records[1:]:
        r.f_gap = 2 * theorem1_bound(params, r.k)
    rep = check_theorem_bound(bad, params)
    assert not rep.passed and rep.details["violations"] == len(tr) - 1


def test_unknown_optimum_is_not_checkable(exact_run):
    _, tr = exact_run
    blind = copy.deepcopy(tr)
    for r in blind.records:
        r.f_gap = None
    rep = check_theorem_bound(blind, BoundParams(L=1, R=1))
    assert rep.details == {"checkable": False}


def test_lemma1_and_purity(exact_run):
    _, tr = exact_run
    a, b = check_lemma1(tr, 1e-2), check_lemma1(tr, 1e-2)
    assert a.passed and a.to_json() == b.to_json()
    assert a.details["loose_variant"]["passed"]


def test_lemma1_detects_inflated_weights(exact_run):
    _, tr = exact_run
    bad = copy.deepcopy(tr)
    for r in bad.records:
        r.W_k *= 10
    assert not check_lemma1(bad, 1e-2).passed


def test_lemma5_constants():
    assert lemma5_rhs(1, 0.0, 1.0, 0.0) == pytest.approx(2 * 72)
    assert lemma5_rhs(1, 0.0, 1.0, 0.0, "statement") == pytest.approx(2 * 43)
    assert lemma5_rhs(1, 0.0, 0.0, 1.0) == pytest.approx(13 / 6 * 256)
    with pytest.raises(ValueError):
        lemma5_rhs(1, 0.0, 0.0, 0.0, "other")


def test_lemma5_holds(iterative_run):
    _, tr = iterative_run
    rep = check_lemma5(tr, 1e-3, measured_deltas(tr).delta2)
    assert rep.passed and "statement_variant" in rep.details


def test_missing_columns_raise():
    with pytest.raises(TraceFormatError):
        check_lemma1(Trace.from_csv("k,f_gap,grad_norm,g_norm,w_k,W_k,ip_d2,ip_d1,sub_gap,dist_to_opt\n"
                                    "0,1,1,1,1,,,,,\n1,1,1,1,1,1,,,,\n"), 0.0)


def test_appendix_sums_hand_values():
    full = check_appendixA_sums(5)
    assert not full.passed
    s4 = full.details["sum_w2"]
    # T=0: 1 against 1/3, a relative margin of exactly -2; T=1: 1 + w1^2 = 3.618 > 8/3
    assert s4["worst_k"] == 0 and s4["margin"] == pytest.approx(-2.0)
    assert s4["details"]["violations"] == 2
    assert full.details["sum_w"]["passed"] and full.details["sum_w_k2"]["passed"]
    assert check_appendixA_sums(1000, T_min=2).passed


def test_omega_sequence_check():
    rep = check_omega_sequence(10_000)
    assert rep.passed and rep.margin >= 0


def test_measured_deltas_exact_run(exact_run):
    p, tr = exact_run
    m = measured_deltas(tr)
    assert m.delta4 == 0.0
    assert m.delta2 >= 0 and m.delta3 >= 0


def test_delta_link_zero_accuracy(exact_run):
    p, tr = exact_run
    link = delta_link_estimates(tr, p.L, 0.0)
    assert (link.delta2_est, link.delta3_est) == (0.0, 0.0)


def test_delta_link_sqrt_scaling(iterative_run):
    p, tr = iterative_run
    a = delta_link_estimates(tr, p.L, 1e-6)
    b = delta_link_estimates(tr, p.L, 4e-6)
    assert b.delta2_est == pytest.approx(2 * a.delta2_est, rel=1e-12)
    assert b.delta3_est == pytest.approx(2 * a.delta3_est, rel=1e-12)


def test_delta_link_scalar_estimates_hold(iterative_run):
    p, tr = iterative_run
    link = delta_link_estimates(tr, p.L, 1e-5)
    assert link.delta2_measured <= link.delta2_est
    assert link.delta3_measured <= link.delta3_est
    assert link.report.details["d2_step_scaled"]["passed"]


def test_orthogonality_exact_run_early_steps():
    p = generate_quadratic(100, 0)
    tr = run_sesop(p, SphereNoiseOracle(p, 0.0), 100)
    assert check_orthogonality(tr).passed
