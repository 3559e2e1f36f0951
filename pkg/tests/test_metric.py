import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractop import library as L
from fractop.errors import ComparabilityFailure, DomainError, SamePoint
from fractop.metric import (MetricConstants, check_boundary_lemma, check_quasisymmetry, eta_modulus,
                            log_eta_modulus, metric_constants, rho, rho_comparability, sandwich_check, separation_prefix)
from fractop.symbolic_ifs import EvWord, eval_coding, format_word, lowest_coding, parse_word
from oracles import eta_terms


def w(s):
    return parse_word(s)


def test_separation_prefix_examples(S):
    sep = separation_prefix(S, w("1(1)"), w("2(2)"))
    assert sep.case == "II"
    assert rho(S, w("(1)"), w("(2)")) == 0.25
    sep = separation_prefix(S, w("12(2)"), w("13(3)"))
    assert sep.case == "II"
    sep = separation_prefix(S, w("1(2)"), w("2(2)"))
    assert sep.case == "III"
    assert rho(S, w("1(2)"), w("2(2)")) == 0.25


def test_separation_disjoint_case():
    C = L.cantor()
    sep = separation_prefix(C, w("(1)"), w("(2)"))
    assert sep.case == "I" and sep.mu == (1,) and sep.nu == (2,)
    assert rho(C, w("(1)"), w("(2)")) == pytest.approx(1 / 3)


def test_same_point_is_rejected(S):
    with pytest.raises(SamePoint):
        separation_prefix(S, w("1(2)"), w("2(1)"))
    assert rho(S, w("1(2)"), w("2(1)")) == 0.0


def words(N):
    sym = st.integers(1, N)
    return st.builds(lambda a, b: EvWord(tuple(a), tuple(b)),
                     st.lists(sym, max_size=5), st.lists(sym, min_size=1, max_size=3))


@given(words(3), words(3))
def test_rho_symmetric_and_separating(x, y):
    S = L.sierpinski()
    a, b = rho(S, x, y), rho(S, y, x)
    assert a == b
    same = lowest_coding(S, x) == lowest_coding(S, y)
    assert (a == 0) == same


def test_eta_terms_as_printed():
    # all parameters 1/2, s = t = 1: the terms are 4, 4, 16, 32, 32
    terms = eta_terms(0.5, 0.5, 0.5, 1.0, 1.0)
    assert eta_modulus(0.5, 0.5, 0.5, 1.0, 1.0) == pytest.approx(max(terms), rel=1e-14)
    assert max(terms) == pytest.approx(32.0)
    assert eta_modulus(0.5, 0.5, 0.5, 1.0, 0.0) == 0.0


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.2, 4.0))
def test_eta_increasing_and_vanishing(r, R, q, s):
    r, R = min(r, R), max(r, R)
    grid = [10.0 ** k for k in range(-6, 7)]
    logs = [log_eta_modulus(r, R, q, s, t) for t in grid]
    assert all(a < b for a, b in zip(logs, logs[1:]))
    assert log_eta_modulus(r, R, q, s, 1e-12) < logs[0]
    vals = [eta_modulus(r, R, q, s, t) for t in grid]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_eta_past_float_range():
    # r_sup close to 1 makes the drift exponent large
    assert eta_modulus(0.5, 0.9453125, 0.0625, 1.0, 1e6) == float("inf")
    assert math.isfinite(log_eta_modulus(0.5, 0.9453125, 0.0625, 1.0, 1e6))
    assert eta_modulus(0.5, 0.5, 0.5, 1.0, 2.0) > eta_modulus(0.5, 0.5, 0.5, 1.0, 1.0)


def test_eta_domain():
    with pytest.raises(DomainError):
        eta_modulus(0.5, 0.5, 0.5, 1.0, -1.0)
    with pytest.raises(DomainError):
        eta_modulus(1.5, 0.5, 0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        eta_modulus(0.5, 0.5, 0.5, 0.0, 1.0)


@pytest.mark.parametrize("make", [L.sierpinski, lambda: L.k_alpha(0.25),
                                  lambda: L.interval((0.5, 0.5)), L.cantor, L.vicsek])
def test_sandwich_holds(make):
    spec = make()
    consts = metric_constants(spec, 7)
    violations, worst = sandwich_check(spec, consts, samples=250, seed=1)
    assert violations == []
    assert worst <= consts.c3


def test_sandwich_constants_sierpinski(S):
    c = metric_constants(S, 7)
    assert c.A_star == c.B_star == 0.5
    assert c.c1 > 0 and c.c2 > 0 and c.c3 >= 1


def test_comparability_failure_has_witness(S):
    c = metric_constants(S, 7)
    tight = MetricConstants(**{**c.__dict__, "c3": 1.0})
    with pytest.raises(ComparabilityFailure) as err:
        rho_comparability(S, tight, samples=100)
    assert len(err.value.witness) == 2


def test_boundary_lemma(K):
    ok, counts = check_boundary_lemma(K, samples=200)
    assert ok
    assert counts["II"] + counts["III"] > 0


def test_quasisymmetry_sampled():
    F = L.interval((1 / 3,) * 3)
    G = L.interval((1 / 9, 7 / 9, 1 / 9))
    assert check_quasisymmetry(F, G, 2.0, samples=200) <= 1.0


def test_rho_against_distance_spot(S):
    x, y = w("1(3)"), w("2(3)")
    d = float(np.linalg.norm(eval_coding(S, x) - eval_coding(S, y)))
    assert 0 < rho(S, x, y) <= 4 * d
    assert format_word(separation_prefix(S, x, y).point) == "1(2)"
