import dataclasses

import pytest

from fractop import library as L
from fractop.dendrite import (RecursiveMetric, arc_chain, assign_weights, build_primary_arc_system,
                              certify_dendrite, compatibility_sample, dendrite_graph,
                              dendrite_metric_check, dimension_trend, median, solve_s_m)
from fractop.errors import AssignmentInfeasible, DomainError, NotDendrite, SamePoint
from fractop.symbolic_ifs import format_word, parse_word
from oracles import k_quarter_dams


def w(s):
    return parse_word(s)


@pytest.fixture(scope="module")
def Ksys():
    K = L.k_alpha(0.25)
    return K, build_primary_arc_system(K)


@pytest.fixture(scope="module")
def Vsys():
    V = L.vicsek()
    return V, build_primary_arc_system(V)


# certificate -------------------------------------------------------------------

def test_certificate_accepts_dendrites(K):
    certify_dendrite(K, 3)
    certify_dendrite(L.vicsek(), 2)
    certify_dendrite(L.interval((0.5, 0.5)), 5)


def test_certificate_finds_cycle(S):
    with pytest.raises(NotDendrite) as err:
        certify_dendrite(S, 2)
    cyc = err.value.witness
    assert cyc[0] == cyc[-1] and len(cyc) >= 4


def test_certificate_rejects_disconnected():
    with pytest.raises(NotDendrite):
        certify_dendrite(L.cantor(), 2)


# arcs and branch points ----------------------------------------------------------------

def test_arc_chain_examples(K):
    ch = arc_chain(K, w("(1)"), w("(3)"))
    assert ch.cylinders == [(1,), (3,)]
    assert [format_word(p) for p in ch.breakpoints] == ["1(3)"]
    ch = arc_chain(K, w("(1)"), w("4(3)"))
    assert ch.cylinders == [(1,), (4,)]
    assert arc_chain(K, w("(1)"), w("1(3)")).cylinders == [(1,)]
    with pytest.raises(SamePoint):
        arc_chain(K, w("3(1)"), w("1(3)"))


def test_arc_chain_is_finer_at_depth(K):
    ch = arc_chain(K, w("(1)"), w("(3)"), level=2)
    assert len(ch.fine) == 4
    assert ch.cylinders == [(1,), (3,)]


def test_medians(K):
    assert median(K, w("(1)"), w("(3)"), w("4(3)")) == w("1(3)")
    assert median(K, w("(1)"), w("1(3)"), w("12(3)")) == w("11(3)")
    assert median(K, w("(1)"), w("(3)"), w("(3)")) == w("(3)")
    V = L.vicsek()
    assert median(V, w("(1)"), w("(2)"), w("(3)")) == w("(5)")


def test_primary_arc_systems(Ksys, Vsys):
    K, ks = Ksys
    assert [format_word(p) for p in ks.pstar] == ["(1)", "(3)"]
    assert ks.rules == {0: [(1, 0), (3, 0)]}
    V, vs = Vsys
    assert [format_word(p) for p in vs.ramification] == ["(5)"]
    assert len(vs.arcs) == 4
    assert vs.rules[0] == [(1, 0), (1, 3), (5, 0)]
    assert vs.arc_path(vs.pstar[0], vs.pstar[1]) == [0, 1]
    I = L.interval((0.5, 0.5))
    assert len(build_primary_arc_system(I).arcs) == 1


# weights ---------------------------------------------------------------------------

def test_k_assignment_classes(Ksys):
    K, ks = Ksys
    a = assign_weights(ks, K, 2, 1e-3)
    counts = a.to_dict()["counts"]
    assert counts == {"boundary": 2, "private": 2, "shared": 12}
    assert a.L == {0: pytest.approx(1.0, abs=1e-15)}
    assert a.private_values[0] == (2, pytest.approx(0.25))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_s_m_matches_closed_form(Ksys, m):
    K, ks = Ksys
    a = assign_weights(ks, K, m, 1e-3)
    sol = solve_s_m(a)
    assert sol["s_m"] == pytest.approx(k_quarter_dams(m, 1e-3), abs=1e-9)
    assert sol["moran_cross_check"] == pytest.approx(sol["s_m"], abs=1e-9)


def test_interval_has_dimension_one():
    I = L.interval((0.5, 0.5))
    a = assign_weights(build_primary_arc_system(I), I, 2, 0.1)
    assert solve_s_m(a)["s_m"] == pytest.approx(1.0, abs=1e-9)


def test_vicsek_assignments(Vsys):
    V, vs = Vsys
    with pytest.raises(AssignmentInfeasible):
        assign_weights(vs, V, 1, 1e-3)
    a = assign_weights(vs, V, 2, 1e-3)
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in a.L.values())
    assert a.private_values[0][1] == pytest.approx((1 - 2 / 9 - 1e-3) / 6)
    with pytest.raises(AssignmentInfeasible):
        assign_weights(vs, V, 2, 0.9, auto_halve=False)
    h = assign_weights(vs, V, 2, 0.9)
    assert h.halvings == 1 and h.delta == 0.45


def test_assignment_domain(Ksys):
    K, ks = Ksys
    with pytest.raises(DomainError):
        assign_weights(ks, K, 2, 1.5)
    with pytest.raises(DomainError):
        assign_weights(ks, K, 2, 0.1, c=0)


def test_smaller_delta_lowers_s(Vsys):
    V, vs = Vsys
    big = solve_s_m(assign_weights(vs, V, 2, 1e-2))["s_m"]
    small = solve_s_m(assign_weights(vs, V, 2, 5e-3))["s_m"]
    assert small < big


def test_trend_decreases():
    rows = dimension_trend(L.k_alpha(0.25), range(1, 5))
    s = [r["s_m"] for r in rows]
    assert all(a > b for a, b in zip(s, s[1:]))
    assert all(x > 1 for x in s)
    rows = dimension_trend(L.vicsek(), [2, 3])
    assert rows[0]["s_m"] > rows[1]["s_m"]


# the metric ------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2])
def test_metric_check_k(Ksys, n):
    K, ks = Ksys
    a = assign_weights(ks, K, 2, 1e-3)
    rep = dendrite_metric_check(a, n, samples=300)
    assert rep["ok"], rep["witnesses"]
    assert rep["counts"]["recursive_pairs"] == 300


def test_metric_check_vicsek(Vsys):
    V, vs = Vsys
    a = assign_weights(vs, V, 2, 1e-3)
    assert dendrite_metric_check(a, 1, samples=200)["ok"]
    assert compatibility_sample(a, 1)["ok"]


def test_recursive_matches_graph_on_arc(Ksys):
    K, ks = Ksys
    a = assign_weights(ks, K, 2, 1e-3)
    spec = a.system.spec
    rec = RecursiveMetric(a)
    G = dendrite_graph(a, 2)
    x, y = a.system.pstar
    assert rec(x, y, 2) == pytest.approx(1.0, abs=1e-12)
    assert G.distance(x, y) == pytest.approx(1.0, abs=1e-12)
    assert rec(x, x, 2) == 0.0
    assert len(G.vertices) > spec.N


def test_unbalanced_weights_break_compatibility(Ksys):
    K, ks = Ksys
    a = assign_weights(ks, K, 2, 1e-3)
    R = list(a.R)
    for i, cls in a.classes.items():
        if cls.startswith("private"):
            R[i - 1] *= 0.9
    broken = dataclasses.replace(a, R=R)
    rep = dendrite_metric_check(broken, 1, samples=200)
    assert not rep["ok"]
    assert {x["kind"] for x in rep["witnesses"]} & {"compatibility", "recursive"}
    assert not compatibility_sample(broken, 1)["ok"]
