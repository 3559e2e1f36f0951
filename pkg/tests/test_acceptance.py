"""One check per acceptance criterion, at the stated tolerance.

The run ends with an "acceptance criteria" section listing PASS/FAIL per
criterion (see conftest.py).
"""
import json
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from fractop import library as L
from fractop.automaton import (EXIT, build_automaton, check_surviving_time_lemma, classify_equivalence,
                               find_isomorphism)
from fractop.cli import main
from fractop.dendrite import (assign_weights, build_primary_arc_system, compatibility_sample,
                              dendrite_metric_check, dimension_trend)
from fractop.gasket import (augmentation_report, connectivity, gasket_assignment, uniform_assignment,
                            validate_gasket, verify_gasket_good, vertex_iteration)
from fractop.graphs import check_good_assignment, similarity_dimension, verify_compatibility
from fractop.metric import metric_constants, sandwich_check
from fractop.symbolic_ifs import parse_word
from oracles import gasket_path_values, moran_brentq, sierpinski_closed_form

FIX = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")


def fx(name):
    return os.path.abspath(os.path.join(FIX, name + ".json"))


# 1 ------------------------------------------------------------------------------

@pytest.mark.criterion(1, "closed form m=1..20 within 1e-9, strictly decreasing, < 5 s")
def test_c1_sierpinski_closed_form(capsys):
    start = time.perf_counter()
    code = main(["gasket", "dim", fx("sierpinski"), "-m", "1..20", "--scheme", "uniform", "--json"])
    elapsed = time.perf_counter() - start
    rows = json.loads(capsys.readouterr().out)["results"]["rows"]
    assert code == 0
    assert [r["m"] for r in rows] == list(range(1, 21))
    for r in rows:
        assert abs(r["dim"] - sierpinski_closed_form(r["m"])) <= 1e-9
    dims = [r["dim"] for r in rows]
    assert all(a > b for a, b in zip(dims, dims[1:]))
    assert elapsed < 5.0, elapsed


@pytest.mark.criterion(1, "literal m=10 value 1.340319 +- 1e-6 (closed form gives 1.3403681)")
@pytest.mark.xfail(strict=True, reason="the quoted value disagrees with log 63 / log 22 by 4.9e-5")
def test_c1_literal_m10_value():
    it = vertex_iteration(validate_gasket(L.sierpinski()), 10)
    dim = similarity_dimension(uniform_assignment(it).R)
    assert abs(dim - 1.340319) <= 1e-6


# 2 ------------------------------------------------------------------------------

@pytest.mark.criterion(2, "uniform Sierpinski m=1..5 good in exact arithmetic, < 2 s")
def test_c2_good_assignment():
    start = time.perf_counter()
    g = validate_gasket(L.sierpinski())
    for m in range(1, 6):
        it = vertex_iteration(g, m)
        wa = uniform_assignment(it).weights()
        assert wa.rational
        rep = check_good_assignment(it.spec, wa)
        assert rep["compatible"] and rep["edges_geodesic"], rep["witnesses"][:3]
        out = verify_gasket_good(it, uniform_assignment(it))
        assert set(out["corner_distances"].values()) == {"1"}
    assert time.perf_counter() - start < 2.0


# 3 ------------------------------------------------------------------------------

@pytest.mark.criterion(3, "D2=D1 on X1, D3=D2 on 1e4 pairs of X2: Sierpinski uniform m=1")
def test_c3_compatibility_sierpinski():
    it = vertex_iteration(validate_gasket(L.sierpinski()), 1)
    wa = uniform_assignment(it).weights()
    ok2, d2 = verify_compatibility(it.spec, wa, 2, return_details=True)
    ok3, d3 = verify_compatibility(it.spec, wa, 3, cap=10000, seed=0, return_details=True)
    assert ok2 and ok3, (d2, d3)
    # X2 has 123 vertices, so all 7503 pairs fit under the 1e4 sample cap
    assert d3["pairs"] == 7503


@pytest.mark.criterion(3, "D2=D1 on X1, D3=D2 on 1e4 pairs of X2: K_1/4 dendrite")
def test_c3_compatibility_dendrite():
    K = L.k_alpha(0.25)
    a = assign_weights(build_primary_arc_system(K), K, 2, 1e-3)
    r2 = compatibility_sample(a, 2, pairs=10000, tol=1e-12)
    r3 = compatibility_sample(a, 3, pairs=10000, seed=0, tol=1e-12)
    assert r2["ok"] and r3["ok"], (r2, r3)
    assert r3["pairs"] == 10000


# 4 ------------------------------------------------------------------------------

@pytest.mark.criterion(4, "surviving time = geometric separation depth, 200 pairs, depth 12")
@pytest.mark.parametrize("name", ["sierpinski", "k_quarter"])
def test_c4_surviving_time(name):
    spec = {"sierpinski": L.sierpinski, "k_quarter": lambda: L.k_alpha(0.25)}[name]()
    ok, rep = check_surviving_time_lemma(spec, build_automaton(spec), samples=200, depth=12, seed=0)
    assert ok and not rep["disagree"], rep["disagree"][:3]
    assert rep["agree"] + len(rep["inconclusive"]) == 200
    assert not rep["inconclusive"]


# 5 ------------------------------------------------------------------------------

@pytest.mark.criterion(5, "8 states, transitions, relabel isomorphism, gasket/dendrite non-isomorphism")
def test_c5_automaton_structure():
    S = L.sierpinski()
    A = build_automaton(S)
    assert len(A.states) == 8
    s12 = (parse_word("(1)"), parse_word("(2)"))
    assert s12 in A.states
    assert A.step(s12, 2, 1) == s12
    assert A.step(s12, 1, 2) == EXIT
    perm, iso = find_isomorphism(A, build_automaton(L.relabel(S, {1: 2, 2: 3, 3: 1})), allow_relabel=True)
    assert iso is not None
    assert find_isomorphism(A, build_automaton(L.k_alpha(0.25)), allow_relabel=True) == (None, None)


# 6 ------------------------------------------------------------------------------

@pytest.mark.criterion(6, "Lipschitz / Quasisymmetric(s=2, 1e-9) / Hoelder")
def test_c6_classification():
    I3 = L.interval((1 / 3,) * 3)
    assert classify_equivalence(I3, L.interval((1 / 3,) * 3))["verdict"] == "Lipschitz"
    q = classify_equivalence(I3, L.interval((1 / 9, 7 / 9, 1 / 9)))
    assert q["verdict"] == "Quasisymmetric" and abs(q["s"] - 2) <= 1e-9
    assert classify_equivalence(I3, L.interval((0.5, 1 / 3, 1 / 6)))["verdict"] == "Hoelder"


# 7 ------------------------------------------------------------------------------

@pytest.mark.criterion(7, "both distance sandwiches on 500 pairs, zero violations")
@pytest.mark.parametrize("name", ["sierpinski", "k_quarter", "interval", "cantor"])
def test_c7_sandwiches(name):
    spec = {"sierpinski": L.sierpinski, "k_quarter": lambda: L.k_alpha(0.25),
            "interval": lambda: L.interval((0.5, 0.5)), "cantor": L.cantor}[name]()
    consts = metric_constants(spec, 8)
    violations, worst = sandwich_check(spec, consts, samples=500, seed=0)
    assert violations == [], violations[:3]
    assert worst <= consts.c3


# 8 ------------------------------------------------------------------------------

@pytest.mark.criterion(8, "K_1/4: arcs stabilise, L(v)=1, axioms on 500 triples, s_m decreasing m=1..6, < 60 s")
def test_c8_dendrite_pipeline():
    start = time.perf_counter()
    K = L.k_alpha(0.25)
    system = build_primary_arc_system(K)
    assert system.rounds < 50 and len(system.arcs) >= 1
    a = assign_weights(system, K, 2, 1e-3)
    assert all(v == 1.0 for v in a.L.values()), a.L
    rep = dendrite_metric_check(a, 2, samples=500)
    assert rep["ok"], rep["witnesses"]
    assert rep["counts"]["triples"] == 500
    s = [r["s_m"] for r in dimension_trend(K, range(1, 7))]
    assert all(x > y for x, y in zip(s, s[1:]))
    assert s[5] < s[0]
    assert time.perf_counter() - start < 60.0


# 9 ------------------------------------------------------------------------------

@pytest.mark.criterion(9, "geodesic lemma values equal subgraph Dijkstra (float mode, 1e-12)")
@pytest.mark.parametrize("m", [1, 2, 3])
def test_c9_gasket_lemmas(m):
    g = validate_gasket(L.augmented_gasket())
    assert augmentation_report(g).ok
    it = vertex_iteration(g, m)
    ga = gasket_assignment(it)
    r = [g.spec.maps[g.corner_maps[k] - 1].ratio for k in (1, 2, 3)]
    ref = gasket_path_values(ga.N0, m, ga.s, *r)
    rep = verify_gasket_good(it, ga)
    tol = lambda x: 1e-12 * max(1.0, abs(x))
    assert abs(float(rep["cross_path"]["dijkstra"]) - ref["ab"]) <= tol(ref["ab"])
    assert float(rep["cross_path"]["min_over_pairs"]) >= ref["ab"] - 1e-12
    for d in rep["corner_paths"]["dijkstra_1"]:
        assert abs(float(d) - ref["v3_first"]) <= tol(ref["v3_first"])
    assert abs(float(rep["corner_paths"]["dijkstra_2"]) - ref["v3_second"]) <= tol(ref["v3_second"])


# 10 -----------------------------------------------------------------------------

@pytest.mark.criterion(10, "Moran solver: log3/log2 to 1e-12, residual <= 1e-10 on 100 vectors")
def test_c10_moran():
    assert abs(similarity_dimension([Fraction(1, 2)] * 3) - math.log(3) / math.log(2)) <= 1e-12
    rng = np.random.default_rng(0)
    for _ in range(100):
        rs = rng.uniform(0.01, 0.95, int(rng.integers(2, 9)))
        s = similarity_dimension(rs)
        assert abs(float((rs ** s).sum()) - 1) <= 1e-10
        assert abs(s - moran_brentq(rs)) <= 1e-9


# 11 -----------------------------------------------------------------------------

@pytest.mark.criterion(11, "Sierpinski connected; corner triangles '0 (Kovalev, cited)' with evidence")
def test_c11_connectivity():
    assert connectivity(validate_gasket(L.sierpinski()))["connected"]
    ct = connectivity(validate_gasket(L.corner_triangles(0.25)))
    assert not ct["connected"]
    assert ct["verdict"] == "0 (Kovalev, cited)"
    bounds = ct["totally_disconnected_evidence"]["component_diameter_bounds"]
    assert all(b2 < b1 for b1, b2 in zip(bounds, bounds[1:])) and bounds[-1] < 1e-3


# 12 -----------------------------------------------------------------------------

COMMANDS = [
    ["gasket", "dim", fx("sierpinski"), "-m", "1..20", "--scheme", "uniform"],
    ["graph", "refine", fx("sierpinski"), "-n", "3", "--compat"],
    ["automaton", "build", fx("sierpinski"), "--check-lemma", "--samples", "200", "--seed", "0"],
    ["automaton", "build", fx("k_quarter"), "--check-lemma", "--samples", "200", "--seed", "0"],
    ["classify", fx("interval_thirds"), fx("interval_squared")],
    ["metric", "check", fx("sierpinski"), "--samples", "500", "--seed", "0"],
    ["dendrite", "dim", fx("k_quarter"), "-m", "1..6"],
    ["gasket", "dim", fx("augmented_gasket"), "-m", "1..3", "--scheme", "general"],
    ["gasket", "connectivity", fx("corner_triangles")],
]


def _run(argv, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    proc = subprocess.run([sys.executable, "-m", "fractop.cli"] + argv + ["--json"],
                          capture_output=True, env=env, check=False)
    return proc.returncode, proc.stdout


@pytest.mark.criterion(12, "acceptance commands give byte-identical JSON across runs")
@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: " ".join(a[:2]))
def test_c12_determinism(argv):
    code1, out1 = _run(argv, 1)
    code2, out2 = _run(argv, 2)
    assert code1 == code2 == 0, out1[-400:]
    assert out1 == out2
    json.loads(out1)
