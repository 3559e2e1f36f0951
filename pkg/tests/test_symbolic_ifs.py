import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractop import library as L
from fractop.errors import InputError, InvalidWord, NotPcf, RewriteOverflow, ValidationError
from fractop.symbolic_ifs import (EvWord, IfsSpec, Identification, Similitude, coding_class,
                                  compute_post_critical, eval_coding, format_word, lowest_coding,
                                  parse_word, power_spec, pull_back, recode_with_prefix_code,
                                  same_point, verify_sic_asc)
from oracles import point_by_truncation


def words(N):
    sym = st.integers(1, N)
    return st.builds(lambda a, b: EvWord(tuple(a), tuple(b)),
                     st.lists(sym, max_size=6), st.lists(sym, min_size=1, max_size=3))


# words -------------------------------------------------------------------------

def test_normal_form_rotates_and_shortens():
    assert EvWord((1, 2), (1, 2)) == EvWord((), (1, 2))
    assert EvWord((), (3, 3, 3)).per == (3,)
    assert EvWord((2, 1), (2, 1)) == EvWord((), (2, 1))
    assert EvWord((1, 2, 3), (2, 3)) == EvWord((1,), (2, 3))


def test_parse_and_format():
    w = parse_word("12(3)")
    assert (w.pre, w.per) == ((1, 2), (3,))
    assert format_word(parse_word("1,12(3)")) == "1,12(3)"
    with pytest.raises(InputError):
        parse_word("12")


@given(words(4))
def test_format_parse_roundtrip(w):
    assert parse_word(format_word(w)) == w


@given(words(3), st.integers(0, 8))
def test_shift_undoes_prepend(w, n):
    head = w.head(n)
    assert w.shift(n).prepend(head) == w
    assert all(w.symbol(k) == head[k] for k in range(n))


@given(words(3), words(3))
def test_order_is_lexicographic_on_long_heads(a, b):
    n = max(len(a.pre), len(b.pre)) + 6 * max(len(a.per), len(b.per))
    if a != b:
        assert (a < b) == (a.head(n) < b.head(n))


# maps --------------------------------------------------------------------------

def test_similitude_compose_matches_application():
    f = Similitude(0.5, 0.3, True, (0.2, -0.1))
    g = Similitude(0.25, -1.1, False, (1.0, 0.5))
    p = np.array([[0.3, 0.7], [-1.0, 2.0]])
    assert np.allclose(f.compose(g)(p), f(g(p)))
    assert np.allclose(f.inverse_apply(f(p)), p)
    assert np.allclose(f(f.fixed_point()), f.fixed_point())


def test_spec_rejects_bad_input():
    with pytest.raises(ValidationError):
        IfsSpec([Similitude(1.0)])
    with pytest.raises(ValidationError):
        IfsSpec([Similitude(0.5), Similitude(0.5)], [Identification(1, 1, EvWord(), EvWord())])
    with pytest.raises(InvalidWord):
        IfsSpec([Similitude(0.5)], [Identification(1, 2, EvWord(), EvWord())])


def test_json_roundtrip_keeps_digest(S, tmp_path):
    import json
    p = tmp_path / "s.json"
    p.write_text(json.dumps(S.to_dict()))
    T = IfsSpec.load(p)
    assert T.digest() == S.digest()
    assert len(S.digest()) == 64


# codings -----------------------------------------------------------------------

def test_eval_coding_examples(S, K):
    assert np.allclose(eval_coding(S, parse_word("1(2)")), [0.5, 0.0])
    assert np.allclose(eval_coding(K, parse_word("3(1)")), [0.5, 0.0])
    assert np.allclose(eval_coding(K, parse_word("4(3)")), [0.5, 0.25])


@pytest.mark.parametrize("name", ["sierpinski", "k_quarter", "vicsek"])
@given(data=st.data())
def test_eval_coding_matches_truncated_iteration(name, data):
    spec = {"sierpinski": L.sierpinski, "k_quarter": lambda: L.k_alpha(0.25), "vicsek": L.vicsek}[name]()
    w = data.draw(words(spec.N))
    assert np.allclose(eval_coding(spec, w), point_by_truncation(spec, w), atol=1e-12)


def test_lowest_coding_examples(S, K):
    assert lowest_coding(S, parse_word("2(1)")) == parse_word("1(2)")
    assert lowest_coding(K, parse_word("3(1)")) == parse_word("1(3)")
    assert lowest_coding(K, parse_word("4(1)")) == parse_word("1(3)")
    assert len(coding_class(K, parse_word("1(3)"))) == 4


@pytest.mark.parametrize("make", [L.sierpinski, lambda: L.k_alpha(0.25), L.vicsek])
@given(data=st.data())
def test_coding_class_is_one_point(make, data):
    spec = make()
    w = data.draw(words(spec.N))
    pts = [eval_coding(spec, c) for c in coding_class(spec, w)]
    assert all(np.allclose(p, pts[0], atol=1e-12) for p in pts)
    assert lowest_coding(spec, w) == min(coding_class(spec, w))


def test_rewrite_cap_overflows(S):
    fresh = L.sierpinski()
    with pytest.raises(RewriteOverflow):
        coding_class(fresh, parse_word("2(1)"), cap=0)


def test_symbols_outside_alphabet(S):
    with pytest.raises(InvalidWord):
        eval_coding(S, parse_word("(4)"))


def test_pull_back_and_same_point(S):
    assert pull_back(S, parse_word("1(2)"), 2) == parse_word("(1)")
    assert pull_back(S, parse_word("1(2)"), 3) is None
    assert same_point(S, parse_word("1(2)"), parse_word("2(1)"))


# post-critical data ---------------------------------------------------------------

def test_post_critical_sets(S, K):
    p = compute_post_critical(S)
    assert [format_word(r) for r in p.reps] == ["(1)", "(2)", "(3)"]
    assert p.boundary_symbols == {1, 2, 3}
    q = compute_post_critical(K)
    assert [format_word(r) for r in q.reps] == ["(1)", "(3)"]
    assert q.boundary_symbols == {1, 3}
    assert compute_post_critical(L.cantor()).reps == []


def test_non_pcf_cap():
    # the closure is bounded by the cap; the interval needs two codings, Sierpinski more than one
    spec = IfsSpec([Similitude(0.5), Similitude(0.5, 0.0, False, (0.5, 0.0))],
                   [Identification(1, 2, EvWord((), (1,)), EvWord((), (2,)))])
    assert len(compute_post_critical(spec, cap=10).reps) == 2
    with pytest.raises(NotPcf):
        compute_post_critical(L.sierpinski(), cap=1)


@pytest.mark.parametrize("m", [2, 3])
def test_power_system_keeps_post_critical_points(K, m):
    P = sorted(tuple(np.round(v, 9)) for v in compute_post_critical(K).points.values())
    Km = power_spec(K, m)
    Q = sorted(tuple(np.round(v, 9)) for v in compute_post_critical(Km).points.values())
    assert P == Q
    assert Km.N == 4 ** m


def test_recode_with_prefix_code():
    code = [(1,), (2, 1), (2, 2)]
    w = recode_with_prefix_code(parse_word("21(22)"), code)
    assert w == parse_word("2(3)")


# geometry --------------------------------------------------------------------

def test_sic_asc_sierpinski(S):
    rep = verify_sic_asc(S, 7)
    assert rep.sic_ok and rep.asc_ok
    # the two sides of a touching point make a 60 degree angle
    assert rep.asc_constant_estimate == pytest.approx(math.sqrt(3) / 2, abs=1e-6)


def test_sic_asc_degenerate_cases():
    rep = verify_sic_asc(L.cantor(), 8)
    assert rep.xi1 == pytest.approx(1 / 3, abs=1e-3)
    assert rep.xi2 == math.inf
    one = verify_sic_asc(L.single_map(), 4)
    assert one.xi1 == math.inf
