"""Separation prefixes, the comparison function rho and the metric constants."""
import math
from dataclasses import dataclass

import numpy as np

from .automaton import build_automaton, sample_lowest_pairs, surviving_time, _pair_state
from .errors import (ComparabilityFailure, DomainError, SamePoint,
                     SamePointOrTouching)
from .symbolic_ifs import (coding_class, compute_post_critical, eval_coding,
                           format_word, lowest_coding, verify_sic_asc)


@dataclass(frozen=True)
class SeparationPrefix:
    mu: object      # tuple of symbols, or the EvWord itself when infinite
    nu: object
    case: str       # "I", "II" or "III"
    point: object = None   # lowest coding of the touching point (cases II, III)

    def to_dict(self):
        def w(z):
            return format_word(z) if hasattr(z, "per") else "".join(map(str, z)) if max(z, default=0) < 10 \
                else ",".join(map(str, z))
        return {"mu": w(self.mu), "nu": w(self.nu), "case": self.case}


def _exit_length(spec, word, cls):
    """Least m with the point coded by ``cls`` outside the m-cylinder of ``word``; inf if it is the point."""
    if word in cls:
        return math.inf
    return 1 + max(word.common_prefix(c) for c in cls)


def separation_prefix(spec, x, y):
    x, y = lowest_coding(spec, x), lowest_coding(spec, y)
    if x == y:
        raise SamePoint("both codings name the point %s" % format_word(x))
    k = x.common_prefix(y)
    i, j = x.symbol(k), y.symbol(k)
    touch = _pair_state(spec, i, j)
    if touch is None:
        return SeparationPrefix(x.head(k + 1), y.head(k + 1), "I")
    u, v = touch
    cls = coding_class(spec, v.prepend(x.head(k) + (i,)))
    m = _exit_length(spec, x, cls)
    n = _exit_length(spec, y, cls)
    mu = x if m == math.inf else x.head(m)
    nu = y if n == math.inf else y.head(n)
    case = "III" if math.inf in (m, n) else "II"
    return SeparationPrefix(mu, nu, case, min(cls))


def _ratio(ratios, word):
    if hasattr(word, "per"):
        return 0.0
    r = 1.0
    for s in word:
        r *= ratios[s - 1]
    return r


def rho(spec, x, y, sep=None):
    if lowest_coding(spec, x) == lowest_coding(spec, y):
        return 0.0
    sep = separation_prefix(spec, x, y) if sep is None else sep
    return max(_ratio(spec.ratios, sep.mu), _ratio(spec.ratios, sep.nu))


@dataclass
class MetricConstants:
    xi1: float
    xi2: float
    asc_c: float
    A_star: float
    B_star: float
    r_star: float
    r_sup: float
    diam: float
    c1: float
    c2: float
    c3: float

    def to_dict(self):
        return {k: ("inf" if v == math.inf else float(v)) for k, v in self.__dict__.items()}


def metric_constants(spec, depth=8, report=None):
    """Constants of the two-sided estimates, from net-estimated geometry."""
    rep = verify_sic_asc(spec, depth) if report is None else report
    bounds = spec.bounds()
    A = min(a for a, _ in bounds)
    B = max(b for _, b in bounds)
    rs, rS = min(spec.ratios), max(spec.ratios)
    c = rep.asc_constant_estimate
    xi1, xi2, diam = rep.xi1, rep.xi2, rep.diam_upper
    c1 = min(xi1, c * xi2 / A)
    c2 = 2 * diam / B
    c3 = max(2 * diam / rs, 1 / xi1 if xi1 != math.inf else 0.0,
             rS / (c * xi2) if xi2 != math.inf else 0.0, rS / xi2 if xi2 != math.inf else 0.0)
    return MetricConstants(xi1, xi2, c, A, B, rs, rS, diam, c1, c2, c3)


def distance_sandwich(spec, consts, x, y, automaton=None):
    A = build_automaton(spec) if automaton is None else automaton
    x, y = lowest_coding(spec, x), lowest_coding(spec, y)
    n = surviving_time(A, x, y)
    if n == math.inf:
        raise SamePointOrTouching("surviving time is infinite for %s, %s" % (format_word(x), format_word(y)))
    d = float(np.linalg.norm(eval_coding(spec, x) - eval_coding(spec, y)))
    lower = consts.c1 * consts.A_star ** n
    upper = consts.c2 * consts.B_star ** n
    return {"lower": lower, "upper": upper, "n": n, "distance": d, "ok": lower <= d <= upper}


def sandwich_check(spec, consts, samples=500, seed=0, automaton=None):
    """Violations of both estimates on sampled pairs; an empty list means all hold."""
    A = build_automaton(spec) if automaton is None else automaton
    rng = np.random.default_rng(seed)
    violations = []
    worst = 0.0
    for x, y in sample_lowest_pairs(spec, samples, rng):
        if x == y:
            continue
        d = float(np.linalg.norm(eval_coding(spec, x) - eval_coding(spec, y)))
        n = surviving_time(A, x, y)
        if n != math.inf:
            lo, hi = consts.c1 * consts.A_star ** n, consts.c2 * consts.B_star ** n
            if not lo <= d <= hi:
                violations.append({"kind": "c1c2", "x": format_word(x), "y": format_word(y),
                                   "distance": d, "lower": lo, "upper": hi})
        r = rho(spec, x, y)
        q = max(d / r, r / d)
        worst = max(worst, q)
        if q > consts.c3:
            violations.append({"kind": "c3", "x": format_word(x), "y": format_word(y),
                               "distance": d, "rho": r, "c3": consts.c3})
    return violations, worst


def rho_comparability(spec, consts, samples=500, seed=0):
    """Largest observed max(d/rho, rho/d); raises with a witness when it exceeds c3."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x, y in sample_lowest_pairs(spec, samples, rng):
        if x == y:
            continue
        d = float(np.linalg.norm(eval_coding(spec, x) - eval_coding(spec, y)))
        r = rho(spec, x, y)
        q = max(d / r, r / d)
        if q > consts.c3:
            raise ComparabilityFailure("distortion %g exceeds c3 = %g" % (q, consts.c3),
                                       witness=(format_word(x), format_word(y)))
        worst = max(worst, q)
    return worst


def _eta_check(r_star, r_sup, rprime_star, s, t):
    for p in (r_star, r_sup, rprime_star):
        if not 0 < p < 1:
            raise DomainError("ratio parameter %r outside (0,1)" % p)
    if s <= 0:
        raise DomainError("exponent s must be positive")
    if t < 0:
        raise DomainError("eta is defined for t >= 0 only")


def log_eta_modulus(r_star, r_sup, rprime_star, s, t):
    """log of eta(t) for t > 0; finite even where eta itself leaves the float range."""
    _eta_check(r_star, r_sup, rprime_star, s, t)
    if t == 0:
        return -math.inf
    lt, lr, lR, lq = math.log(t), math.log(r_star), math.log(r_sup), math.log(rprime_star)
    drift = (lt - lr) / lR * lq
    return max(lt - lq - lr,
               lt + drift - lr,
               s * lt + drift - 2 * lq - s * lr,
               s * lt - 3 * lq - 2 * s * lr,
               s * lt + lt / lR * lq - 3 * lq - 2 * s * lr)


def eta_modulus(r_star, r_sup, rprime_star, s, t):
    """The explicit distortion function of the quasisymmetric equivalence.

    Each of the five terms has the form a * t**b with a, b > 0.  Values past
    the float range come back as inf.
    """
    value = log_eta_modulus(r_star, r_sup, rprime_star, s, t)
    if value == -math.inf:
        return 0.0
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def check_boundary_lemma(spec, samples=200, seed=0):
    """Interior runs of case II/III separation prefixes use boundary symbols only.

    Returns (ok, counts) with counts of the cases seen.
    """
    pcd = compute_post_critical(spec)
    boundary = pcd.boundary_symbols
    rng = np.random.default_rng(seed)
    counts = {"I": 0, "II": 0, "III": 0}
    ok = True
    for x, y in sample_lowest_pairs(spec, samples, rng):
        if x == y:
            continue
        sep = separation_prefix(spec, x, y)
        counts[sep.case] += 1
        if sep.case == "I":
            continue
        ell = x.common_prefix(y)
        for word, pref in ((x, sep.mu), (y, sep.nu)):
            if hasattr(pref, "per"):
                run = word.shift(ell + 1).symbols()
            else:
                run = set(word.head(len(pref) - 1)[ell + 1:])
            if not run <= boundary:
                ok = False
    return ok, counts


def check_quasisymmetry(F, G, s, samples=300, seed=0):
    """Sampled triples: rho_F(x,y) <= t rho_F(x,z) implies rho_G(x,y) <= eta(t) rho_G(x,z).

    Codings are shared, so the same words are read in both systems.  Returns
    the largest observed rho_G ratio divided by eta(t).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    rs, rS, qs = min(F.ratios), max(F.ratios), min(G.ratios)
    for (x, y), (_, z) in zip(sample_lowest_pairs(F, samples, rng), sample_lowest_pairs(F, samples, rng)):
        if len({x, y, z}) < 3:
            continue
        a, b = rho(F, x, y), rho(F, x, z)
        t = a / b
        lhs = rho(G, x, y) / rho(G, x, z)
        worst = max(worst, lhs / eta_modulus(rs, rS, qs, s, t))
    return worst
