"""Topology automaton: how pairs of cylinders touch under refinement."""
import math
from collections import deque
from itertools import permutations

import numpy as np

from .errors import MissingIdentification, SicViolation
from .symbolic_ifs import (base_points, compute_post_critical, coding_class,
                           format_word, invariant_ball, lowest_coding, random_word,
                           verify_sic_asc)

ID = "Id"
EXIT = "Exit"


class TopologyAutomaton:
    def __init__(self, spec, pcd, delta, states):
        self.spec = spec
        self.pcd = pcd
        self.N = spec.N
        self.delta = delta          # (state, (i, j)) -> state
        self.states = states        # in discovery order, Id and Exit first

    def step(self, state, i, j):
        if state == EXIT:
            return EXIT
        return self.delta[(state, (i, j))]

    def label(self, state):
        if state in (ID, EXIT):
            return state
        u, v = state
        return "S(%s,%s)" % (self.pcd.label(u), self.pcd.label(v))

    def letters(self):
        return [(i, j) for i in range(1, self.N + 1) for j in range(1, self.N + 1)]

    def table(self):
        """{label: {"i,j": label}} over all materialized states."""
        out = {}
        for s in self.states:
            out[self.label(s)] = {"%d,%d" % a: self.label(self.step(s, *a)) for a in self.letters()}
        return out

    def to_dict(self):
        return {"states": [self.label(s) for s in self.states], "initial": ID, "final": EXIT,
                "alphabet_size": self.N, "delta": self.table()}

    def to_dot(self):
        lines = ["digraph topology_automaton {", "  rankdir=LR;",
                 '  "Id" [shape=circle, style=bold];', '  "Exit" [shape=doublecircle];']
        for s in self.states[2:]:
            lines.append('  "%s" [shape=circle];' % self.label(s))
        for s in self.states:
            grouped = {}
            for a in self.letters():
                grouped.setdefault(self.label(self.step(s, *a)), []).append("%d%d" % a)
            for tgt in sorted(grouped, key=lambda t: [self.label(x) for x in self.states].index(t)):
                lines.append('  "%s" -> "%s" [label="%s"];' % (self.label(s), tgt, ",".join(grouped[tgt])))
        lines.append("}")
        return "\n".join(lines) + "\n"


def _pair_state(spec, i, j):
    """(u, v) with f_i(v) = f_j(u), from declared identifications, or None."""
    found = set()
    for u, v in spec.identified_pairs().get((i, j), []):
        found.add((lowest_coding(spec, u), lowest_coding(spec, v)))
    if len(found) > 1:
        raise SicViolation("cylinders %d and %d are declared to meet in %d different ways" % (i, j, len(found)))
    return found.pop() if found else None


def build_automaton(spec, pcd=None, verify=True, depth=14):
    """Reachable part of the automaton.

    With ``verify`` every undeclared pair of 1-cylinders must be certified
    disjoint geometrically; otherwise the declared combinatorics are trusted.
    """
    pcd = compute_post_critical(spec, verify=verify) if pcd is None else pcd
    N = spec.N
    geo = GeometryOracle(spec, pcd) if verify else None
    delta = {}
    states = [ID, EXIT]
    seen = {ID, EXIT}
    queue = deque([ID])
    while queue:
        s = queue.popleft()
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if s == ID:
                    if i == j:
                        t = ID
                    else:
                        t = _pair_state(spec, i, j)
                        if t is None:
                            if geo is not None and geo.relation((i,), (j,), depth) != "disjoint":
                                raise MissingIdentification(
                                    "cylinders %d and %d are not separated but no identification is declared"
                                    % (i, j), witness=(i, j))
                            t = EXIT
                else:
                    u, v = s
                    v2 = _pull(spec, v, i)
                    u2 = _pull(spec, u, j)
                    t = EXIT if v2 is None or u2 is None else (u2, v2)
                delta[(s, (i, j))] = t
                if t not in seen:
                    seen.add(t)
                    states.append(t)
                    queue.append(t)
    return TopologyAutomaton(spec, pcd, delta, states)


def _pull(spec, w, s):
    shifted = [c.shift() for c in coding_class(spec, w) if c.symbol(0) == s]
    return lowest_coding(spec, shifted[0]) if shifted else None


def surviving_time(A, x, y):
    """Pairs consumed before Exit; math.inf when the run cycles."""
    state = ID
    k = 0
    seen = set()
    while state != EXIT:
        if k >= len(x.pre) and k >= len(y.pre):
            key = (state, (k - len(x.pre)) % len(x.per), (k - len(y.pre)) % len(y.per))
            if key in seen:
                return math.inf
            seen.add(key)
        state = A.step(state, x.symbol(k), y.symbol(k))
        k += 1
    return k


def itinerary(A, x, y, limit=50):
    states = [ID]
    for k in range(limit):
        if states[-1] == EXIT:
            break
        states.append(A.step(states[-1], x.symbol(k), y.symbol(k)))
    return [A.label(s) for s in states]


class GeometryOracle:
    """Decide whether two cylinders meet, using only the maps.

    A shared image of a known point proves contact; nested invariant balls
    that separate prove disjointness.  Anything else is inconclusive.
    """

    def __init__(self, spec, pcd=None, max_pairs=4000):
        self.spec = spec
        self.center, self.R0 = invariant_ball(spec)
        self.base = base_points(spec, pcd)
        self.max_pairs = max_pairs
        self._maps = {}

    def _map(self, word):
        word = tuple(word)
        if word not in self._maps:
            self._maps[word] = self.spec.compose_word(word) if word else None
        return self._maps[word]

    def _ball(self, word):
        g = self._map(word)
        if g is None:
            return self.center, self.R0
        return g(self.center), g.ratio * self.R0

    def touch(self, I, J):
        gi, gj = self._map(I), self._map(J)
        a, b = gi(self.base), gj(self.base)
        d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min()
        return d <= 1e-6 * self.R0 * min(gi.ratio, gj.ratio) + 1e-13

    def disjoint(self, I, J, extra=12):
        N = self.spec.N
        stack = [(tuple(I), tuple(J))]
        limit = max(len(I), len(J)) + extra
        count = 0
        while stack:
            a, b = stack.pop()
            ca, ra = self._ball(a)
            cb, rb = self._ball(b)
            if np.linalg.norm(ca - cb) > ra + rb:
                continue
            count += 1
            if count > self.max_pairs or max(len(a), len(b)) >= limit:
                return False
            if ra >= rb:
                stack.extend((a + (s,), b) for s in range(1, N + 1))
            else:
                stack.extend((a, b + (s,)) for s in range(1, N + 1))
        return True

    def relation(self, I, J, depth=12):
        if self.touch(I, J):
            return "touch"
        if self.disjoint(I, J, depth):
            return "disjoint"
        return "inconclusive"


def geometric_separation_depth(oracle, x, y, depth):
    """Least n <= depth with disjoint n-cylinders; inf if all touch; None if undecided."""
    for n in range(1, depth + 1):
        rel = oracle.relation(x.head(n), y.head(n))
        if rel == "disjoint":
            return n
        if rel == "inconclusive":
            return None
    return math.inf


def sample_lowest_pairs(spec, samples, rng, max_pre=6, max_per=3):
    """Random pairs of lowest codings; half of them share a random prefix."""
    pairs = []
    while len(pairs) < samples:
        x = lowest_coding(spec, random_word(rng, spec.N, max_pre, max_per))
        if rng.random() < 0.5:
            k = int(rng.integers(1, min(3, max_pre) + 1)) if max_pre else 0
            y = random_word(rng, spec.N, max_pre - k, max_per).prepend(x.head(k))
        else:
            y = random_word(rng, spec.N, max_pre, max_per)
        y = lowest_coding(spec, y)
        pairs.append((x, y))
    return pairs


def check_surviving_time_lemma(spec, A, samples=200, depth=12, seed=0):
    """Compare automaton surviving times with geometric separation depths.

    Returns (ok, report) where report lists disagreements and inconclusive pairs.
    """
    rng = np.random.default_rng(seed)
    oracle = GeometryOracle(spec, A.pcd)
    bad, undecided = [], []
    agree = 0
    for x, y in sample_lowest_pairs(spec, samples, rng):
        T = surviving_time(A, x, y)
        n = geometric_separation_depth(oracle, x, y, depth)
        if n is None:
            undecided.append((format_word(x), format_word(y)))
            continue
        expected = T if T <= depth else math.inf
        if n != expected:
            bad.append({"x": format_word(x), "y": format_word(y), "automaton": T, "geometry": n})
        else:
            agree += 1
    return not bad, {"agree": agree, "disagree": bad, "inconclusive": undecided}


def automata_isomorphic(A, B, perm=None):
    """State bijection commuting with delta, or None.

    ``perm`` maps letters of A to letters of B (symbolwise); identity if None.
    """
    if A.N != B.N:
        return None
    perm = perm or {k: k for k in range(1, A.N + 1)}
    fwd = {ID: ID, EXIT: EXIT}
    back = {ID: ID, EXIT: EXIT}
    queue = deque([ID])
    while queue:
        s = queue.popleft()
        t = fwd[s]
        for i, j in A.letters():
            a = A.step(s, i, j)
            b = B.step(t, perm[i], perm[j])
            if a in fwd:
                if fwd[a] != b:
                    return None
            else:
                if b in back:
                    return None
                fwd[a] = b
                back[b] = a
                queue.append(a)
    if len(fwd) != len(A.states) or len(back) != len(B.states):
        return None
    return {A.label(s): B.label(t) for s, t in fwd.items()}


def find_isomorphism(A, B, allow_relabel=False):
    """(perm, bijection) trying the identity first, then symbol permutations (N <= 8)."""
    ident = {k: k for k in range(1, A.N + 1)}
    iso = automata_isomorphic(A, B, ident)
    if iso is not None or not allow_relabel or A.N != B.N or A.N > 8:
        return (ident, iso) if iso is not None else (None, None)
    for p in permutations(range(1, A.N + 1)):
        perm = {k + 1: p[k] for k in range(A.N)}
        iso = automata_isomorphic(A, B, perm)
        if iso is not None:
            return perm, iso
    return None, None


def classify_equivalence(F, G, verify=True, allow_relabel=False, depth=8, tol=1e-9):
    """Strongest equivalence between the attractors of F and G that the theory certifies."""
    A = build_automaton(F, verify=verify)
    B = build_automaton(G, verify=verify)
    perm, iso = find_isomorphism(A, B, allow_relabel)
    out = {"states": [len(A.states), len(B.states)]}
    if iso is None:
        out["verdict"] = "NotComparable"
        return out
    out["correspondence"] = {str(k): v for k, v in perm.items()}
    if verify:
        asc_f = verify_sic_asc(F, depth, A.pcd)
        asc_g = verify_sic_asc(G, depth, B.pcd)
        out["asc"] = [asc_f.asc_constant_estimate, asc_g.asc_constant_estimate]
        asc_ok = asc_f.asc_ok and asc_g.asc_ok and asc_f.sic_ok and asc_g.sic_ok
    else:
        out["asc"] = "assumed"
        asc_ok = True
    if not asc_ok:
        out["verdict"] = "Homeomorphic"
        return out
    rf, rg = F.ratios, G.ratios
    if all(abs(rf[i - 1] - rg[perm[i] - 1]) <= tol for i in perm):
        out["verdict"] = "Lipschitz"
        return out
    boundary = sorted(A.pcd.boundary_symbols)
    exps = [math.log(rg[perm[i] - 1]) / math.log(rf[i - 1]) for i in boundary]
    if exps and max(exps) - min(exps) <= tol:
        out["verdict"] = "Quasisymmetric"
        out["s"] = exps[0]
        return out
    out["verdict"] = "Hoelder"
    if exps:
        out["s_candidates"] = exps
    return out
