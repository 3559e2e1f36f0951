"""Weighted refined graphs, their geodesic metrics and good assignments."""
import heapq
import math
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import DecompositionError, DomainError, GeometryMismatch, InputError, ValidationError
from .symbolic_ifs import (compute_post_critical, eval_coding, format_word, lowest_coding,
                           recode_with_prefix_code)

INF = math.inf


def _num(x):
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError as exc:
            raise InputError("bad weight %r" % x) from exc
    if isinstance(x, float):
        return x
    raise InputError("bad weight %r" % (x,))


class WeightAssignment:
    """Edge weights on the base graph over P plus one ratio per map.

    ``tau0`` keys are pairs of 1-based indices into the ordered post-critical
    points.  Integers, Fractions and strings like "1/4" keep exact arithmetic.
    """

    def __init__(self, tau0, R):
        self.tau0 = {}
        for (a, b), w in tau0.items():
            a, b = int(a), int(b)
            if a == b:
                continue
            w = _num(w)
            if not w > 0:
                raise ValidationError("base edge %d-%d needs a positive weight" % (a, b))
            self.tau0[(min(a, b), max(a, b))] = w
        self.R = [_num(r) for r in R]
        for r in self.R:
            if not 0 < r < 1:
                raise ValidationError("ratio weight %r outside (0,1)" % (r,))

    @property
    def rational(self):
        return all(isinstance(w, Fraction) for w in list(self.tau0.values()) + self.R)

    @classmethod
    def from_json(cls, d):
        try:
            tau0 = {tuple(k.split("-")): v for k, v in d["tau0"].items()}
            return cls(tau0, d["R"])
        except (KeyError, AttributeError, ValueError) as exc:
            raise InputError("malformed assignment: %s" % exc) from exc

    def to_json(self):
        f = lambda w: str(w) if isinstance(w, Fraction) else w
        return {"tau0": {"%d-%d" % k: f(w) for k, w in sorted(self.tau0.items())},
                "R": [f(r) for r in self.R]}

    def ratio(self, word):
        r = Fraction(1) if self.rational else 1.0
        for s in word:
            r *= self.R[s - 1]
        return r

    @classmethod
    def uniform(cls, n_points, n_maps, r, tau=1):
        tau0 = {(a, b): tau for a in range(1, n_points + 1) for b in range(a + 1, n_points + 1)}
        return cls(tau0, [r] * n_maps)


class WeightedRefinedGraph:
    def __init__(self, level, vertices, positions, edges, rational):
        self.level = level
        self.vertices = vertices                  # sorted lowest codings
        self.index = {v: k for k, v in enumerate(vertices)}
        self.positions = positions
        self.edges = edges                        # (a, b, weight, (word, (p, q)))
        self.rational = rational
        self.adj = [dict() for _ in vertices]
        for a, b, w, _ in edges:
            ia, ib = self.index[a], self.index[b]
            if ia == ib:
                continue
            if ib not in self.adj[ia] or w < self.adj[ia][ib]:
                self.adj[ia][ib] = w
                self.adj[ib][ia] = w
        self._nbrs = [sorted(d.items()) for d in self.adj]
        self._sssp = {}
        # exact weights run on integer numerators over a common denominator
        self._scale = None
        if rational and edges:
            den = 1
            for d in self.adj:
                for w in d.values():
                    den = den * w.denominator // math.gcd(den, w.denominator)
            self._scale = den
            self._nbrs = [[(v, int(w * den)) for v, w in row] for row in self._nbrs]

    def zero(self):
        return Fraction(0) if self.rational else 0.0

    def dijkstra(self, src):
        """Distances and predecessors from vertex index ``src``; ties favour lower indices."""
        if src in self._sssp:
            return self._sssp[src]
        n = len(self.vertices)
        dist = [INF] * n
        pred = [-1] * n
        dist[src] = 0 if self._scale else self.zero()
        heap = [(dist[src], src)]
        done = [False] * n
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, w in self._nbrs[u]:
                nd = d + w
                if nd < dist[v] or (nd == dist[v] and not done[v] and u < pred[v]):
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
        if self._scale:
            dist = [d if d == INF else Fraction(d, self._scale) for d in dist]
        self._sssp[src] = (dist, pred)
        return dist, pred

    def distance(self, x, y):
        return self.dijkstra(self.index[x])[0][self.index[y]]

    def geodesic(self, x, y):
        """(distance, path as list of vertex codings)."""
        ix, iy = self.index[x], self.index[y]
        dist, pred = self.dijkstra(ix)
        if dist[iy] == INF:
            return INF, []
        path = [iy]
        while path[-1] != ix:
            path.append(pred[path[-1]])
        return dist[iy], [self.vertices[k] for k in reversed(path)]

    def to_dict(self):
        f = lambda w: str(w) if isinstance(w, Fraction) else w
        return {"level": self.level,
                "vertices": [{"coding": format_word(v), "xy": [float(p[0]), float(p[1])]}
                             for v, p in zip(self.vertices, self.positions)],
                "edges": [{"a": format_word(a), "b": format_word(b), "weight": f(w),
                           "word": "".join(map(str, I)), "base_edge": "%d-%d" % h}
                          for a, b, w, (I, h) in self.edges]}


def _words(N, n):
    return list(product(range(1, N + 1), repeat=n))


def refine(spec, assign, n, pcd=None):
    """The level-n graph: union of f_I(G0) over words I of length n."""
    if n < 0:
        raise DomainError("level must be nonnegative")
    pcd = compute_post_critical(spec) if pcd is None else pcd
    if len(assign.R) != spec.N:
        raise ValidationError("assignment has %d ratios for %d maps" % (len(assign.R), spec.N))
    reps = pcd.reps
    for a, b in assign.tau0:
        if b > len(reps):
            raise ValidationError("base edge %d-%d refers to a missing point" % (a, b))
    pts = np.array([pcd.points[r] for r in reps])
    key = {}
    pos = {}
    edges = []
    scale = max(1.0, float(np.abs(pts).max()))
    for I in _words(spec.N, n):
        g = spec.compose_word(I)
        img = g(pts) if g is not None else pts
        names = []
        for k, r in enumerate(reps):
            v = key.get((I, k))
            if v is None:
                v = lowest_coding(spec, r.prepend(I))
                key[(I, k)] = v
            if v in pos:
                if np.linalg.norm(pos[v] - img[k]) > 1e3 * spec.tolerance * scale:
                    raise GeometryMismatch("vertex %s has two positions" % format_word(v))
            else:
                pos[v] = img[k]
            names.append(v)
        rI = assign.ratio(I)
        for (a, b), w in sorted(assign.tau0.items()):
            edges.append((names[a - 1], names[b - 1], rI * w, (I, (a, b))))
    verts = sorted(pos)
    return WeightedRefinedGraph(n, verts, np.array([pos[v] for v in verts]), edges, assign.rational)


def level_vertices(spec, n, pcd=None):
    pcd = compute_post_critical(spec) if pcd is None else pcd
    return sorted({lowest_coding(spec, r.prepend(I)) for I in _words(spec.N, n) for r in pcd.reps})


def _close(a, b, rational, tol=1e-12):
    if a == INF or b == INF:
        return a == b
    if rational:
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def check_good_assignment(spec, assign, pcd=None):
    pcd = compute_post_critical(spec) if pcd is None else pcd
    G0 = refine(spec, assign, 0, pcd)
    G1 = refine(spec, assign, 1, pcd)
    witnesses = []
    compatible = True
    for a in pcd.reps:
        for b in pcd.reps:
            if a < b:
                d0, d1 = G0.distance(a, b), G1.distance(a, b)
                if not _close(d0, d1, assign.rational):
                    compatible = False
                    witnesses.append({"kind": "compatibility", "a": pcd.label(a), "b": pcd.label(b),
                                      "D0": _out(d0), "D1": _out(d1)})
    geodesic = True
    for a, b, w, (I, h) in G1.edges:
        d = G1.distance(a, b)
        if not _close(d, w, assign.rational):
            geodesic = False
            witnesses.append({"kind": "edge", "word": "".join(map(str, I)), "base_edge": "%d-%d" % h,
                              "weight": _out(w), "distance": _out(d)})
    return {"compatible": compatible, "edges_geodesic": geodesic, "witnesses": witnesses}


def _out(x):
    if isinstance(x, Fraction):
        return str(x)
    return "inf" if x == INF else float(x)


def _pairs(vertices, cap, rng):
    n = len(vertices)
    total = n * (n - 1) // 2
    if total <= cap:
        return [(vertices[a], vertices[b]) for a in range(n) for b in range(a + 1, n)]
    out = set()
    while len(out) < cap:
        a, b = sorted(rng.choice(n, 2, replace=False))
        out.add((int(a), int(b)))
    return [(vertices[a], vertices[b]) for a, b in sorted(out)]


def verify_compatibility(spec, assign, n, cap=100000, seed=0, pcd=None, return_details=False):
    """D_n equals D_{n-1} on the level n-1 vertices (all pairs, or a seeded sample)."""
    if n < 1:
        raise DomainError("compatibility needs n >= 1")
    pcd = compute_post_critical(spec) if pcd is None else pcd
    Gp = refine(spec, assign, n - 1, pcd)
    Gn = refine(spec, assign, n, pcd)
    rng = np.random.default_rng(seed)
    pairs = _pairs(Gp.vertices, cap, rng)
    bad = []
    for a, b in pairs:
        if not _close(Gp.distance(a, b), Gn.distance(a, b), assign.rational):
            bad.append((format_word(a), format_word(b)))
    if return_details:
        return not bad, {"pairs": len(pairs), "mismatches": bad[:20]}
    return not bad


def projection(spec, pcd, word, n):
    """Vertex of f_{word|n}(P) closest to the point coded by word."""
    target = eval_coding(spec, word)
    head = word.head(n)
    best = None
    for r in pcd.reps:
        v = lowest_coding(spec, r.prepend(head))
        d = float(np.linalg.norm(eval_coding(spec, v) - target))
        if best is None or d < best[0] - 1e-15:
            best = (d, v)
    return best[1]


def metric_D(spec, assign, x, y, n, pcd=None, graph=None, parent_code=None):
    """(D_n between projected vertices, error envelope).

    With ``parent_code`` the words are read over a parent alphabet and parsed
    by that complete prefix code (e.g. the words of an iterated system).
    """
    pcd = compute_post_critical(spec) if pcd is None else pcd
    if parent_code is not None:
        x = recode_with_prefix_code(x, parent_code)
        y = recode_with_prefix_code(y, parent_code)
    G = refine(spec, assign, n, pcd) if graph is None else graph
    G0 = refine(spec, assign, 0, pcd)
    diam0 = max([G0.distance(a, b) for a in pcd.reps for b in pcd.reps] or [0])
    rmax = max(assign.R) ** n
    envelope = 2 * float(rmax) * float(diam0)
    if lowest_coding(spec, x) == lowest_coding(spec, y):
        return G.zero(), envelope
    px, py = projection(spec, pcd, x, n), projection(spec, pcd, y, n)
    return G.distance(px, py), envelope


def check_similitude_under_D(spec, assign, j, n, cap=2000, seed=0, pcd=None):
    """max |D(f_j x, f_j y) - R(j) D(x, y)| / D(x, y) over level-n vertex pairs."""
    pcd = compute_post_critical(spec) if pcd is None else pcd
    Gn = refine(spec, assign, n, pcd)
    Gm = refine(spec, assign, n + 1, pcd)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a, b in _pairs(Gn.vertices, cap, rng):
        d = Gn.distance(a, b)
        fa, fb = lowest_coding(spec, a.prepend((j,))), lowest_coding(spec, b.prepend((j,)))
        e = Gm.distance(fa, fb)
        diff = abs(e - assign.R[j - 1] * d)
        if d > 0:
            worst = max(worst, float(diff / d))
    return worst


def inside_geodesic_exists(spec, assign, j, n, pcd=None):
    """For a, b in f_j(P): some geodesic of G_{n+1} stays inside f_j(G_n)."""
    pcd = compute_post_critical(spec) if pcd is None else pcd
    G = refine(spec, assign, n + 1, pcd)
    sub = WeightedRefinedGraph(n + 1, G.vertices, G.positions,
                               [e for e in G.edges if e[3][0][0] == j], G.rational)
    pts = [lowest_coding(spec, r.prepend((j,))) for r in pcd.reps]
    return all(_close(G.distance(a, b), sub.distance(a, b), G.rational) for a in pts for b in pts)


def similarity_dimension(ratios, tol=1e-13):
    """The s >= 0 with sum r_i^s = 1, by bisection."""
    rs = [float(r) for r in ratios]
    if not rs:
        raise DomainError("need at least one ratio")
    if any(not 0 < r < 1 for r in rs):
        raise DomainError("ratios must lie in (0,1)")
    if len(rs) == 1:
        return 0.0
    logs = np.log(np.array(rs))

    def f(s):
        return float(np.exp(s * logs).sum()) - 1.0
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, hi * 2
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def decompose_path_by_subgraphs(path, gamma1, gamma2, cut):
    """Split a vertex path into a part inside gamma1 followed by a part inside gamma2.

    gamma1, gamma2 are vertex sets; the junction must be one of the cut vertices.
    """
    gamma1, gamma2, cut = set(gamma1), set(gamma2), set(cut)
    if not path:
        raise DecompositionError("empty path")
    if gamma1 & gamma2 - cut:
        raise DecompositionError("subgraphs share vertices outside the cut")
    if path[0] not in gamma1 - cut or path[-1] not in gamma2 - cut:
        raise DecompositionError("path must start in the first subgraph and end in the second")
    for t, v in enumerate(path):
        if v in cut and set(path[:t + 1]) <= gamma1 and set(path[t:]) <= gamma2:
            return path[:t + 1], path[t:]
    raise DecompositionError("no junction at a cut vertex")
