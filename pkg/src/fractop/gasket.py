"""Fractal gaskets: validation, connectivity, vertex iteration and weight schemes.

Triangles are handled in the basis (a2 - a1, a3 - a1) of the unit triangle.
An upright copy with lower-left corner (alpha, beta) and side s is the set
alpha' >= alpha, beta' >= beta, alpha' + beta' <= alpha + beta + s, so
intersections reduce to comparisons that are exact for rational input.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import (CornerMapMissing, GoodAssignmentFailure, NotAGasket,
                     SBoundViolation, TriangleIdError)
from .graphs import (WeightAssignment, WeightedRefinedGraph, check_good_assignment,
                     decompose_path_by_subgraphs, refine, similarity_dimension)
from .symbolic_ifs import (EvWord, Identification, IfsSpec, Similitude,
                           compute_post_critical, lowest_coding)

SQRT3 = math.sqrt(3.0)
CORNERS = ((0, 0), (1, 0), (0, 1))      # a1, a2, a3 in basis coordinates


def _exact(x, tol=1e-10):
    q = Fraction(x).limit_denominator(10 ** 6)
    return q if abs(float(q) - x) <= tol else None


def triangle_coords(spec):
    """(alpha, beta, side) per map; Fractions when every value is recognisably rational."""
    raw = []
    for k, m in enumerate(spec.maps):
        if abs(math.sin(m.rotation)) > 1e-12 or math.cos(m.rotation) < 0 or m.reflect:
            raise NotAGasket("map %d is not a homothety with positive ratio" % (k + 1))
        tx, ty = m.translation
        beta = ty / (SQRT3 / 2)
        raw.append((tx - beta / 2, beta, m.ratio))
    exact = [tuple(_exact(v) for v in t) for t in raw]
    if all(v is not None for t in exact for v in t):
        return exact, True
    return raw, False


def _vertices(t):
    a, b, s = t
    return [(a, b), (a + s, b), (a, b + s)]


def _eq(p, q, exact):
    if exact:
        return p == q
    return abs(p[0] - q[0]) <= 1e-12 and abs(p[1] - q[1]) <= 1e-12


@dataclass
class GasketSpec:
    spec: IfsSpec
    triangles: list
    exact: bool
    corner_maps: dict            # vertex index 1..3 -> map index (1-based)
    contacts: list = field(default_factory=list)   # (i, j, k, l): f_i(a_k) = f_j(a_l)

    @property
    def N(self):
        return self.spec.N


def _integral(tris):
    den = 1
    for t in tris:
        for v in t:
            den = den * v.denominator // math.gcd(den, v.denominator)
    return [tuple(int(v * den) for v in t) for t in tris], den


def _contacts(tris, exact):
    tol = 0 if exact else 1e-12
    if exact:
        tris, _ = _integral(tris)
    out = []
    for i in range(len(tris)):
        for j in range(i + 1, len(tris)):
            a1, b1, s1 = tris[i]
            a2, b2, s2 = tris[j]
            A, B = max(a1, a2), max(b1, b2)
            size = min(a1 + b1 + s1, a2 + b2 + s2) - A - B
            if size < -tol:
                continue
            if size > tol:
                raise NotAGasket("triangles %d and %d overlap" % (i + 1, j + 1), witness=(i + 1, j + 1))
            p = (A, B)
            ki = [k for k, v in enumerate(_vertices(tris[i])) if _eq(v, p, exact)]
            kj = [k for k, v in enumerate(_vertices(tris[j])) if _eq(v, p, exact)]
            if not ki or not kj:
                raise NotAGasket("triangles %d and %d touch away from a common vertex" % (i + 1, j + 1),
                                 witness=(i + 1, j + 1))
            out.append((i + 1, j + 1, ki[0] + 1, kj[0] + 1))
    return out


def _corner_maps(tris, exact):
    found = {}
    for k, c in enumerate(CORNERS):
        for i, t in enumerate(tris):
            if _eq(_vertices(t)[k], c, exact):
                found[k + 1] = i + 1
    return found


def derive_identifications(spec, triangles=None, exact=None):
    """Return a copy of spec whose identifications are the touching vertices."""
    if triangles is None:
        tris, exact = triangle_coords(spec)
    else:
        tris = triangles
    contacts = _contacts(tris, exact)
    corners = _corner_maps(tris, exact)
    idfs = []
    for i, j, k, l in contacts:
        if k in corners and l in corners:
            idfs.append(Identification(i, j, EvWord((), (corners[l],)), EvWord((), (corners[k],))))
    out = IfsSpec(spec.maps, idfs, spec.lipschitz_bounds, spec.tolerance, spec.name, spec.base_words)
    return out


def validate_gasket(spec):
    tris, exact = triangle_coords(spec)
    tol = 0 if exact else 1e-12
    for i, (a, b, s) in enumerate(tris):
        if a < -tol or b < -tol or a + b + s > 1 + tol:
            raise NotAGasket("triangle %d leaves the unit triangle" % (i + 1), witness=i + 1)
    contacts = _contacts(tris, exact)
    return GasketSpec(spec, tris, exact, _corner_maps(tris, exact), contacts)


# connectivity -------------------------------------------------------------

def _touch_graph(g, members):
    """Pairs of members whose cylinders meet, given the corner maps among members."""
    corners = {k: i for k, i in g.corner_maps.items() if i in members}
    return [(i, j) for i, j, k, l in g.contacts
            if i in members and j in members and k in corners and l in corners]


def _components(nodes, edges):
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    comps = {}
    for v in nodes:
        comps.setdefault(find(v), []).append(v)
    return sorted(comps.values())


def connected_subsystem(g):
    """Largest set of maps whose own attractor is connected (at least two maps), or None.

    Restricting to a component can remove corner maps and with them some
    contacts, so components are refined until stable.
    """
    work = [list(range(1, g.N + 1))]
    best = None
    while work:
        members = set(work.pop())
        comps = _components(sorted(members), _touch_graph(g, members))
        if len(comps) == 1:
            if len(members) >= 2 and (best is None or len(members) > len(best)):
                best = sorted(members)
            continue
        work.extend(c for c in comps if len(c) >= 2)
    return best


def connectivity(g, depth=6):
    """Hata-graph connectivity with a verdict on the conformal dimension."""
    edges = _touch_graph(g, set(range(1, g.N + 1)))
    comps = _components(list(range(1, g.N + 1)), edges)
    diam_tri = 1.0
    out = {"connected": len(comps) == 1, "hata_components": comps}
    if len(comps) == 1:
        out["verdict"] = "1 (connected component)"
        return out
    rmax = max(g.spec.ratios)
    if not edges:
        bounds = [rmax ** k * diam_tri for k in range(1, depth + 1)]
        out["totally_disconnected_evidence"] = {
            "reason": "no two first-level cylinders meet, so every level-k component is a single cylinder",
            "component_diameter_bounds": bounds}
        out["verdict"] = "0 (Kovalev, cited)"
        return out
    sub = connected_subsystem(g)
    if sub is not None:
        out["connected_subsystem"] = sub
        out["verdict"] = "1 (connected component)"
        return out
    # contacts exist but no sub-system is connected on its own
    pcd = compute_post_critical(g.spec)
    bounds = []
    for k in range(1, depth + 1):
        if g.N ** k > 20000:
            break
        bounds.append(_level_component_bound(g.spec, pcd, k))
    out["totally_disconnected_evidence"] = {"reason": "heuristic: component diameters at levels 1..k",
                                            "component_diameter_bounds": bounds}
    out["verdict"] = "0 (Kovalev, cited; heuristic)"
    out["heuristic"] = True
    return out


def _level_component_bound(spec, pcd, k):
    from itertools import product
    words = list(product(range(1, spec.N + 1), repeat=k))
    owner = {}
    edges = []
    for idx, w in enumerate(words):
        for r in pcd.reps:
            v = lowest_coding(spec, r.prepend(w))
            if v in owner:
                edges.append((owner[v], idx))
            else:
                owner[v] = idx
    comps = _components(list(range(len(words))), edges)
    return max(sum(spec.word_ratio(words[i]) for i in c) for c in comps)


# augmentation properties ---------------------------------------------------

@dataclass
class GasketAugmentationReport:
    connected: bool
    boundary_covered: bool
    private_disjoint: bool
    private_counts: dict
    inner_diameter_ok: bool
    N0: int
    d0_squared: object
    private: dict              # edge -> list of map indices
    inner: list

    @property
    def ok(self):
        counts = set(self.private_counts.values())
        return (self.connected and self.boundary_covered and self.private_disjoint
                and len(counts) == 1 and self.inner_diameter_ok)

    def to_dict(self):
        return {"connected": self.connected, "boundary_covered": self.boundary_covered,
                "private_disjoint": self.private_disjoint, "private_counts": self.private_counts,
                "inner_diameter_ok": self.inner_diameter_ok, "N0": self.N0,
                "d0_squared": str(self.d0_squared) if isinstance(self.d0_squared, Fraction)
                else self.d0_squared, "ok": self.ok}


def _edges_touched(t, exact):
    a, b, s = t
    z = (lambda x: x == 0) if exact else (lambda x: abs(x) <= 1e-12)
    out = set()
    if z(b):
        out.add("a1a2")
    if z(a):
        out.add("a1a3")
    if z(a + b + s - 1):
        out.add("a2a3")
    return out


def _norm2(p, q):
    da, db = p[0] - q[0], p[1] - q[1]
    return da * da + da * db + db * db


def augmentation_report(g):
    tris, exact = g.triangles, g.exact
    touched = [_edges_touched(t, exact) for t in tris]
    private = {"a1a2": [], "a1a3": [], "a2a3": []}
    inner = []
    for i, e in enumerate(touched):
        if len(e) == 1:
            private[next(iter(e))].append(i + 1)
        elif not e:
            inner.append(i + 1)
    conn = connectivity(g)["connected"]
    # each edge is tiled by the sides lying on it
    covered = True
    for e, coord in (("a1a2", lambda t: (t[0], t[0] + t[2])), ("a1a3", lambda t: (t[1], t[1] + t[2])),
                     ("a2a3", lambda t: (t[1], t[1] + t[2]))):
        segs = sorted(coord(t) for t, te in zip(tris, touched) if e in te)
        reach = 0
        for lo, hi in segs:
            if (lo > reach) if exact else (lo > reach + 1e-12):
                break
            reach = max(reach, hi)
        if (reach != 1) if exact else abs(reach - 1) > 1e-12:
            covered = False
    disjoint = True
    for e1 in private:
        for e2 in private:
            if e1 < e2:
                for i in private[e1]:
                    for j in private[e2]:
                        a1, b1, s1 = tris[i - 1]
                        a2, b2, s2 = tris[j - 1]
                        if min(a1 + b1 + s1, a2 + b2 + s2) - max(a1, a2) - max(b1, b2) >= 0:
                            disjoint = False
    counts = {e: len(v) for e, v in private.items()}
    N0 = counts["a1a2"]

    def interior(p):
        a, b = p
        if exact:
            return a > 0 and b > 0 and a + b < 1
        return a > 1e-12 and b > 1e-12 and a + b < 1 - 1e-12
    pts = []
    for e in private:
        for i in private[e]:
            for v in _vertices(tris[i - 1]):
                if interior(v) and not any(_eq(v, q, exact) for q in pts):
                    pts.append(v)
    d0sq = min((_norm2(p, q) for a, p in enumerate(pts) for q in pts[a + 1:]), default=None)
    inner_ok = True
    if inner:
        if d0sq is None or N0 == 0:
            inner_ok = False
        else:
            inner_ok = all(tris[i - 1][2] ** 2 * N0 * N0 < d0sq for i in inner)
    return GasketAugmentationReport(conn, covered, disjoint, counts, inner_ok, N0, d0sq, private, inner)


# vertex iteration ----------------------------------------------------------

@dataclass
class VertexIteration:
    m: int
    spec: IfsSpec                # the iterated system F_m
    words: list                  # each map of F_m as a word over the base alphabet
    corners: dict                # vertex index -> base map index
    components: dict             # vertex index -> list of F_m indices (1-based)
    corner_powers: dict          # vertex index -> F_m index of f_c^(m+1)
    base: GasketSpec

    def others(self):
        inside = set(i for c in self.components.values() for i in c)
        return [i for i in range(1, len(self.words) + 1) if i not in inside]


def vertex_iteration(g, m, check=True):
    if m < 1:
        raise ValueError("m must be at least 1")
    corners = g.corner_maps
    missing = [k for k in (1, 2, 3) if k not in corners]
    if missing:
        raise CornerMapMissing("no map fixes vertex a%d" % missing[0])
    N = g.N
    cset = set(corners.values())
    words = [(i,) for i in range(1, N + 1) if i not in cset]
    components, powers = {}, {}
    for k in (1, 2, 3):
        c = corners[k]
        words.append((c,) * (m + 1))
        powers[k] = len(words)
        components[k] = [len(words)]
    for k in (1, 2, 3):
        c = corners[k]
        for ell in range(1, m + 1):
            for j in range(1, N + 1):
                if j != c:
                    words.append((c,) * ell + (j,))
                    components[k].append(len(words))
    if check:
        kraft = sum(Fraction(1, N ** len(w)) for w in words)
        if kraft != 1:
            raise CornerMapMissing("iterated words do not form a complete prefix code")
    maps = [g.spec.compose_word(w) for w in words]
    tris = [compose_triangles(g.triangles, w) for w in words]
    spec = derive_identifications(IfsSpec(maps, tolerance=g.spec.tolerance,
                                          name="%s_m%d" % (g.spec.name or "gasket", m), base_words=words),
                                  tris, g.exact)
    if check:
        _spot_check_attractor(g.spec, spec)
    return VertexIteration(m, spec, words, dict(corners), components, powers, g)


def _spot_check_attractor(F, Fm, depth=5, cap=200000):
    """Depth-1 net of F_m lies on the attractor of F, up to the mesh of a depth-d net of F."""
    from .symbolic_ifs import base_points, net_levels
    pts_f, mesh = base_points(F), 2.0
    for d, pts in net_levels(F, base_points(F), depth):
        if len(pts) > cap:
            break
        pts_f, mesh = pts, 2.0 * max(F.ratios) ** d
    img = np.concatenate([g(base_points(F)) for g in Fm.maps])
    gap = float(cKDTree(pts_f).query(img)[0].max())
    if gap > mesh + 1e-9:
        raise CornerMapMissing("iterated system leaves the attractor (gap %.3g)" % gap)


def compose_triangles(tris, word):
    """Basis triangle of f_word, composed without rounding when the input is exact."""
    a, b, s = 0, 0, 1
    for k in word:
        ta, tb, ts = tris[k - 1]
        a, b, s = a + s * ta, b + s * tb, s * ts
    return a, b, s


# weights ---------------------------------------------------------------------

def base_ratios(it):
    return {k: it.base.spec.maps[c - 1].ratio for k, c in it.corners.items()}


def s_lower_bound(it, N0):
    m = it.m
    Cm = (2 * N0 + 2) * m + N0 + 2
    r0 = max(base_ratios(it).values())
    return math.log(Cm) / ((-m - 1) * math.log(r0))


def _point(it, k, l):
    """f_k(a_l) in the plane, k and l vertex indices."""
    c = it.corners[k]
    return it.base.spec.maps[c - 1](np.array(_plane(CORNERS[l - 1])))


def _plane(p):
    a, b = float(p[0]), float(p[1])
    return (a + b / 2, b * SQRT3 / 2)


def _find_T(it, k, l):
    """Index in F_m of the triangle outside the components containing f_k(a_l)."""
    p = _point(it, k, l)
    hits = []
    for i in it.others():
        g = it.spec.maps[i - 1]
        q = g.inverse_apply(p)
        a = q[0] - q[1] / SQRT3
        b = q[1] * 2 / SQRT3
        if a >= -1e-9 and b >= -1e-9 and a + b <= 1 + 1e-9:
            hits.append(i)
    if len(hits) != 1:
        raise TriangleIdError("%d triangles contain f%d(a%d)" % (len(hits), k, l), witness=hits)
    return hits[0]


@dataclass
class GasketAssignment:
    scheme: str
    s: object
    R: list
    W: object
    Cm: int
    N0: int
    T: dict
    classes: dict

    def weights(self):
        return WeightAssignment({(1, 2): 1, (1, 3): 1, (2, 3): 1}, self.R)

    def to_dict(self):
        f = lambda x: str(x) if isinstance(x, Fraction) else x
        return {"scheme": self.scheme, "s": f(self.s), "W": f(self.W), "C_m": self.Cm, "N0": self.N0,
                "T": {str(k): v for k, v in self.T.items()}, "classes": self.classes}


def uniform_assignment(it, N0=0):
    """Every map of F_m gets 1/C_m; the Sierpinski case gives 1/(2m+2)."""
    Cm = (2 * N0 + 2) * it.m + N0 + 2
    w = Fraction(1, Cm)
    R = [w] * len(it.words)
    return GasketAssignment("uniform", None, R, w, Cm, N0, {}, {"uniform": len(R)})


def gasket_assignment(it, s=None, s_factor=1.01, report=None):
    rep = augmentation_report(it.base) if report is None else report
    if not rep.ok:
        raise NotAGasket("augmentation properties fail: %s" % rep.to_dict())
    N0 = rep.N0
    m = it.m
    Cm = (2 * N0 + 2) * m + N0 + 2
    bound = s_lower_bound(it, N0)
    s = bound * s_factor if s is None else s
    if not s > bound:
        raise SBoundViolation("s = %r does not exceed the bound %r" % (s, bound))
    r = base_ratios(it)
    corner_w = {k: r[k] ** ((m + 1) * s) for k in (1, 2, 3)}
    W = (1 - sum(corner_w.values())) / (Cm - 3)
    if not all(W > v for v in corner_w.values()):
        raise SBoundViolation("generic weight does not dominate the corner weights")
    T = {1: _find_T(it, 3, 2), 2: _find_T(it, 3, 1), 3: _find_T(it, 1, 2)}
    R = [W] * len(it.words)
    classes = {"corner": 3, "T": 3, "generic": len(R) - 6}
    for k in (1, 2, 3):
        R[it.corner_powers[k] - 1] = corner_w[k]
    for j, i in T.items():
        R[i - 1] = corner_w[j]
    if len(set(T.values())) != 3:
        raise TriangleIdError("T1, T2, T3 are not distinct", witness=T)
    return GasketAssignment("general", s, R, W, Cm, N0, T, classes)


# goodness ----------------------------------------------------------------------

def _subgraph(G, members):
    edges = [e for e in G.edges if e[3][0][0] in members]
    return WeightedRefinedGraph(G.level, G.vertices, G.positions, edges, G.rational)


def _vertex_at(G, p):
    d = np.linalg.norm(G.positions - np.asarray(p), axis=1)
    k = int(np.argmin(d))
    if d[k] > 1e-9:
        raise GoodAssignmentFailure("no graph vertex at %s" % (p,))
    return G.vertices[k]


def _close(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= 1e-12 * max(1.0, abs(float(a)))


def verify_gasket_good(it, ga):
    """Check the goodness conditions and the path-weight identities behind them."""
    spec = it.spec
    pcd = compute_post_critical(spec)
    wa = ga.weights()
    G1 = refine(spec, wa, 1, pcd)
    good = check_good_assignment(spec, wa, pcd)
    out = {"compatible": good["compatible"], "edges_geodesic": good["edges_geodesic"]}
    corners = [_vertex_at(G1, _plane(c)) for c in CORNERS]
    dists = {"%d-%d" % (a + 1, b + 1): G1.distance(corners[a], corners[b]) for a in range(3) for b in range(a + 1, 3)}
    out["corner_distances"] = {k: str(v) if isinstance(v, Fraction) else v for k, v in dists.items()}
    failures = list(good["witnesses"])
    if not all(_close(v, 1) for v in dists.values()):
        failures.append({"kind": "corner_distance", "values": out["corner_distances"]})
    if ga.scheme == "general":
        N0, W, m, s = ga.N0, ga.W, it.m, ga.s
        rw = {k: v ** ((m + 1) * s) for k, v in base_ratios(it).items()}
        star = _subgraph(G1, set(it.others()))
        a_pts = [_vertex_at(G1, _point(it, 1, 2)), _vertex_at(G1, _point(it, 1, 3))]
        b_pts = [_vertex_at(G1, _point(it, 3, 1)), _vertex_at(G1, _point(it, 3, 2))]
        ab_exact = (N0 - 1) * W + rw[2]
        d_ab = star.distance(a_pts[1], b_pts[0])
        ab_min = min(star.distance(a, b) for a in a_pts for b in b_pts)
        out["cross_path"] = {"expected": ab_exact, "dijkstra": d_ab, "min_over_pairs": ab_min}
        if not _close(d_ab, ab_exact) or ab_min < ab_exact - 1e-12:
            failures.append({"kind": "cross_path", **out["cross_path"]})
        v3 = _subgraph(G1, set(it.components[3]))
        a3 = corners[2]
        v3_first = rw[3] + (N0 * m + m) * W
        v3_second = (N0 + 2) * W
        d1 = [v3.distance(a3, b) for b in b_pts]
        d2 = v3.distance(b_pts[0], b_pts[1])
        out["corner_paths"] = {"expected_1": v3_first, "dijkstra_1": d1, "expected_2": v3_second, "dijkstra_2": d2}
        if not all(_close(d, v3_first) for d in d1) or not _close(d2, v3_second):
            failures.append({"kind": "corner_paths", **out["corner_paths"]})
        out["path_split"] = _split_corner_geodesic(it, G1, corners, rw, N0, W)
        if not out["path_split"]["ok"]:
            failures.append({"kind": "path_split", **out["path_split"]})
    out["failures"] = failures
    out["ok"] = not failures
    if failures:
        raise GoodAssignmentFailure("gasket assignment is not good", witness=failures)
    return out


def _split_corner_geodesic(it, G1, corners, rw, N0, W):
    """Split the a1-a3 geodesic at the component boundaries and bound each piece."""
    m = it.m
    _, path = G1.geodesic(corners[0], corners[2])
    verts = {}
    for key, members in (("V1", it.components[1]), ("V3", it.components[3]),
                         ("rest", [i for i in range(1, len(it.words) + 1)
                                   if i not in it.components[1] and i not in it.components[3]])):
        vs = set()
        for a, b, w, (I, h) in G1.edges:
            if I[0] in members:
                vs.update((a, b))
        verts[key] = vs
    cut1 = verts["V1"] & (verts["rest"] | verts["V3"])
    p1, rest = decompose_path_by_subgraphs(path, verts["V1"], verts["rest"] | verts["V3"], cut1)
    cut3 = verts["V3"] & verts["rest"]
    if len(rest) > 1 and rest[0] in cut3:
        p2, p3 = [rest[0]], rest
    else:
        p2, p3 = decompose_path_by_subgraphs(rest, verts["rest"] | (cut1 & set(rest[:1])), verts["V3"], cut3)

    def weight(p):
        return sum((G1.adj[G1.index[a]][G1.index[b]] for a, b in zip(p, p[1:])), 0)
    w1, w2, w3 = weight(p1), weight(p2), weight(p3)
    b1 = rw[1] + (N0 * m + m) * W
    b2 = (N0 - 1) * W + rw[2]
    b3 = rw[3] + (N0 * m + m) * W
    ok = w1 >= b1 - 1e-12 and w2 >= b2 - 1e-12 and w3 >= b3 - 1e-12
    return {"pieces": [float(w1), float(w2), float(w3)], "bounds": [float(b1), float(b2), float(b3)], "ok": ok}


def conformal_upper_bound(g, m_values, scheme="uniform", s_factor=1.01, verify=True):
    """Rows (m, dim_S(F_m, D)) for the chosen weight scheme."""
    rows = []
    N0 = augmentation_report(g).N0 if scheme == "uniform" else None
    for m in m_values:
        it = vertex_iteration(g, m, check=verify)
        ga = uniform_assignment(it, N0) if scheme == "uniform" else gasket_assignment(it, s_factor=s_factor)
        if verify:
            verify_gasket_good(it, ga)
        row = {"m": m, "maps": len(it.words), "dim": similarity_dimension(ga.R)}
        if scheme == "general":
            row["s"] = ga.s
            row["W"] = float(ga.W)
        rows.append(row)
    return rows
