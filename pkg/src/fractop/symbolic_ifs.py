"""Planar similitude IFSs with declared critical identifications.

Points of the attractor are handled through their codings: eventually
periodic words over the alphabet {1..N}.  Two codings name the same point
when one is obtained from the other by replacing a suffix ``i.v`` with
``j.u`` for a declared identification ``f_i(pi(v)) = f_j(pi(u))``.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import total_ordering
from itertools import product

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (GeometryMismatch, InputError, InvalidWord, NotPcf,
                     RewriteOverflow, SicViolation, ValidationError)


def _primitive(per):
    n = len(per)
    for d in range(1, n + 1):
        if n % d == 0 and per[:d] * (n // d) == per:
            return per[:d]
    return per


@total_ordering
class EvWord:
    """Eventually periodic word ``pre . per per per ...`` in normal form.

    The period is primitive and the preperiod cannot be shortened by
    rotating the period, so equal infinite words have equal fields.
    """
    __slots__ = ("pre", "per", "_h")

    def __init__(self, pre=(), per=(1,)):
        pre = tuple(int(s) for s in pre)
        per = tuple(int(s) for s in per)
        if not per:
            raise InvalidWord("period must be nonempty")
        per = _primitive(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = per[-1:] + per[:-1]
        self.pre = pre
        self.per = per
        self._h = hash((pre, per))

    def __eq__(self, other):
        return isinstance(other, EvWord) and self.pre == other.pre and self.per == other.per

    def __hash__(self):
        return self._h

    def __lt__(self, other):
        n = max(len(self.pre), len(other.pre)) + math.lcm(len(self.per), len(other.per))
        return self.head(n) < other.head(n)

    def __repr__(self):
        return "EvWord(%s)" % format_word(self)

    def __len__(self):
        return len(self.pre) + len(self.per)

    def symbol(self, k):
        """k-th symbol, 0-based."""
        if k < len(self.pre):
            return self.pre[k]
        return self.per[(k - len(self.pre)) % len(self.per)]

    def head(self, n):
        return tuple(self.symbol(k) for k in range(n))

    def shift(self, n=1):
        if n <= len(self.pre):
            return EvWord(self.pre[n:], self.per)
        k = (n - len(self.pre)) % len(self.per)
        return EvWord((), self.per[k:] + self.per[:k])

    def prepend(self, word):
        return EvWord(tuple(word) + self.pre, self.per)

    def common_prefix(self, other):
        """Length of the longest common prefix; ``math.inf`` if equal."""
        if self == other:
            return math.inf
        k = 0
        while self.symbol(k) == other.symbol(k):
            k += 1
        return k

    def symbols(self):
        return set(self.pre) | set(self.per)

    def to_json(self):
        return {"pre": list(self.pre), "per": list(self.per)}

    @classmethod
    def from_json(cls, d):
        try:
            return cls(d.get("pre", ()), d["per"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("bad word %r" % (d,)) from exc


def format_word(w):
    sep = "" if max(w.pre + w.per) < 10 else ","
    return sep.join(map(str, w.pre)) + "(" + sep.join(map(str, w.per)) + ")"


def parse_word(text):
    """Parse ``"12(3)"`` or ``"1,12(3,4)"`` into an EvWord."""
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise InputError("word %r needs a parenthesised period" % text)
    pre, per = text[:-1].split("(", 1)

    def split(s):
        if not s:
            return ()
        if "," in s:
            return tuple(int(t) for t in s.split(",") if t)
        return tuple(int(ch) for ch in s)
    try:
        return EvWord(split(pre), split(per))
    except ValueError as exc:
        raise InputError("bad word %r" % text) from exc


@dataclass(frozen=True)
class Similitude:
    ratio: float
    rotation: float = 0.0          # radians, applied after the optional reflection
    reflect: bool = False          # reflection in the x axis
    translation: tuple = (0.0, 0.0)

    @property
    def matrix(self):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = np.array([[c, -s], [s, c]]) * self.ratio
        if self.reflect:
            m = m @ np.diag([1.0, -1.0])
        return m

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.matrix.T + np.asarray(self.translation, dtype=float)

    def compose(self, other):
        """self o other."""
        t = self.matrix @ np.asarray(other.translation, float) + np.asarray(self.translation, float)
        rot = self.rotation + (-other.rotation if self.reflect else other.rotation)
        return Similitude(self.ratio * other.ratio, rot, self.reflect != other.reflect,
                          (float(t[0]), float(t[1])))

    def inverse_apply(self, pts):
        pts = np.asarray(pts, dtype=float) - np.asarray(self.translation, float)
        return pts @ np.linalg.inv(self.matrix).T

    def fixed_point(self):
        return np.linalg.solve(np.eye(2) - self.matrix, np.asarray(self.translation, float))


@dataclass(frozen=True)
class Identification:
    """f_i(pi(v)) = f_j(pi(u)); symbols are 1-based."""
    i: int
    j: int
    u: EvWord
    v: EvWord


class IfsSpec:
    def __init__(self, maps, identifications=(), lipschitz_bounds=None,
                 tolerance=1e-9, name=None, base_words=None):
        self.maps = tuple(maps)
        self.identifications = tuple(identifications)
        self.lipschitz_bounds = None if lipschitz_bounds is None else tuple(
            (float(a), float(b)) for a, b in lipschitz_bounds)
        self.tolerance = float(tolerance)
        self.name = name
        # words over a parent alphabet when this system re-expresses another one
        self.base_words = None if base_words is None else tuple(tuple(w) for w in base_words)
        self._cache = {}
        self._check()

    def _check(self):
        n = len(self.maps)
        if n == 0:
            raise ValidationError("an IFS needs at least one map")
        for k, m in enumerate(self.maps):
            if not 0.0 < m.ratio < 1.0:
                raise ValidationError("map %d has ratio %r outside (0,1)" % (k + 1, m.ratio))
        for idf in self.identifications:
            if idf.i == idf.j:
                raise ValidationError("identification with i == j = %d" % idf.i)
            for s in (idf.i, idf.j):
                if not 1 <= s <= n:
                    raise InvalidWord("identification symbol %d out of range" % s)
            for w in (idf.u, idf.v):
                if not all(1 <= s <= n for s in w.symbols()):
                    raise InvalidWord("identification word %s out of range" % format_word(w))
        if self.lipschitz_bounds is not None:
            if len(self.lipschitz_bounds) != n:
                raise ValidationError("need one Lipschitz pair per map")
            for (a, b), m in zip(self.lipschitz_bounds, self.maps):
                if not 0 < a <= m.ratio <= b < 1:
                    raise ValidationError("Lipschitz bounds (%r, %r) do not bracket ratio %r" % (a, b, m.ratio))

    @property
    def N(self):
        return len(self.maps)

    @property
    def ratios(self):
        return [m.ratio for m in self.maps]

    def bounds(self):
        """Per-map (A_i, B_i); the ratio itself for similitudes."""
        if self.lipschitz_bounds is not None:
            return list(self.lipschitz_bounds)
        return [(r, r) for r in self.ratios]

    def compose_word(self, word):
        g = None
        for s in reversed(tuple(word)):
            g = self.maps[s - 1] if g is None else self.maps[s - 1].compose(g)
        return g

    def word_ratio(self, word):
        r = 1.0
        for s in word:
            r *= self.maps[s - 1].ratio
        return r

    # serialisation -------------------------------------------------------
    def to_dict(self):
        d = {
            "maps": [{"ratio": m.ratio, "rotation_deg": math.degrees(m.rotation),
                      "reflect": bool(m.reflect), "translation": [m.translation[0], m.translation[1]]}
                     for m in self.maps],
            "identifications": [{"i": f.i, "j": f.j, "u": f.u.to_json(), "v": f.v.to_json()}
                                for f in self.identifications],
            "tolerance": self.tolerance,
        }
        if self.lipschitz_bounds is not None:
            d["lipschitz_bounds"] = [list(p) for p in self.lipschitz_bounds]
        return d

    @classmethod
    def from_dict(cls, d, name=None):
        try:
            maps = [Similitude(float(m["ratio"]), math.radians(float(m.get("rotation_deg", 0.0))),
                               bool(m.get("reflect", False)),
                               tuple(float(x) for x in m.get("translation", (0.0, 0.0))))
                    for m in d["maps"]]
            idfs = [Identification(int(f["i"]), int(f["j"]), EvWord.from_json(f["u"]),
                                   EvWord.from_json(f["v"]))
                    for f in d.get("identifications", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("malformed IFS document: %s" % exc) from exc
        return cls(maps, idfs, d.get("lipschitz_bounds"), d.get("tolerance", 1e-9), name=name)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError("cannot read %s: %s" % (path, exc)) from exc
        return cls.from_dict(d, name=str(path))

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # rewriting -----------------------------------------------------------
    @property
    def rules(self):
        if "rules" not in self._cache:
            rules = {}
            for f in self.identifications:
                a, b = f.v.prepend((f.i,)), f.u.prepend((f.j,))
                rules.setdefault(a, set()).add(b)
                rules.setdefault(b, set()).add(a)
            self._cache["rules"] = rules
        return self._cache["rules"]

    def identified_pairs(self):
        """Map (i, j) -> list of (u, v) with f_i(v) = f_j(u), both orders."""
        if "pairs" not in self._cache:
            pairs = {}
            for f in self.identifications:
                pairs.setdefault((f.i, f.j), []).append((f.u, f.v))
                pairs.setdefault((f.j, f.i), []).append((f.v, f.u))
            self._cache["pairs"] = pairs
        return self._cache["pairs"]


def check_word(spec, w):
    if not all(1 <= s <= spec.N for s in w.symbols()):
        raise InvalidWord("word %s uses a symbol outside 1..%d" % (format_word(w), spec.N))


def eval_coding(spec, w):
    """pi(w): the fixed point of f_per pushed through f_pre."""
    check_word(spec, w)
    fp = spec._cache.setdefault("fixed", {})
    if w.per not in fp:
        fp[w.per] = spec.compose_word(w.per).fixed_point()
    p = fp[w.per]
    for s in reversed(w.pre):
        p = spec.maps[s - 1](p)
    return np.asarray(p, dtype=float)


def coding_class(spec, w, cap=None):
    """All codings of pi(w) reachable by identification rewrites."""
    cache = spec._cache.setdefault("class", {})
    if w in cache:
        return cache[w]
    check_word(spec, w)
    rules = spec.rules
    cap = 10 * len(w) if cap is None else cap
    seen = {w}
    stack = [w]
    rewrites = 0
    while stack:
        x = stack.pop()
        for k in range(len(x)):
            alts = rules.get(x.shift(k))
            if not alts:
                continue
            head = x.head(k)
            for a in alts:
                y = a.prepend(head)
                if y not in seen:
                    rewrites += 1
                    if rewrites > cap:
                        raise RewriteOverflow("more than %d rewrites from %s; undeclared identification?"
                                              % (cap, format_word(w)))
                    seen.add(y)
                    stack.append(y)
    cls = frozenset(seen)
    for c in cls:
        cache[c] = cls
    return cls


def lowest_coding(spec, w):
    """Lexicographically smallest coding of pi(w)."""
    return min(coding_class(spec, w))


def same_point(spec, a, b):
    return b in coding_class(spec, a)


def first_symbols(spec, w):
    return {c.symbol(0) for c in coding_class(spec, w)}


def pull_back(spec, w, s):
    """Lowest coding of f_s^{-1}(pi(w)), or None if pi(w) is not in f_s(K)."""
    for c in coding_class(spec, w):
        if c.symbol(0) == s:
            return lowest_coding(spec, c.shift())
    return None


@dataclass
class PostCriticalData:
    codings: frozenset
    classes: dict          # lowest coding -> frozenset of codings
    points: dict           # lowest coding -> 2-vector
    boundary_symbols: frozenset
    reps: list = field(default_factory=list)

    def rep(self, w):
        for r, cls in self.classes.items():
            if w in cls:
                return r
        return None

    def label(self, rep):
        return "p%d" % (self.reps.index(rep) + 1)

    def to_dict(self):
        return {"points": [{"label": self.label(r), "lowest": format_word(r),
                            "codings": sorted(format_word(c) for c in self.classes[r]),
                            "xy": [float(self.points[r][0]), float(self.points[r][1])]}
                           for r in self.reps],
                "boundary_symbols": sorted(self.boundary_symbols)}


def compute_post_critical(spec, cap=10000, verify=True):
    """Shift-closure of the critical codings, grouped into points."""
    key = ("pcd", cap, verify)
    if key in spec._cache:
        return spec._cache[key]
    frontier = []
    for f in spec.identifications:
        frontier.append(f.v)
        frontier.append(f.u)
    codings = set()
    while frontier:
        w = frontier.pop()
        if w in codings:
            continue
        for c in coding_class(spec, w):
            if c not in codings:
                codings.add(c)
                frontier.append(c.shift())
        if len(codings) > cap:
            raise NotPcf("post-critical closure exceeds %d codings" % cap)
    classes = {}
    for c in codings:
        cls = coding_class(spec, c)
        classes[min(cls)] = cls
    reps = sorted(classes)
    points = {}
    scale = _scale(spec)
    for r in reps:
        p = eval_coding(spec, r)
        if verify:
            for c in classes[r]:
                if np.linalg.norm(eval_coding(spec, c) - p) > 1e3 * spec.tolerance * scale:
                    raise SicViolation("codings %s and %s are identified but map to different points"
                                       % (format_word(r), format_word(c)))
        points[r] = p
    pcd = PostCriticalData(frozenset(codings), {r: classes[r] for r in reps}, points,
                           frozenset(c.symbol(0) for c in codings), reps)
    spec._cache[key] = pcd
    return pcd


def _scale(spec):
    fps = np.array([m.fixed_point() for m in spec.maps])
    return max(1.0, float(np.ptp(fps, axis=0).max()) if len(fps) > 1 else 1.0)


def invariant_ball(spec, center=None):
    """(c, R) with f_i(B(c,R)) inside B(c,R) for every map, hence K inside B(c,R)."""
    fps = np.array([m.fixed_point() for m in spec.maps])
    c = fps.mean(axis=0) if center is None else np.asarray(center, float)
    R = max(np.linalg.norm(m(c) - c) / (1.0 - m.ratio) for m in spec.maps)
    return c, float(R)


def base_points(spec, pcd=None):
    """Known points of K: post-critical points and the fixed points of the maps."""
    pts = [m.fixed_point() for m in spec.maps]
    if pcd is not None:
        pts += [pcd.points[r] for r in pcd.reps]
    pts = np.array(pts)
    keep = []
    for p in pts:
        if all(np.linalg.norm(p - q) > 1e-12 for q in keep):
            keep.append(p)
    return np.array(keep)


def net_levels(spec, base, depth):
    """Yield (d, pts) with pts = images of base under all words of length d.

    Points come in N contiguous blocks by first symbol.
    """
    pts = base
    for d in range(1, depth + 1):
        pts = np.concatenate([m(pts) for m in spec.maps])
        yield d, pts


def _diameter(pts):
    if len(pts) < 2:
        return 0.0
    try:
        from scipy.spatial import ConvexHull
        hull = pts[ConvexHull(pts).vertices]
    except Exception:
        # degenerate (collinear) cloud: extreme points along principal axis
        c = pts - pts.mean(axis=0)
        axis = np.linalg.svd(c, full_matrices=False)[2][0]
        proj = c @ axis
        hull = pts[[int(np.argmin(proj)), int(np.argmax(proj))]]
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass
class SicAscReport:
    sic_ok: bool
    asc_constant_estimate: float
    xi1: float
    xi2: float
    diam_lower: float
    diam_upper: float
    mesh: float
    depth_used: int
    pairs: list
    notes: list

    @property
    def asc_ok(self):
        return self.asc_constant_estimate > 1e-9

    def to_dict(self):
        def f(x):
            return "inf" if x == math.inf else float(x)
        return {"sic_ok": self.sic_ok, "asc_constant_estimate": f(self.asc_constant_estimate),
                "xi1": f(self.xi1), "xi2": f(self.xi2), "diam_lower": f(self.diam_lower),
                "diam_upper": f(self.diam_upper), "mesh": f(self.mesh),
                "depth_used": self.depth_used, "pairs": self.pairs, "notes": self.notes}


def _asc_ratio(X, Y, z, chunk=1024):
    best = math.inf
    dyz = np.linalg.norm(Y - z, axis=1)
    for s in range(0, len(X), chunk):
        x = X[s:s + chunk]
        dxz = np.linalg.norm(x - z, axis=1)
        dxy = cdist(x, Y)
        m = np.maximum(dxz[:, None], dyz[None, :])
        ok = m > 0
        if ok.any():
            best = min(best, float((dxy[ok] / m[ok]).min()))
    return best


def verify_sic_asc(spec, depth=8, pcd=None, net_cap=20000, asc_cap=800):
    """Net-based estimates of the SIC, the ASC constant, xi1 and xi2.

    xi1/xi2 are reported as certified lower bounds: sampled minima minus
    the mesh radius, maximised over all depths up to the one used.
    """
    if depth < 1:
        raise ValidationError("depth must be at least 1")
    pcd = compute_post_critical(spec) if pcd is None else pcd
    N = spec.N
    base = base_points(spec, pcd)
    rmax = max(spec.ratios)
    _, R0 = invariant_ball(spec)
    d_eff = 1
    while d_eff < depth and N ** (d_eff + 1) * len(base) <= net_cap:
        d_eff += 1
    declared = {}
    for f in spec.identifications:
        key = (min(f.i, f.j), max(f.i, f.j))
        z = spec.maps[f.i - 1](eval_coding(spec, f.v))
        z2 = spec.maps[f.j - 1](eval_coding(spec, f.u))
        if np.linalg.norm(z - z2) > 1e3 * spec.tolerance * _scale(spec):
            raise SicViolation("identification f_%d(v) = f_%d(u) fails numerically (%g apart)"
                               % (f.i, f.j, np.linalg.norm(z - z2)))
        if key in declared and np.linalg.norm(declared[key] - z) > 1e3 * spec.tolerance * _scale(spec):
            raise SicViolation("cylinders %d and %d declared to meet in two points" % key)
        declared[key] = z
    xi1 = -math.inf
    xi2 = -math.inf
    notes = []
    pairs_out = []
    asc = math.inf
    sic_ok = True
    diam_lo = 0.0
    diam_up = 2 * R0
    mesh = rmax * diam_up
    asc_depth = 1
    while asc_depth < d_eff and N ** asc_depth * len(base) <= asc_cap * N:
        asc_depth += 1
    for d, pts in net_levels(spec, base, d_eff):
        B = len(pts) // N
        blocks = [pts[k * B:(k + 1) * B] for k in range(N)]
        diam_lo = max(diam_lo, _diameter(pts))
        diam_up = min(diam_up, diam_lo + 2 * rmax ** d * 2 * R0)
        mesh = rmax ** d * diam_up
        trees = [cKDTree(b) for b in blocks]
        lo1 = math.inf
        for i in range(N):
            for j in range(i + 1, N):
                dist_ij = float(trees[j].query(blocks[i])[0].min())
                if (i + 1, j + 1) in declared:
                    continue
                lo1 = min(lo1, dist_ij - 2 * mesh)
        lo2 = math.inf
        for i in range(N):
            for r in pcd.reps:
                if i + 1 in {c.symbol(0) for c in pcd.classes[r]}:
                    continue
                lo2 = min(lo2, float(trees[i].query(pcd.points[r])[0]) - mesh)
        xi1 = max(xi1, lo1)
        xi2 = max(xi2, lo2)
        if d == asc_depth:
            for (i, j), z in sorted(declared.items()):
                a = _asc_ratio(blocks[i - 1], blocks[j - 1], z)
                asc = min(asc, a)
        if d == d_eff:
            for i in range(N):
                for j in range(i + 1, N):
                    dd, _ = trees[j].query(blocks[i])
                    near = blocks[i][dd <= 2 * mesh]
                    entry = {"i": i + 1, "j": j + 1, "declared": (i + 1, j + 1) in declared,
                             "net_distance": float(dd.min())}
                    if (i + 1, j + 1) in declared:
                        z = declared[(i + 1, j + 1)]
                        if len(near):
                            link = 10 * mesh
                            ncomp = _clusters(near, link)
                            far = float(np.linalg.norm(near - z, axis=1).min())
                            if ncomp > 1:
                                raise SicViolation("cylinders %d and %d touch in separated clusters"
                                                   % (i + 1, j + 1))
                            if far > link:
                                raise SicViolation("cylinders %d and %d touch away from the declared point"
                                                   % (i + 1, j + 1))
                        entry["point"] = [float(z[0]), float(z[1])]
                    elif dd.min() <= 2 * mesh:
                        sic_ok = False
                        notes.append("cylinders %d and %d come within the mesh but have no declared "
                                     "identification" % (i + 1, j + 1))
                    pairs_out.append(entry)
    if N == 1:
        xi1 = math.inf
    if xi1 == -math.inf:
        xi1 = math.inf
    if xi2 == -math.inf:
        xi2 = math.inf
    return SicAscReport(sic_ok, asc, xi1, xi2, diam_lo, diam_up, mesh, d_eff, pairs_out, notes)


def _clusters(pts, link):
    if len(pts) <= 1:
        return len(pts)
    tree = cKDTree(pts)
    pr = np.array(sorted(tree.query_pairs(link)), dtype=int).reshape(-1, 2)
    g = coo_matrix((np.ones(len(pr)), (pr[:, 0], pr[:, 1])), shape=(len(pts), len(pts)))
    return connected_components(g, directed=False)[0]


def power_spec(spec, m):
    """The IFS F^m = {f_I : |I| = m}, with identifications derived from F.

    Word I = i_1..i_m gets index 1 + sum (i_k - 1) N^(m-k).
    """
    if m == 1:
        return spec
    N = spec.N
    words = list(product(range(1, N + 1), repeat=m))
    index = {w: k + 1 for k, w in enumerate(words)}
    maps = [spec.compose_word(w) for w in words]

    def recode(w):
        # regroup an F-word into blocks of m
        pre = list(w.pre)
        per = list(w.per)
        while len(pre) % m:
            pre.append(per[0])
            per = per[1:] + per[:1]
        per = per * (m // math.gcd(m, len(per)))
        blk = lambda seq: tuple(index[tuple(seq[k:k + m])] for k in range(0, len(seq), m))
        return EvWord(blk(pre), blk(per))

    idfs = {}
    seeds = set()
    for f in spec.identifications:
        seeds.add(f.v.prepend((f.i,)))
    for c in seeds:
        for k in range(m):
            for P in product(range(1, N + 1), repeat=k):
                cls = coding_class(spec, c.prepend(P))
                by_cyl = {}
                for x in sorted(cls):
                    by_cyl.setdefault(x.head(m), x)
                cyls = sorted(by_cyl)
                for a in range(len(cyls)):
                    for b in range(a + 1, len(cyls)):
                        I, J = cyls[a], cyls[b]
                        key = (index[I], index[J])
                        if key not in idfs:
                            idfs[key] = Identification(index[I], index[J],
                                                       recode(by_cyl[J].shift(m)),
                                                       recode(by_cyl[I].shift(m)))
    return IfsSpec(maps, [idfs[k] for k in sorted(idfs)], tolerance=spec.tolerance,
                   name=(spec.name or "F") + "^%d" % m, base_words=words)


def random_word(rng, N, max_pre=6, max_per=3):
    lp = int(rng.integers(0, max_pre + 1))
    lq = int(rng.integers(1, max_per + 1))
    return EvWord(tuple(int(s) for s in rng.integers(1, N + 1, lp)),
                  tuple(int(s) for s in rng.integers(1, N + 1, lq)))


def recode_with_prefix_code(w, code):
    """Re-express word w (over a parent alphabet) over a complete prefix code.

    ``code`` is a list of parent words; returns an EvWord over 1..len(code).
    """
    lookup = {tuple(c): k + 1 for k, c in enumerate(code)}
    maxlen = max(len(c) for c in code)
    out = []
    seen = {}
    pos = 0
    while True:
        state = None
        if pos >= len(w.pre):
            state = (pos - len(w.pre)) % len(w.per)
            if state in seen:
                start = seen[state]
                return EvWord(out[:start], out[start:])
            seen[state] = len(out)
        for L in range(1, maxlen + 1):
            k = lookup.get(w.head(pos + L)[pos:])
            if k is not None:
                out.append(k)
                pos += L
                break
        else:
            raise InvalidWord("word %s cannot be parsed by the prefix code" % format_word(w))
