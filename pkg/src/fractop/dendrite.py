"""Self-similar dendrites: tree certificate, primary arcs, weights and the dimension trend.

Cylinders and the points where they meet form a bipartite incidence graph.
For a dendrite with the single intersection condition this graph is a tree at
every level, which gives unique cylinder chains between points.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .errors import (AssignmentInfeasible, DomainError, NotDendrite, SamePoint,
                     SystemExtractionFailure)
from .graphs import WeightedRefinedGraph, similarity_dimension
from .symbolic_ifs import (EvWord, compute_post_critical, eval_coding, format_word,
                           lowest_coding, power_spec, pull_back)


class HataTree:
    """Incidence graph between level-k cylinders ("c", word) and junction points ("j", coding)."""

    def __init__(self, spec, level, pcd=None):
        self.spec = spec
        self.level = level
        pcd = compute_post_critical(spec) if pcd is None else pcd
        self.words = list(product(range(1, spec.N + 1), repeat=level))
        holders = {}
        for I in self.words:
            for r in pcd.reps:
                holders.setdefault(lowest_coding(spec, r.prepend(I)), []).append(I)
        self.junctions = {v: ws for v, ws in sorted(holders.items()) if len(ws) >= 2}
        self.adj = {("c", I): [] for I in self.words}
        for v, ws in self.junctions.items():
            self.adj[("j", v)] = [("c", I) for I in ws]
            for I in ws:
                self.adj[("c", I)].append(("j", v))

    def edges(self):
        for v, ws in self.junctions.items():
            for I in ws:
                yield ("j", v), ("c", I)

    def node(self, w):
        """Node of a point: its junction if it is one, else its unique cylinder."""
        if w in self.junctions:
            return ("j", w)
        return ("c", w.head(self.level))

    def path(self, a, b):
        prev = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for y in self.adj[x]:
                if y not in prev:
                    prev[y] = x
                    queue.append(y)
        if b not in prev:
            return None
        out = [b]
        while out[-1] != a:
            out.append(prev[out[-1]])
        return out[::-1]


def _find_cycle(adj, a, b):
    """A path a..b in the graph given by adj, closed by the edge b-a."""
    prev = {a: None}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    out = [b]
    while out[-1] != a:
        out.append(prev[out[-1]])
    return out[::-1] + [a]


def _node_label(n):
    kind, x = n
    return "".join(map(str, x)) if kind == "c" else format_word(x)


def certify_dendrite(spec, depth=4, pcd=None, max_words=50000):
    """True if the incidence graph is a tree at levels 1..depth; NotDendrite with a cycle otherwise."""
    pcd = compute_post_critical(spec) if pcd is None else pcd
    for k in range(1, depth + 1):
        if spec.N ** k > max_words:
            break
        T = HataTree(spec, k, pcd)
        parent = {n: n for n in T.adj}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        seen = {}
        for a, b in T.edges():
            ra, rb = find(a), find(b)
            if ra == rb:
                cyc = _find_cycle(seen, a, b)
                raise NotDendrite("cycle in the level-%d incidence graph" % k,
                                  witness=[_node_label(n) for n in cyc])
            parent[ra] = rb
            seen.setdefault(a, []).append(b)
            seen.setdefault(b, []).append(a)
        roots = {find(n) for n in T.adj}
        if len(roots) > 1:
            raise NotDendrite("level-%d cylinders are not connected" % k, witness=len(roots))
    return True


@dataclass
class ArcChain:
    endpoints: tuple
    cylinders: list                 # canonical blocks, as 1-letter words
    fine: list = field(default_factory=list)       # level-k cylinders along the arc
    breakpoints: list = field(default_factory=list)  # junction codings between blocks

    def to_dict(self):
        w = lambda I: "".join(map(str, I))
        return {"endpoints": [format_word(e) for e in self.endpoints],
                "cylinders": [w(I) for I in self.cylinders], "fine": [w(I) for I in self.fine],
                "breakpoints": [format_word(p) for p in self.breakpoints]}


def _tree(spec, level, pcd=None):
    cache = spec._cache.setdefault("hata_tree", {})
    if level not in cache:
        cache[level] = HataTree(spec, level, pcd)
    return cache[level]


def arc_chain(spec, a, b, level=1):
    a, b = lowest_coding(spec, a), lowest_coding(spec, b)
    if a == b:
        raise SamePoint("arc endpoints coincide")
    T = _tree(spec, level)
    path = T.path(T.node(a), T.node(b))
    if path is None:
        raise NotDendrite("no cylinder chain between %s and %s" % (format_word(a), format_word(b)))
    fine = [x for kind, x in path if kind == "c"]
    blocks, breaks = [], []
    for t, (kind, x) in enumerate(path):
        if kind == "c":
            if not blocks or blocks[-1] != x[:1]:
                if blocks:
                    breaks.append(path[t - 1][1])
                blocks.append(x[:1])
    return ArcChain((a, b), blocks, fine, breaks)


def _blocks(spec, a, b):
    """Level-1 blocks of the arc [a, b]: (symbol, entry, exit) with entry/exit pulled back."""
    T = _tree(spec, 1)
    path = T.path(T.node(a), T.node(b))
    out = []
    for t, (kind, x) in enumerate(path):
        if kind != "c":
            continue
        i = x[0]
        entry = a if t == 0 else path[t - 1][1]
        exit_ = b if t == len(path) - 1 else path[t + 1][1]
        out.append((i, pull_back(spec, entry, i), pull_back(spec, exit_, i)))
    return out


def median(spec, a, b, c, cap=200):
    """The branch point of the three arcs between a, b and c, as a lowest coding."""
    T = _tree(spec, 1)
    prefix = []
    seen = {}
    pts = [lowest_coding(spec, x) for x in (a, b, c)]
    for step in range(cap):
        if pts[0] == pts[1] or pts[0] == pts[2]:
            return lowest_coding(spec, pts[0].prepend(prefix))
        if pts[1] == pts[2]:
            return lowest_coding(spec, pts[1].prepend(prefix))
        state = tuple(sorted(pts))
        if state in seen:
            k0 = seen[state]
            return lowest_coding(spec, EvWord(tuple(prefix[:k0]), tuple(prefix[k0:])))
        seen[state] = step
        nodes = [T.node(x) for x in pts]
        paths = [T.path(nodes[0], nodes[1]), T.path(nodes[1], nodes[2]), T.path(nodes[0], nodes[2])]
        common = set(paths[0]) & set(paths[1]) & set(paths[2])
        (kind, x), = common
        if kind == "j":
            return lowest_coding(spec, x.prepend(prefix))
        i = x[0]
        new = []
        for p, n in zip(pts, nodes):
            if n == ("c", x):
                new.append(pull_back(spec, p, i))
            else:
                route = T.path(("c", x), n)
                new.append(pull_back(spec, route[1][1], i))
        prefix.append(i)
        pts = new
    raise SystemExtractionFailure("branch point search did not settle in %d steps" % cap)


@dataclass
class PrimaryArcSystem:
    spec: object
    pstar: list                     # lowest codings
    arcs: list                      # (p, q) with p < q
    rules: dict                     # arc index -> [(map index, arc index)]
    ramification: list
    rounds: int

    def arc_path(self, p, q):
        """Arc indices along the main-tree path from p to q."""
        adj = {}
        for k, (a, b) in enumerate(self.arcs):
            adj.setdefault(a, []).append((b, k))
            adj.setdefault(b, []).append((a, k))
        prev = {p: None}
        queue = deque([p])
        while queue:
            x = queue.popleft()
            for y, k in adj.get(x, ()):
                if y not in prev:
                    prev[y] = (x, k)
                    queue.append(y)
        out = []
        x = q
        while prev.get(x) is not None:
            x, k = prev[x]
            out.append(k)
        return out[::-1]

    def to_dict(self):
        return {"pstar": [format_word(p) for p in self.pstar],
                "ramification": [format_word(p) for p in self.ramification],
                "arcs": [[format_word(p), format_word(q)] for p, q in self.arcs],
                "rules": {"v%d" % (k + 1): [[i, "v%d" % (u + 1)] for i, u in r] for k, r in self.rules.items()},
                "rounds": self.rounds}


def build_primary_arc_system(spec, cap=50, pcd=None, certify_depth=2):
    pcd = compute_post_critical(spec) if pcd is None else pcd
    certify_dendrite(spec, certify_depth, pcd)
    pstar = set(pcd.reps)
    ram = set()
    for rounds in range(1, cap + 1):
        new = set(pstar)
        for a, b, c in combinations(sorted(pstar), 3):
            z = median(spec, a, b, c)
            if z not in (a, b, c):
                ram.add(z)
            new.add(z)
        for a, b in combinations(sorted(pstar), 2):
            for i, x, y in _blocks(spec, a, b):
                new.update((x, y))
        if new == pstar:
            break
        pstar = new
    else:
        raise SystemExtractionFailure("P* did not stabilise in %d rounds" % cap, witness=len(pstar))
    pts = sorted(pstar)
    arcs = []
    for a, b in combinations(pts, 2):
        if not any(median(spec, a, b, z) == z for z in pts if z not in (a, b)):
            arcs.append((a, b))
    system = PrimaryArcSystem(spec, pts, arcs, {}, sorted(ram), rounds)
    for k, (a, b) in enumerate(arcs):
        rule = []
        for i, x, y in _blocks(spec, a, b):
            if x != y:
                rule.extend((i, u) for u in system.arc_path(x, y))
        system.rules[k] = rule
    return system


@dataclass
class DendriteAssignment:
    R: list                 # per map of F^m
    m: int
    delta: float
    c: float
    system: PrimaryArcSystem        # over F^m
    classes: dict                   # map index -> "boundary" | "private:v<k>" | "shared"
    L: dict
    private_values: dict            # arc index -> (count, value)
    halvings: int = 0

    def to_dict(self):
        return {"m": self.m, "delta_used": self.delta, "c": self.c, "halvings": self.halvings,
                "L": {"v%d" % (k + 1): v for k, v in self.L.items()},
                "counts": {k: sum(1 for x in self.classes.values() if x.split(":")[0] == k)
                           for k in ("boundary", "private", "shared")}}


def _check_same_pcd(spec, spec_m):
    a = compute_post_critical(spec)
    b = compute_post_critical(spec_m)
    pa = np.array(sorted(tuple(np.round(p, 9)) for p in a.points.values())).reshape(-1, 2)
    pb = np.array(sorted(tuple(np.round(p, 9)) for p in b.points.values())).reshape(-1, 2)
    if pa.shape != pb.shape or not np.allclose(pa, pb, atol=1e-8):
        raise AssignmentInfeasible("post-critical sets of F and F^%d differ" % len(spec_m.base_words[0]))


def assign_weights(system, spec, m, delta, c=1.0, auto_halve=True, max_halvings=60):
    """Weights on F^m with L(v) = 1 on every primary arc."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0,1)")
    if c <= 0:
        raise DomainError("c must be positive")
    spec_m = power_spec(spec, m)
    if m > 1:
        _check_same_pcd(spec, spec_m)
        system = build_primary_arc_system(spec_m)
    pcd = compute_post_critical(spec_m)
    boundary = pcd.boundary_symbols
    owners = {}
    for k, rule in system.rules.items():
        for i, _ in rule:
            owners.setdefault(i, set()).add(k)
    classes = {}
    for i in range(1, spec_m.N + 1):
        if i in boundary:
            classes[i] = "boundary"
        elif len(owners.get(i, ())) == 1:
            classes[i] = "private:v%d" % (next(iter(owners[i])) + 1)
        else:
            classes[i] = "shared"
    ratios = spec_m.ratios
    halvings = 0
    while True:
        R = [delta] * spec_m.N
        for i in boundary:
            R[i - 1] = ratios[i - 1] ** c
        priv = {}
        bad = None
        for k, rule in system.rules.items():
            A = sum(ratios[i - 1] ** c for i, _ in rule if i in boundary)
            own = [i for i, _ in rule if classes[i].startswith("private")]
            n2 = sum(1 for i, _ in rule if classes[i] == "shared")
            rest = 1 - A - n2 * delta
            if own:
                val = rest / len(own)
                priv[k] = (len(set(own)), val)
                for i in own:
                    R[i - 1] = val
                if not 0 < val < 1:
                    bad = (k, val)
            elif abs(rest) > 1e-12:
                raise AssignmentInfeasible("arc v%d has no private cylinder and L(v) = %r" % (k + 1, 1 - rest))
        if bad is None:
            break
        if not auto_halve or halvings >= max_halvings or bad[1] >= 1:
            raise AssignmentInfeasible("private weight %r on arc v%d is outside (0,1) for delta = %g"
                                       % (bad[1], bad[0] + 1, delta), witness=bad)
        delta /= 2
        halvings += 1
    L = {k: math.fsum(R[i - 1] for i, _ in rule) for k, rule in system.rules.items()}
    for k, v in L.items():
        if abs(v - 1) > 1e-12:
            raise AssignmentInfeasible("L(v%d) = %r" % (k + 1, v))
    return DendriteAssignment(R, m, delta, c, system, classes, L, priv, halvings)


def solve_s_m(assign, tol=1e-10):
    """Root of the counting equation for the weights of F^m, with a cross-check against sum R^s."""
    spec_m = assign.system.spec
    Nm = spec_m.N
    boundary = sorted(i for i, k in assign.classes.items() if k == "boundary")
    rb = [spec_m.ratios[i - 1] ** assign.c for i in boundary]
    npriv = sum(n for n, _ in assign.private_values.values())
    rest = Nm - len(boundary) - npriv
    priv = list(assign.private_values.values())
    delta = assign.delta

    def lhs(s):
        return (math.fsum(r ** s for r in rb) + rest * delta ** s
                + math.fsum(n * v ** s for n, v in priv))
    if lhs(0) <= 1:
        raise DomainError("the counting equation has no positive root (LHS(0) = %r)" % lhs(0))
    lo, hi = 0.0, 1.0
    while lhs(hi) > 1:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) > 1:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    moran = similarity_dimension(assign.R)
    return {"s_m": s, "moran_cross_check": moran, "residual": lhs(s) - 1}


def dimension_trend(spec, m_values, delta=1e-3, c=1.0, adaptive=True):
    """Rows {m, delta_used, s_m}; adaptive scales delta by N^-m so the shared mass stays bounded."""
    system = build_primary_arc_system(spec)
    rows = []
    for m in m_values:
        d = delta / spec.N ** m if adaptive else delta
        asg = assign_weights(system, spec, m, d, c)
        sol = solve_s_m(asg)
        rows.append({"m": m, "delta_used": asg.delta, "s_m": sol["s_m"],
                     "moran_cross_check": sol["moran_cross_check"]})
    return rows


# the metric ----------------------------------------------------------------------

def dendrite_graph(assign, n):
    """G_n: copies of the main tree (primary arcs of weight 1) under words of length n over F^m."""
    system = assign.system
    spec = system.spec
    R = assign.R
    pos = {}
    edges = []
    for I in product(range(1, spec.N + 1), repeat=n):
        w = 1.0
        for i in I:
            w *= R[i - 1]
        g = spec.compose_word(I)
        names = {}
        for p in system.pstar:
            v = lowest_coding(spec, p.prepend(I))
            names[p] = v
            if v not in pos:
                q = eval_coding(spec, p)
                pos[v] = g(q) if g is not None else q
        for k, (a, b) in enumerate(system.arcs):
            edges.append((names[a], names[b], w, (I, (k + 1, k + 1))))
    verts = sorted(pos)
    return WeightedRefinedGraph(n, verts, np.array([pos[v] for v in verts]).reshape(-1, 2), edges, False)


class RecursiveMetric:
    """D_n through canonical blocks: D_n(x,y) = sum_j R(j) D_{n-1}(pulled-back block ends)."""

    def __init__(self, assign):
        self.assign = assign
        self.system = assign.system
        self.spec = assign.system.spec
        self._memo = {}

    def __call__(self, x, y, n):
        x, y = lowest_coding(self.spec, x), lowest_coding(self.spec, y)
        if x == y:
            return 0.0
        key = (min(x, y), max(x, y), n)
        if key in self._memo:
            return self._memo[key]
        if n == 0:
            val = float(len(self.system.arc_path(x, y)))
        else:
            val = math.fsum(self.assign.R[i - 1] * self(a, b, n - 1) for i, a, b in _blocks(self.spec, x, y))
        self._memo[key] = val
        return val


def dendrite_metric_check(assign, n, samples=500, seed=0, tol=1e-12):
    """Metric axioms, compatibility with level n-1, self-similarity and the recursive formula on samples."""
    rng = np.random.default_rng(seed)
    spec = assign.system.spec
    G = dendrite_graph(assign, n)
    Gp = dendrite_graph(assign, n - 1) if n >= 1 else None
    rec = RecursiveMetric(assign)
    V = G.vertices
    prev = set(Gp.vertices) if Gp is not None else set()
    D = lambda a, b: G.distance(a, b)
    wit = []
    counts = {"triples": 0, "compat_pairs": 0, "similitude_pairs": 0, "recursive_pairs": 0}
    for _ in range(samples):
        x, y, z = (V[int(k)] for k in rng.integers(0, len(V), 3))
        counts["triples"] += 1
        dxy, dyx, dxz, dzy = D(x, y), D(y, x), D(x, z), D(z, y)
        if abs(dxy - dyx) > tol:
            wit.append({"kind": "symmetry", "x": format_word(x), "y": format_word(y)})
        if dxy > dxz + dzy + tol:
            wit.append({"kind": "triangle", "x": format_word(x), "y": format_word(y), "z": format_word(z)})
        if (x != y) != (dxy > 0):
            wit.append({"kind": "positivity", "x": format_word(x), "y": format_word(y)})
        r = rec(x, y, n)
        counts["recursive_pairs"] += 1
        if abs(r - dxy) > tol * max(1.0, dxy):
            wit.append({"kind": "recursive", "x": format_word(x), "y": format_word(y),
                        "dijkstra": dxy, "recursive": r})
    pv = sorted(prev)
    for _ in range(samples if pv else 0):
        x, y = (pv[int(k)] for k in rng.integers(0, len(pv), 2))
        counts["compat_pairs"] += 1
        a, b = D(x, y), Gp.distance(x, y)
        if abs(a - b) > tol * max(1.0, b):
            wit.append({"kind": "compatibility", "x": format_word(x), "y": format_word(y),
                        "D_n": a, "D_n-1": b})
        i = int(rng.integers(1, spec.N + 1))
        xi, yi = lowest_coding(spec, x.prepend((i,))), lowest_coding(spec, y.prepend((i,)))
        counts["similitude_pairs"] += 1
        if abs(D(xi, yi) - assign.R[i - 1] * b) > tol * max(1.0, b):
            wit.append({"kind": "similitude", "map": i, "x": format_word(x), "y": format_word(y)})
    return {"ok": not wit, "witnesses": wit[:20], "violations": len(wit), "counts": counts}


def compatibility_sample(assign, n, pairs=10000, seed=0, tol=1e-12):
    """Largest |D_n - D_{n-1}| over sampled pairs of X_{n-1} (all pairs when fewer)."""
    G = dendrite_graph(assign, n)
    Gp = dendrite_graph(assign, n - 1)
    V = Gp.vertices
    all_pairs = [(a, b) for a, b in combinations(V, 2)]
    if len(all_pairs) > pairs:
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(all_pairs), pairs, replace=False)
        all_pairs = [all_pairs[k] for k in sorted(idx)]
    worst = 0.0
    for a, b in all_pairs:
        worst = max(worst, abs(G.distance(a, b) - Gp.distance(a, b)))
    return {"pairs": len(all_pairs), "max_abs_diff": worst, "ok": worst <= tol}
