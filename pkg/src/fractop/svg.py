"""Deterministic SVG scenes: triangle iterations, refined graphs, main trees, automata."""
import math
from itertools import product

import numpy as np
from scipy.spatial import ConvexHull

from .symbolic_ifs import base_points, eval_coding, net_levels

SIZE = 480
PAD = 20
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _f(x):
    return "%.3f" % x


class Canvas:
    def __init__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = max(float((hi - lo).max()), 1e-12)
        self.lo, self.scale = lo, (SIZE - 2 * PAD) / span
        self.height = PAD * 2 + float(hi[1] - lo[1]) * self.scale
        self.items = []

    def xy(self, p):
        x = PAD + (p[0] - self.lo[0]) * self.scale
        y = self.height - PAD - (p[1] - self.lo[1]) * self.scale
        return _f(x), _f(y)

    def polygon(self, pts, fill, stroke="#333333", width=0.5, opacity=1.0):
        coords = " ".join("%s,%s" % self.xy(p) for p in pts)
        self.items.append('<polygon points="%s" fill="%s" fill-opacity="%.2f" stroke="%s" stroke-width="%.2f"/>'
                          % (coords, fill, opacity, stroke, width))

    def polyline(self, pts, stroke, width=1.5):
        coords = " ".join("%s,%s" % self.xy(p) for p in pts)
        self.items.append('<polyline points="%s" fill="none" stroke="%s" stroke-width="%.2f"/>'
                          % (coords, stroke, width))

    def line(self, a, b, stroke="#333333", width=1.0):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        self.items.append('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="%s" stroke-width="%.2f"/>'
                          % (x1, y1, x2, y2, stroke, width))

    def circle(self, p, r=3.0, fill="#000000"):
        x, y = self.xy(p)
        self.items.append('<circle cx="%s" cy="%s" r="%.2f" fill="%s"/>' % (x, y, r, fill))

    def render(self, title):
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%d" height="%d" '
                'viewBox="0 0 %d %d">\n<title>%s</title>\n' % (SIZE, math.ceil(self.height), SIZE,
                                                              math.ceil(self.height), _esc(title)))
        return head + "\n".join(self.items) + "\n</svg>\n"


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _outline(spec, depth=5, cap=20000):
    """Convex hull of a cylinder net; the triangle itself when every point lies in it."""
    pts = base_points(spec)
    for d, net in net_levels(spec, pts, depth):
        if len(net) > cap:
            break
        pts = net
    if len(pts) < 3:
        return pts
    try:
        hull = ConvexHull(pts)
        return pts[hull.vertices]
    except Exception:
        lo, hi = pts[np.argmin(pts[:, 0])], pts[np.argmax(pts[:, 0])]
        return np.array([lo, hi])


def iteration_svg(spec, m=1, gasket_iteration=None):
    """Images of the basic shape under the maps of F_m (gaskets) or under words of length m."""
    if gasket_iteration is not None:
        shape = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        maps = gasket_iteration.spec.maps
        groups = {}
        for k, comp in gasket_iteration.components.items():
            for i in comp:
                groups[i] = k
        colour = lambda i: PALETTE[groups.get(i, 0) % len(PALETTE)] if i in groups else "#bbbbbb"
    else:
        shape = _outline(spec)
        words = list(product(range(1, spec.N + 1), repeat=m))
        maps = [spec.compose_word(w) for w in words]
        colour = lambda i: PALETTE[(words[i - 1][0] - 1) % len(PALETTE)]
    c = Canvas(shape)
    c.polygon(shape, "#ffffff", width=1.0)
    for i, g in enumerate(maps, start=1):
        c.polygon(g(shape), colour(i), width=0.4, opacity=0.85)
    return c.render("%s iteration m=%d, %d pieces" % (spec.name or "IFS", m, len(maps)))


def graph_svg(graph, title="refined graph"):
    c = Canvas(graph.positions)
    for a, b, w, _ in graph.edges:
        c.line(graph.positions[graph.index[a]], graph.positions[graph.index[b]], "#1f77b4", 1.0)
    for p in graph.positions:
        c.circle(p, 2.5)
    return c.render("%s: %d vertices, %d edges" % (title, len(graph.vertices), len(graph.edges)))


def main_tree_svg(system, level=4, cap=4096):
    """Main tree drawn through junction points of a fine cylinder chain, over the cylinder outline."""
    from .dendrite import _tree
    spec = system.spec
    while spec.N ** level > cap and level > 1:
        level -= 1
    outline = _outline(spec)
    pts = [eval_coding(spec, p) for p in system.pstar]
    c = Canvas(np.vstack([outline] + pts))
    for I in product(range(1, spec.N + 1), repeat=1):
        c.polygon(spec.compose_word(I)(outline), "#eeeeee", "#999999", 0.4)
    for k, (a, b) in enumerate(system.arcs):
        route = [eval_coding(spec, a)]
        T = _tree(spec, level)
        path = T.path(T.node(a), T.node(b))
        route += [eval_coding(spec, x) for kind, x in path if kind == "j"]
        route.append(eval_coding(spec, b))
        c.polyline(route, PALETTE[k % len(PALETTE)], 2.0)
    for p in pts:
        c.circle(p, 3.5, "#000000")
    return c.render("main tree: %d points, %d primary arcs" % (len(system.pstar), len(system.arcs)))


def automaton_svg(A):
    """States on a circle; edges labelled by the letters that induce them."""
    n = len(A.states)
    pos = {}
    for k, s in enumerate(A.states):
        t = 2 * math.pi * k / n
        pos[s] = np.array([math.cos(t), math.sin(t)])
    c = Canvas(np.array(list(pos.values())) * 1.25)
    for s in A.states:
        grouped = {}
        for a in A.letters():
            grouped.setdefault(A.step(s, *a), []).append("%d%d" % a)
        for t in A.states:
            if t not in grouped:
                continue
            label = ",".join(grouped[t])
            if t == s:
                p = pos[s] * 1.15
                cx, cy = c.xy(p)
                c.items.append('<circle cx="%s" cy="%s" r="6.00" fill="none" stroke="#777777" stroke-width="0.60"/>'
                               % (cx, cy))
                x, y = c.xy(p * 1.05)
                c.items.append('<text x="%s" y="%s" font-size="7" text-anchor="middle">%s</text>'
                               % (x, y, _esc(label)))
                continue
            c.line(pos[s], pos[t], "#777777", 0.6)
            mid = 0.65 * pos[s] + 0.35 * pos[t]
            x, y = c.xy(mid)
            c.items.append('<text x="%s" y="%s" font-size="6" fill="#555555">%s</text>' % (x, y, _esc(label)))
    for s in A.states:
        x, y = c.xy(pos[s])
        c.items.append('<circle cx="%s" cy="%s" r="16" fill="#ffffff" stroke="#000000" stroke-width="%s"/>'
                       % (x, y, "2.0" if s == "Exit" else "1.0"))
        c.items.append('<text x="%s" y="%s" font-size="8" text-anchor="middle" dominant-baseline="middle">%s</text>'
                       % (x, y, _esc(A.label(s))))
    return c.render("topology automaton: %d states" % n)
