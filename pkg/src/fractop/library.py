"""Ready-made IFS specs used by tests, demos and fixtures."""
import math
from fractions import Fraction

from .symbolic_ifs import EvWord, Identification, IfsSpec, Similitude

SQRT3 = math.sqrt(3.0)
TRIANGLE = ((0.0, 0.0), (1.0, 0.0), (0.5, SQRT3 / 2))


def _fix(k):
    return EvWord((), (k,))


def _homothety(r, fixed):
    # z -> r z + (1 - r) p  has fixed point p
    return Similitude(r, 0.0, False, ((1 - r) * fixed[0], (1 - r) * fixed[1]))


def sierpinski(ratios=(0.5, 0.5, 0.5), name="sierpinski"):
    """Corner maps of the unit equilateral triangle.

    Ratios other than 1/2 keep the identifications but are not geometrically
    realizable; such specs are only meaningful with ``verify=False``.
    """
    maps = [_homothety(r, p) for r, p in zip(ratios, TRIANGLE)]
    idfs = [Identification(i, j, _fix(i), _fix(j)) for i, j in ((1, 2), (1, 3), (2, 3))]
    return IfsSpec(maps, idfs, name=name)


def k_alpha(alpha=0.25, name=None):
    """Spine [0,1] split in halves plus two arms of length alpha at 1/2."""
    maps = [Similitude(0.5),
            Similitude(alpha, -math.pi / 2, False, (0.5, 0.0)),
            Similitude(0.5, 0.0, False, (0.5, 0.0)),
            Similitude(alpha, math.pi / 2, False, (0.5, 0.0))]
    # center 1/2 = f1(1) = f3(0) = f2(0) = f4(0)
    code = {1: _fix(3), 2: _fix(1), 3: _fix(1), 4: _fix(1)}
    idfs = [Identification(i, j, code[j], code[i])
            for i in range(1, 5) for j in range(i + 1, 5)]
    return IfsSpec(maps, idfs, name=name or "k_alpha(%g)" % alpha)


def interval(ratios=(0.5, 0.5), name="interval"):
    """Consecutive subintervals of [0,1] with the given lengths."""
    if abs(sum(ratios) - 1.0) > 1e-12:
        raise ValueError("ratios must sum to 1")
    maps = []
    left = 0.0
    for r in ratios:
        maps.append(Similitude(r, 0.0, False, (left, 0.0)))
        left += r
    n = len(ratios)
    idfs = [Identification(k, k + 1, _fix(1), _fix(n)) for k in range(1, n)]
    return IfsSpec(maps, idfs, name=name)


def cantor(ratio=1.0 / 3, name="cantor"):
    return IfsSpec([Similitude(ratio), Similitude(ratio, 0.0, False, (1 - ratio, 0.0))], name=name)


def single_map(ratio=0.5):
    return IfsSpec([Similitude(ratio)], name="single")


def corner_triangles(ratio=0.25):
    """Three disjoint corner copies of the triangle."""
    return IfsSpec([_homothety(ratio, p) for p in TRIANGLE], name="corners(%g)" % ratio)


def gasket_from_basis(triangles, name="gasket"):
    """Homothety IFS from upright triangles (alpha, beta, side) in basis coordinates.

    A point alpha*(a2 - a1) + beta*(a3 - a1) of the unit triangle is the
    lower-left corner of a copy of side ``side``.  Identifications are derived
    from the touching vertices.
    """
    from .gasket import derive_identifications
    maps = []
    for alpha, beta, side in triangles:
        x = float(alpha) + float(beta) / 2
        y = float(beta) * SQRT3 / 2
        maps.append(Similitude(float(side), 0.0, False, (x, y)))
    return derive_identifications(IfsSpec(maps, name=name))


def augmented_gasket():
    """Corners of ratio 2/5 and one private triangle of ratio 1/5 on each edge."""
    F = Fraction
    tri = [(0, 0, F(2, 5)), (F(3, 5), 0, F(2, 5)), (0, F(3, 5), F(2, 5)),
           (F(2, 5), 0, F(1, 5)), (0, F(2, 5), F(1, 5)), (F(2, 5), F(2, 5), F(1, 5))]
    return gasket_from_basis(tri, name="augmented")


def four_private_gasket():
    """Sixteen triangles: corners of ratio 1/5, four private triangles per edge, one inner triangle.

    The inner triangle is small enough that every path crossing the
    interior between two private-triangle vertices passes many triangles.
    """
    F = Fraction
    tri = [
        (0, 0, F(1, 5)), (F(4, 5), 0, F(1, 5)), (0, F(4, 5), F(1, 5)),
        # bottom edge
        (F(1, 5), 0, F(3, 10)), (F(1, 2), 0, F(1, 6)), (F(2, 3), 0, F(1, 15)), (F(11, 15), 0, F(1, 15)),
        # left edge
        (0, F(1, 5), F(1, 10)), (0, F(3, 10), F(1, 10)), (0, F(2, 5), F(1, 5)), (0, F(3, 5), F(1, 5)),
        # right edge
        (F(1, 5), F(13, 20), F(3, 20)), (F(7, 20), F(7, 20), F(3, 10)), (F(13, 20), F(3, 10), F(1, 20)),
        (F(7, 10), F(1, 5), F(1, 10)),
        # inner
        (F(69, 100), F(1, 5), F(1, 100)),
    ]
    return gasket_from_basis(tri, name="four_private")


def chain_and_island():
    """Two touching corner halves plus a small isolated copy at the top corner."""
    F = Fraction
    return gasket_from_basis([(0, 0, F(1, 2)), (F(1, 2), 0, F(1, 2)), (0, F(3, 4), F(1, 4))],
                             name="chain_and_island")


def relabel(spec, perm, name=None):
    """Same attractor with map i renamed perm[i] (perm is a dict on 1..N)."""
    order = sorted(range(1, spec.N + 1), key=lambda i: perm[i])
    maps = [spec.maps[i - 1] for i in order]
    sym = lambda w: EvWord(tuple(perm[s] for s in w.pre), tuple(perm[s] for s in w.per))
    idfs = [Identification(perm[f.i], perm[f.j], sym(f.u), sym(f.v)) for f in spec.identifications]
    return IfsSpec(maps, idfs, spec.lipschitz_bounds and [spec.lipschitz_bounds[i - 1] for i in order],
                   spec.tolerance, name or (spec.name or "F") + "-relabelled")


def vicsek(name="vicsek"):
    """Cross-shaped dendrite: four corner squares and the centre square, ratio 1/3.

    The centre 5^inf is the only branch point of the tree spanned by the corners.
    """
    offsets = [(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)]
    maps = [Similitude(1 / 3, 0.0, False, (a / 3, b / 3)) for a, b in offsets]
    # corner k touches the centre square at its corner facing inwards
    facing = {1: 4, 2: 3, 3: 2, 4: 1}
    idfs = [Identification(k, 5, _fix(k), _fix(facing[k])) for k in range(1, 5)]
    return IfsSpec(maps, idfs, name=name)
