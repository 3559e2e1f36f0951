"""
Upper bounds for the Sierpinski gasket
======================================

The gasket is replaced by a finer iterated system whose maps get equal
weights.  Its similarity dimension is an upper bound for the conformal
dimension, and it drops toward 1 as the iteration depth grows.
"""
import math
import os

from fractop import library
from fractop.gasket import conformal_upper_bound, uniform_assignment, validate_gasket, vertex_iteration
from fractop.svg import iteration_svg

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)

gasket = validate_gasket(library.sierpinski())
print("corner maps:", gasket.corner_maps)
print("touching vertices:", gasket.contacts)

# one level of the vertex iteration: 3 corner squares plus 6 side pieces
it = vertex_iteration(gasket, 1)
print("maps at m=1:", [''.join(map(str, w)) for w in it.words])
ga = uniform_assignment(it)
print("uniform weight:", ga.W)

with open(os.path.join(OUT, "sierpinski_m1.svg"), "w") as fh:
    fh.write(iteration_svg(gasket.spec, 1, it))

# every row is checked for goodness in exact arithmetic before solving
rows = conformal_upper_bound(gasket, range(1, 21))
for r in rows:
    closed = math.log(6 * r["m"] + 3) / math.log(2 * r["m"] + 2)
    print("m=%2d  maps=%3d  dim=%.12f  closed form=%.12f" % (r["m"], r["maps"], r["dim"], closed))

# far out the closed form keeps falling
for m in (100, 1000, 10 ** 6):
    print("m=%d  closed form %.6f" % (m, math.log(6 * m + 3) / math.log(2 * m + 2)))
