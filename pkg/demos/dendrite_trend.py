"""
Weights on a dendrite
=====================

On a dendrite the post-critical points span a finite tree.  Each of its
primary arcs is covered by cylinders, and the weights are chosen so every
arc keeps length 1.  Finer iterates give smaller dimension values.
"""
import os

from fractop import library
from fractop.dendrite import (assign_weights, build_primary_arc_system, dendrite_metric_check,
                              dimension_trend, solve_s_m)
from fractop.svg import main_tree_svg

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)

K = library.k_alpha(0.25)
system = build_primary_arc_system(K)
print("K_1/4 tree:", system.to_dict())

a = assign_weights(system, K, 2, 1e-3)
print("classes:", a.to_dict()["counts"], " arc lengths:", a.L)
print("s_2:", solve_s_m(a))
print("metric check:", dendrite_metric_check(a, 2, samples=300)["ok"])

for row in dimension_trend(K, range(1, 7)):
    print("m=%d  delta=%.3g  s_m=%.9f" % (row["m"], row["delta_used"], row["s_m"]))

# the Vicsek cross branches at its centre
V = library.vicsek()
vs = build_primary_arc_system(V)
print("Vicsek branch points:", vs.to_dict()["ramification"], " arcs:", len(vs.arcs))
big = assign_weights(vs, V, 2, 0.9)
print("delta 0.9 needed %d halving(s), used %g" % (big.halvings, big.delta))
for row in dimension_trend(V, [2, 3, 4]):
    print("m=%d  s_m=%.9f" % (row["m"], row["s_m"]))

with open(os.path.join(OUT, "vicsek_tree.svg"), "w") as fh:
    fh.write(main_tree_svg(vs))
