"""
Contact automata and what they certify
======================================

Two cylinders of a post-critically finite set either stay apart, meet in a
single point, or keep meeting.  A small automaton tracks this, and its
shape decides how two attractors with the same combinatorics compare.
"""
import os

from fractop import library
from fractop.automaton import build_automaton, classify_equivalence, itinerary, surviving_time
from fractop.metric import metric_constants, rho, sandwich_check
from fractop.symbolic_ifs import parse_word

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)

S = library.sierpinski()
A = build_automaton(S)
print("states:", [A.label(s) for s in A.states])

x, y = parse_word("(1)"), parse_word("(2)")
print("itinerary of (1), (2):", itinerary(A, x, y))
print("surviving time:", surviving_time(A, x, y))

with open(os.path.join(OUT, "sierpinski.dot"), "w") as fh:
    fh.write(A.to_dot())

# the symbolic distance sits between constant multiples of the Euclidean one
consts = metric_constants(S, 7)
violations, worst = sandwich_check(S, consts, samples=300, seed=0)
print("rho((1), (2)) =", rho(S, x, y), " violations:", len(violations), " worst ratio %.3f" % worst)

# three ways to split the interval into three pieces
thirds = library.interval((1 / 3,) * 3)
for ratios in [(1 / 3,) * 3, (1 / 9, 7 / 9, 1 / 9), (0.5, 1 / 3, 1 / 6)]:
    out = classify_equivalence(thirds, library.interval(ratios))
    print(ratios, "->", out["verdict"], out.get("s", ""))

# a gasket and a dendrite have different automata
print(classify_equivalence(S, library.k_alpha(0.25))["verdict"])
