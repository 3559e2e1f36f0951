"""
Gaskets with private triangles
==============================

When every edge of the unit triangle carries its own small triangles, the
corner pieces can take weights below the generic one.  The checks below
compare the path weights the construction relies on with Dijkstra.
"""
from fractop import library
from fractop.gasket import (augmentation_report, conformal_upper_bound, connectivity, gasket_assignment,
                            validate_gasket, verify_gasket_good, vertex_iteration)

for make in (library.augmented_gasket, library.four_private_gasket):
    g = validate_gasket(make())
    rep = augmentation_report(g)
    print(g.spec.name, "maps:", g.N, " private per edge:", rep.N0, " ok:", rep.ok)
    it = vertex_iteration(g, 2)
    ga = gasket_assignment(it)
    check = verify_gasket_good(it, ga)
    print("  s=%.6f  W=%.6g" % (ga.s, ga.W))
    print("  ab:", check["cross_path"])
    print("  V3:", check["corner_paths"])
    print("  split:", check["path_split"])
    for row in conformal_upper_bound(g, [1, 2, 3], scheme="general"):
        print("  m=%d  dim=%.6f" % (row["m"], row["dim"]))

for make in (library.chain_and_island, lambda: library.corner_triangles(0.25)):
    g = validate_gasket(make())
    out = connectivity(g)
    print(g.spec.name, out["connected"], out["verdict"])
