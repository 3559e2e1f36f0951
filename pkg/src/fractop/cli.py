"""fractop command line.

Every command prints a short summary, or a JSON report with ``--json``.
Exit codes: 0 success, 1 input/IO error, 2 validation failure, 3 internal
inconsistency.
"""
import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .errors import FractopError, InputError

SCHEMA = "fractop.report/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("fractop: error: %s\n" % message)
        sys.exit(1)


def parse_range(text):
    """'3' -> [3]; '1..20' -> [1, ..., 20] inclusive; '1,4,6' -> [1, 4, 6]."""
    try:
        if ".." in text:
            a, b = text.split("..")
            a, b = int(a), int(b)
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError("bad range %r (use N, A..B or A,B,C)" % text)


def threads():
    raw = os.environ.get("FRACTOP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError("FRACTOP_THREADS must be a positive integer, got %r" % raw)
    if n < 1:
        raise InputError("FRACTOP_THREADS must be a positive integer, got %r" % raw)
    return n


def _clean(x):
    """JSON-safe copy: Fractions as strings, inf as "inf", tuples as lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(x, "item"):
        return _clean(x.item())
    if hasattr(x, "per"):
        from .symbolic_ifs import format_word
        return format_word(x)
    return x


def _load(path):
    from .symbolic_ifs import IfsSpec
    return IfsSpec.load(path)


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError("cannot write %s: %s" % (path, exc))


def _report(command, specs, flags, results, warnings=()):
    return {"schema": SCHEMA, "version": __version__, "command": command,
            "spec_digest": [s.digest() for s in specs] if len(specs) != 1 else specs[0].digest(),
            "flags": flags, "results": results, "warnings": list(warnings)}


# commands ----------------------------------------------------------------------

def cmd_validate(a):
    from .symbolic_ifs import compute_post_critical, verify_sic_asc
    spec = _load(a.ifs)
    pcd = compute_post_critical(spec)
    rep = verify_sic_asc(spec, a.depth, pcd)
    res = {"maps": spec.N, "post_critical": pcd.to_dict(), "sic_asc": rep.to_dict()}
    summary = ["%d maps, %d post-critical points, boundary symbols %s" % (spec.N, len(pcd.reps),
                                                                         sorted(pcd.boundary_symbols)),
               "SIC %s, ASC constant estimate %.6g" % (rep.sic_ok, rep.asc_constant_estimate)]
    return [spec], res, summary


def cmd_automaton(a):
    from .automaton import build_automaton, check_surviving_time_lemma
    spec = _load(a.ifs)
    A = build_automaton(spec, verify=not a.trusted)
    res = A.to_dict()
    summary = ["%d states" % len(A.states)]
    if a.check_lemma:
        ok, rep = check_surviving_time_lemma(spec, A, a.samples, a.depth, a.seed)
        res["surviving_time_check"] = {"ok": ok, "agree": rep["agree"], "disagree": rep["disagree"],
                                       "inconclusive": len(rep["inconclusive"])}
        summary.append("surviving-time check: %d agree, %d disagree" % (rep["agree"], len(rep["disagree"])))
    if a.dot:
        _write(a.dot, A.to_dot())
    if a.svg:
        from .svg import automaton_svg
        _write(a.svg, automaton_svg(A))
    return [spec], res, summary


def cmd_classify(a):
    from .automaton import classify_equivalence
    F, G = _load(a.first), _load(a.second)
    res = classify_equivalence(F, G, verify=not a.trusted, allow_relabel=a.allow_relabel, depth=a.depth)
    s = " (s = %.12g)" % res["s"] if "s" in res else ""
    return [F, G], res, ["verdict: %s%s" % (res["verdict"], s)]


def cmd_metric(a):
    from .errors import ComparabilityFailure
    from .metric import metric_constants, sandwich_check
    spec = _load(a.ifs)
    consts = metric_constants(spec, a.depth)
    violations, worst = sandwich_check(spec, consts, a.samples, a.seed)
    cd = consts.to_dict()
    res = {"xi1": cd["xi1"], "xi2": cd["xi2"], "c": cd["asc_c"], "c1": cd["c1"], "c2": cd["c2"], "c3": cd["c3"],
           "constants": cd, "samples": a.samples, "violations": violations, "worst_rho_distortion": worst}
    if violations:
        raise ComparabilityFailure("%d sandwich violations" % len(violations), witness=violations[:5])
    return [spec], res, ["0 violations on %d pairs; worst distortion %.6g <= c3 = %.6g"
                         % (a.samples, worst, consts.c3)]


def cmd_graph(a):
    from .graphs import WeightAssignment, check_good_assignment, refine, verify_compatibility
    from .symbolic_ifs import compute_post_critical
    spec = _load(a.ifs)
    pcd = compute_post_critical(spec)
    if a.assign:
        try:
            with open(a.assign, encoding="utf-8") as fh:
                wa = WeightAssignment.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError("cannot read %s: %s" % (a.assign, exc))
    else:
        wa = WeightAssignment.uniform(len(pcd.reps), spec.N, Fraction(a.uniform), 1)
    G = refine(spec, wa, a.level, pcd)
    res = {"level": a.level, "vertices": len(G.vertices), "edges": len(G.edges), "rational": wa.rational,
           "good": check_good_assignment(spec, wa, pcd)}
    if a.compat:
        res["compatibility"] = [verify_compatibility(spec, wa, n, a.pairs, a.seed, pcd)
                                for n in range(1, a.level + 1)]
    if a.full:
        res["graph"] = G.to_dict()
    if a.svg:
        from .svg import graph_svg
        _write(a.svg, graph_svg(G, "G_%d" % a.level))
    good = res["good"]
    return [spec], res, ["G_%d: %d vertices, %d edges; compatible %s, edges geodesic %s"
                         % (a.level, len(G.vertices), len(G.edges), good["compatible"], good["edges_geodesic"])]


def cmd_dendrite(a):
    from .dendrite import build_primary_arc_system, certify_dendrite, dimension_trend
    spec = _load(a.ifs)
    certify_dendrite(spec, a.depth)
    system = build_primary_arc_system(spec)
    rows = dimension_trend(spec, parse_range(a.m), a.delta, a.c, adaptive=not a.fixed_delta)
    res = {"system": system.to_dict(), "rows": rows}
    if a.svg:
        from .svg import main_tree_svg
        _write(a.svg, main_tree_svg(system))
    return [spec], res, ["m=%d  delta=%.6g  s_m=%.10f" % (r["m"], r["delta_used"], r["s_m"]) for r in rows]


def _gasket(path):
    from .gasket import derive_identifications, validate_gasket
    spec = _load(path)
    g = validate_gasket(spec)
    return validate_gasket(derive_identifications(spec)) if not spec.identifications else g


def cmd_gasket_dim(a):
    from .gasket import augmentation_report, conformal_upper_bound, vertex_iteration
    g = _gasket(a.ifs)
    ms = parse_range(a.m)
    rows = conformal_upper_bound(g, ms, a.scheme, a.s_factor, verify=not a.no_verify)
    res = {"scheme": a.scheme, "augmentation": augmentation_report(g).to_dict(), "rows": rows}
    if a.svg:
        from .svg import iteration_svg
        _write(a.svg, iteration_svg(g.spec, ms[0], vertex_iteration(g, ms[0])))
    return [g.spec], res, ["m=%d  maps=%d  dim=%.12f" % (r["m"], r["maps"], r["dim"]) for r in rows]


def cmd_gasket_connectivity(a):
    from .gasket import connectivity
    g = _gasket(a.ifs)
    res = connectivity(g, a.depth)
    return [g.spec], res, ["connected: %s" % res["connected"], "verdict: %s" % res["verdict"]]


def cmd_render(a):
    from . import svg
    if a.scene == "automaton":
        from .automaton import build_automaton
        spec = _load(a.ifs)
        text = svg.automaton_svg(build_automaton(spec, verify=not a.trusted))
    elif a.scene == "iteration":
        spec = _load(a.ifs)
        it = None
        if a.gasket:
            from .gasket import vertex_iteration
            g = _gasket(a.ifs)
            spec, it = g.spec, vertex_iteration(g, a.m)
        text = svg.iteration_svg(spec, a.m, it)
    elif a.scene == "graph":
        from .graphs import WeightAssignment, refine
        from .symbolic_ifs import compute_post_critical
        spec = _load(a.ifs)
        pcd = compute_post_critical(spec)
        wa = WeightAssignment.uniform(len(pcd.reps), spec.N, Fraction(a.uniform), 1)
        text = svg.graph_svg(refine(spec, wa, a.n, pcd), "G_%d" % a.n)
    else:
        from .dendrite import build_primary_arc_system
        spec = _load(a.ifs)
        text = svg.main_tree_svg(build_primary_arc_system(spec))
    _write(a.out, text)
    return [spec], {"scene": a.scene, "out": a.out, "bytes": len(text.encode())}, ["wrote %s" % a.out]


# parser --------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="fractop", description="Topology and conformal dimension of self-similar sets.")
    p.add_argument("--version", action="version", version="fractop " + __version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q, seed=True):
        q.add_argument("--json", action="store_true", help="emit a JSON report on stdout")
        if seed:
            q.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("validate", help="post-critical set, SIC and ASC")
    q.add_argument("ifs")
    q.add_argument("--depth", type=int, default=8)
    common(q, False)
    q.set_defaults(func=cmd_validate)

    q = sub.add_parser("automaton", help="topology automaton")
    qs = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = qs.add_parser("build")
    q.add_argument("ifs")
    q.add_argument("--dot")
    q.add_argument("--svg")
    q.add_argument("--trusted", action="store_true", help="skip geometric verification of declared contacts")
    q.add_argument("--check-lemma", action="store_true", help="compare surviving times with geometry")
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--depth", type=int, default=12)
    common(q)
    q.set_defaults(func=cmd_automaton)

    q = sub.add_parser("classify", help="strongest certified equivalence of two attractors")
    q.add_argument("first")
    q.add_argument("second")
    q.add_argument("--allow-relabel", action="store_true")
    q.add_argument("--trusted", action="store_true")
    q.add_argument("--depth", type=int, default=8)
    common(q, False)
    q.set_defaults(func=cmd_classify)

    q = sub.add_parser("metric", help="two-sided distance estimates")
    qs = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = qs.add_parser("check")
    q.add_argument("ifs")
    q.add_argument("--samples", type=int, default=500)
    q.add_argument("--depth", type=int, default=8)
    common(q)
    q.set_defaults(func=cmd_metric)

    q = sub.add_parser("graph", help="weighted refined graphs")
    qs = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = qs.add_parser("refine")
    q.add_argument("ifs")
    q.add_argument("-n", "--level", type=int, default=1)
    q.add_argument("--assign", help="assignment JSON {tau0: {'1-2': w}, R: [...]}")
    q.add_argument("--uniform", default="1/2", help="common ratio weight when --assign is absent")
    q.add_argument("--compat", action="store_true", help="check D_n = D_{n-1} on sampled pairs")
    q.add_argument("--pairs", type=int, default=100000)
    q.add_argument("--full", action="store_true", help="include vertices and edges")
    q.add_argument("--svg")
    common(q)
    q.set_defaults(func=cmd_graph)

    q = sub.add_parser("dendrite", help="dendrite weight scheme and s_m trend")
    qs = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = qs.add_parser("dim")
    q.add_argument("ifs")
    q.add_argument("-m", default="1..6")
    q.add_argument("--delta", type=float, default=1e-3)
    q.add_argument("--c", type=float, default=1.0)
    q.add_argument("--fixed-delta", action="store_true", help="use delta as given at every m")
    q.add_argument("--depth", type=int, default=3, help="levels of the tree certificate")
    q.add_argument("--svg")
    common(q, False)
    q.set_defaults(func=cmd_dendrite)

    q = sub.add_parser("gasket", help="fractal gaskets")
    qs = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    d = qs.add_parser("dim")
    d.add_argument("ifs")
    d.add_argument("-m", default="1..5")
    d.add_argument("--scheme", choices=("uniform", "general"), default="uniform")
    d.add_argument("--s-factor", type=float, default=1.01)
    d.add_argument("--no-verify", action="store_true", help="skip the goodness checks")
    d.add_argument("--svg")
    common(d, False)
    d.set_defaults(func=cmd_gasket_dim)
    c = qs.add_parser("connectivity")
    c.add_argument("ifs")
    c.add_argument("--depth", type=int, default=6)
    common(c, False)
    c.set_defaults(func=cmd_gasket_connectivity)

    q = sub.add_parser("render", help="SVG scenes")
    q.add_argument("scene", choices=("iteration", "graph", "main_tree", "automaton"))
    q.add_argument("ifs")
    q.add_argument("-o", "--out", required=True)
    q.add_argument("-m", type=int, default=1)
    q.add_argument("-n", type=int, default=1)
    q.add_argument("--gasket", action="store_true", help="iteration scene uses the vertex iteration F_m")
    q.add_argument("--uniform", default="1/2")
    q.add_argument("--trusted", action="store_true")
    common(q, False)
    q.set_defaults(func=cmd_render)
    return p


def _flags(a):
    skip = {"func", "json"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    name = args.command + (" " + args.action if getattr(args, "action", None) else "")
    try:
        threads()
        specs, results, summary = args.func(args)
    except FractopError as exc:
        msg = {"schema": SCHEMA, "command": name, "error": type(exc).__name__, "message": str(exc),
               "witness": _clean(exc.witness), "exit_code": exc.exit_code}
        if args.json:
            print(json.dumps(msg, sort_keys=True, indent=2))
        sys.stderr.write("fractop: %s: %s\n" % (type(exc).__name__, exc))
        return exc.exit_code
    if args.json:
        print(json.dumps(_clean(_report(name, specs, _flags(args), results)), sort_keys=True, indent=2))
    else:
        for line in summary:
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
