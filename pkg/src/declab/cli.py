"""Command line interface.

    dec-lab mesh gen|refine|report ...
    dec-lab solve ...
    dec-lab study convergence|consistency ...

Exit code 0 only when every requested level completed; aborted studies still
emit the partial report when --out is given.
"""
from __future__ import annotations

import argparse
import sys

from . import generators, meshio, study
from .dualmesh import build_dual
from .generators import FamilySpec
from .problems import get_problem
from .solve import SolverConfig, dump_solution, error_report, make_problem, solve
from .study import StudyAborted, emit, run_consistency_study, run_convergence_study


def _add_family_args(p: argparse.ArgumentParser, with_level: bool = True):
    p.add_argument("--family", required=False,
                   choices=["pentagon_wheel", "square", "corner", "cube_kuhn", "from_file"],
                   help="mesh family")
    if with_level:
        p.add_argument("--level", type=int, default=0, help="refinement level")
    p.add_argument("--ngon", type=int, default=5, help="wheel size for pentagon_wheel")
    p.add_argument("--pattern", type=int, default=1, help="square pattern id (1..3)")
    p.add_argument("--alpha", type=float, default=generators.DEFAULT_ALPHA,
                   help="re-entrant corner angle in radians")
    p.add_argument("--path", help="mesh file for from_file")
    p.add_argument("--mesh", help="load this decmesh file instead of generating")


def _family_spec(args, level: int | None = None) -> FamilySpec:
    if args.family is None:
        raise SystemExit("--family is required unless --mesh is given")
    return FamilySpec(args.family, level if level is not None else args.level,
                      n_gon=args.ngon, pattern=args.pattern, alpha=args.alpha,
                      path=args.path)


def _get_mesh(args):
    if args.mesh:
        return meshio.load(args.mesh)
    return generators.generate(_family_spec(args))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dec-lab",
                                 description="discrete exterior calculus workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="generate, refine, or audit meshes")
    msub = mesh.add_subparsers(dest="action", required=True)
    for action in ("gen", "refine", "report"):
        mp = msub.add_parser(action)
        _add_family_args(mp)
        if action != "report":
            mp.add_argument("--out", required=True, help="output mesh file")

    sv = sub.add_parser("solve", help="solve one Dirichlet problem")
    _add_family_args(sv)
    sv.add_argument("--problem", required=True,
                    choices=["trig2d", "trig3d", "corner", "linear2d", "linear3d"])
    sv.add_argument("--mu", type=float, default=0.625, help="corner exponent")
    sv.add_argument("--tol", type=float, default=1e-12)
    sv.add_argument("--max-iterations", type=int, default=100_000)
    sv.add_argument("--method", choices=["auto", "cg", "dense"], default="auto")
    sv.add_argument("--out", help="solution dump path")

    st = sub.add_parser("study", help="convergence / consistency studies")
    ssub = st.add_subparsers(dest="kind", required=True)

    conv = ssub.add_parser("convergence")
    _add_family_args(conv, with_level=False)
    conv.add_argument("--problem", required=True,
                      choices=["trig2d", "trig3d", "corner", "linear2d", "linear3d"])
    conv.add_argument("--mu", type=float, default=0.625)
    conv.add_argument("--levels", type=int, default=None,
                      help="defaults to 9 in 2D, 5 in 3D")
    conv.add_argument("--tol", type=float, default=1e-12)
    conv.add_argument("--max-unknowns", type=int, default=study.DEFAULT_UNKNOWN_CAP)
    conv.add_argument("--deterministic", action="store_true",
                      help="write zero wall times for byte-identical reruns")
    conv.add_argument("--out", help="report path (defaults to stdout)")
    conv.add_argument("--format", choices=["csv", "svg_loglog", "text_table"],
                      default="csv")

    cons = ssub.add_parser("consistency")
    _add_family_args(cons, with_level=False)
    cons.add_argument("--field", required=True,
                      choices=["trig2d", "trig3d", "corner", "linear2d", "linear3d"])
    cons.add_argument("--k", type=int, default=0, help="form degree to probe")
    cons.add_argument("--levels", type=int, default=6)
    cons.add_argument("--degree", type=int, default=6, help="quadrature degree")
    cons.add_argument("--jitter", type=float, default=0.0,
                      help="interior vertex jitter amplitude (fraction of local edge)")
    cons.add_argument("--seed", type=int, default=0)
    cons.add_argument("--full-l2", action="store_true",
                      help="include boundary cells in the L2 norms")
    cons.add_argument("--max-unknowns", type=int, default=study.DEFAULT_UNKNOWN_CAP)
    cons.add_argument("--out", help="report path (defaults to stdout)")
    cons.add_argument("--format", choices=["csv", "svg_loglog", "text_table"],
                      default="csv")
    return ap


def _emit_or_print(report, args) -> None:
    if args.out:
        emit(report, args.format, args.out)
        print(f"wrote {args.format} report to {args.out}")
    else:
        sys.stdout.write(study.to_text_table(report)
                         if args.format == "text_table" else study.to_csv(report))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mesh":
            cx = _get_mesh(args)
            if args.action == "refine":
                cx = generators.refine(cx)
            if args.action == "report":
                rep = cx.shape_report()
                print(f"cells: " + " ".join(f"{k}:{cx.num(k)}" for k in range(cx.dim + 1)))
                print(f"h = {rep.h:.9g}")
                print(f"gamma_min = {rep.gamma_min:.9g}")
                print(f"c_reg = {rep.c_reg:.9g}")
                print(f"star_bound = {rep.star_bound}")
                print(f"well_centered = {rep.well_centered}")
            else:
                meshio.save(cx, args.out)
                print(f"wrote {args.out}")
            return 0
        if args.command == "solve":
            cx = _get_mesh(args)
            dual = build_dual(cx, keep_fragments=False)
            bundle = get_problem(args.problem, args.mu)
            prob = make_problem(cx, dual, bundle)
            cfg = SolverConfig(tol=args.tol, max_iterations=args.max_iterations,
                               method=args.method)
            rep = solve(prob, cfg)
            err = error_report(prob, rep.solution, bundle)
            print(f"unknowns = {len(cx.interior_vertex_indices())}")
            print(f"iterations = {rep.iterations}  residual = {rep.residual:.3e}")
            print(f"energy = {rep.energy:.9e}  stability = {rep.stability_constant:.6f}")
            print(f"err_max = {err.max:.6e}  err_h1 = {err.h1:.6e}  err_l2 = {err.l2:.6e}")
            if args.out:
                name = args.mesh or f"{args.family}"
                dump_solution(args.out, rep.solution, name, bundle.name,
                              args.level if args.family else 0)
                print(f"wrote {args.out}")
            return 0
        # studies
        spec = _family_spec(args, level=0)
        try:
            if args.kind == "convergence":
                levels = args.levels
                if levels is None:
                    levels = 5 if spec.family == "cube_kuhn" else 9
                rep = run_convergence_study(
                    spec, args.problem, levels, SolverConfig(tol=args.tol),
                    mu=args.mu, max_unknowns=args.max_unknowns,
                    deterministic=args.deterministic)
            else:
                rep = run_consistency_study(
                    spec, args.field, args.k, args.levels, degree=args.degree,
                    jitter=args.jitter, seed=args.seed,
                    interior_l2=not args.full_l2, max_unknowns=args.max_unknowns)
        except StudyAborted as aborted:
            print(f"study aborted: {aborted}", file=sys.stderr)
            if args.out:
                emit(aborted.report, args.format, args.out)
                print(f"wrote partial report to {args.out}", file=sys.stderr)
            return 1
        _emit_or_print(rep, args)
        return 0
    except Exception as exc:  # surface a clean one-line error
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
