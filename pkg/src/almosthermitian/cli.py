"""
Command-line entry point.

    almosthermitian catalog
    almosthermitian verify axioms --manifold flat_cn --points 50 --seed 7
    almosthermitian verify uniqueness --manifold twisted_torus --points 10
    almosthermitian frames --manifold twisted_torus --points 20
    almosthermitian curvature compare --manifold twisted_torus --points 100 --seed 7
    almosthermitian wu --g flat_cn --h kahler_exp --samples 1000 --seed 7
    almosthermitian augment --manifold kahler_exp --alpha 0.5 --samples 500
    almosthermitian product --first flat_torus --second flat_torus --a 0.3
    almosthermitian forms --manifold twisted_torus --points 100
    almosthermitian suite --points 5 --samples 50

The report (JSON, see :mod:`almosthermitian.report`) goes to ``--out`` or
standard output.  Exit status: 0 when every check passes, 1 when a check
fails, 2 on usage or input errors.
"""

import argparse
import json
import sys

import numpy as np

from . import suites
from .expr import ParseError
from .frames import ConsistencyError, DegenerateFrameError
from .manifold import ConfigError, ValidationError, catalog, resolve_manifold
from .report import Record, Report

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(points=20, samples=100):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--manifold", default=None, help="catalog name or path to a YAML/JSON config")
    p.add_argument("--points", type=int, default=points, help="number of sampled points")
    p.add_argument("--samples", type=int, default=samples, help="number of inequality samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", type=int, default=3, help="jet order (>= 3)")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="almosthermitian",
        description="Numerical checks for the canonical connection of almost Hermitian charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    sub.add_parser("catalog", parents=[common], help="list and validate the built-in manifolds")

    verify = sub.add_parser("verify", help="connection checks")
    vsub = verify.add_subparsers(dest="what", required=True)
    vsub.add_parser("axioms", parents=[common], help="nabla g = 0, nabla J = 0, tau^(1,1) = 0")
    vsub.add_parser("uniqueness", parents=[common], help="solve the axioms and compare")
    vsub.add_parser("manifold", parents=[common], help="J^2 = -I, positivity, J-invariance")

    sub.add_parser("frames", parents=[common], help="pseudo / quasi / normal frame residuals")

    curv = sub.add_parser("curvature", help="curvature checks")
    csub = curv.add_subparsers(dest="what", required=True)
    csub.add_parser("compare", parents=[common], help="definition vs quasi-frame formula")

    wu = sub.add_parser("wu", parents=[common], help="curvature inequality for a sum of metrics")
    wu.add_argument("--g", required=True, help="first metric (manifold name or config)")
    wu.add_argument("--h", required=True, help="second metric on the same almost complex chart")

    aug = sub.add_parser("augment", parents=[common], help="rank-one augmentation by alpha = c dz_k")
    aug.add_argument("--alpha", type=complex, default=0.5, help="coefficient c")
    aug.add_argument("--k", type=int, default=1, help="which dz_k")

    prod = sub.add_parser("product", parents=[common], help="product metric from a coupling matrix")
    prod.add_argument("--first", default="flat_torus")
    prod.add_argument("--second", default="flat_torus")
    prod.add_argument("--a", default="0.3", help="number or JSON matrix (r x s)")

    sub.add_parser("forms", parents=[common], help="Lie-derivative identity and holomorphy routes")
    sub.add_parser("suite", parents=[_common(points=5, samples=50)], help="everything on the whole catalog")
    return parser


def _manifold(spec, default=None):
    spec = spec or default
    if spec is None:
        raise UsageError("--manifold is required")
    try:
        return resolve_manifold(spec)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _parse_matrix(text):
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        try:
            val = complex(text)
        except ValueError as exc:
            raise UsageError(f"--a: cannot parse {text!r}") from exc
    arr = np.atleast_2d(np.array(val, dtype=complex))
    if arr.ndim != 2:
        raise UsageError("--a must be a number or a 2-d matrix")
    return arr


def _check_args(args):
    if args.points < 1 or args.samples < 1:
        raise UsageError("--points and --samples must be positive")
    if args.order < 3:
        raise UsageError("--order must be at least 3")
    if not args.tol_scale > 0:
        raise UsageError("--tol-scale must be positive")


def execute(args):
    """Run a parsed command; returns the :class:`Report`."""
    _check_args(args)
    cmd = args.command + (f" {args.what}" if getattr(args, "what", None) else "")
    s, seed, order, pts, n = args.tol_scale, args.seed, args.order, args.points, args.samples

    def report(manifold_name, **params):
        return Report(cmd, manifold_name, seed, order, s, params)

    if args.command == "catalog":
        mans = catalog() if args.manifold is None else [_manifold(args.manifold)]
        rep = report("catalog" if args.manifold is None else mans[0].name, points=pts)
        for M in mans:
            rec = rep.add(suites.check_manifold(M, pts, seed, s))
            rec.details.update({"n": M.n, "coordinates": list(M.coordinates), "description": M.description})
        return rep
    if args.command == "suite":
        rep = report("catalog", points=pts, samples=n)
        return suites.run_suite(rep, pts, n, seed, s, order)
    if args.command == "wu":
        gA, gB = _manifold(args.g).metric(), _manifold(args.h).metric()
        rep = report(gA.manifold.name, samples=n, g=gA.name, h=gB.name)
        rep.add(suites.check_wu(gA, gB, n, seed, s, order))
        return rep
    if args.command == "product":
        first, second = _manifold(args.first), _manifold(args.second)
        a = _parse_matrix(args.a)
        if a.shape != (first.n, second.n):
            raise UsageError(f"--a must be {first.n} x {second.n} for dz bases of {first.name} and {second.name}")
        rep = report(f"{first.name}_x_{second.name}", samples=n, a=a)
        for r in suites.check_product(first, second, a, n, seed, s, order):
            rep.add(r)
        return rep

    M = _manifold(args.manifold)
    if args.command == "verify":
        rep = report(M.name, points=pts)
        fn = {"axioms": suites.check_axioms, "uniqueness": suites.check_uniqueness,
              "manifold": suites.check_manifold}[args.what]
        rep.add(fn(M, pts, seed, s) if args.what == "manifold" else fn(M, pts, seed, s, order))
    elif args.command == "frames":
        rep = report(M.name, points=pts)
        for r in suites.check_frames(M, pts, seed, s, order):
            rep.add(r)
    elif args.command == "curvature":
        rep = report(M.name, points=pts)
        rep.add(suites.check_curvature(M, pts, seed, s, order))
    elif args.command == "augment":
        rep = report(M.name, samples=n, alpha=args.alpha, k=args.k)
        if not 1 <= args.k <= M.n:
            raise UsageError(f"--k must be in 1..{M.n}")
        rep.add(suites.check_augment(M.metric(), args.alpha, n, seed, s, order, args.k))
    elif args.command == "forms":
        rep = report(M.name, points=pts)
        for r in suites.check_forms(M, pts, seed, s, order):
            rep.add(r)
    else:  # pragma: no cover - argparse rejects unknown commands
        raise UsageError(f"unknown command {args.command}")
    return rep


def _summary(rep, stream):
    for r in rep.records:
        val = r.max_residual if r.max_residual is not None else r.min_margin
        what = "max residual" if r.max_residual is not None else "min margin"
        extra = f"  [{r.error}]" if r.error else ""
        shown = "-" if val is None else f"{val:.3e}"
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<40} {what} {shown}{extra}", file=stream)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        rep = execute(args)
    except (UsageError, ConfigError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateFrameError, ConsistencyError) as exc:
        rep = Report(args.command, str(args.manifold), args.seed, args.order, args.tol_scale)
        rep.add(Record("construction", 0, 0.0, error=f"{type(exc).__name__}: {exc}"))
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    _summary(rep, sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def run(argv=None):
    sys.exit(main(argv))


if __name__ == "__main__":
    run()
