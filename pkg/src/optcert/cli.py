"""Command line entry point: ``optcert run | constants | eta``."""
import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import constants
from .experiments import CASES, EXAMPLES, ScenarioSpec, run_scenario


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _names(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _out_path(base, scen, many):
    if base is None or not many:
        return base
    root, ext = os.path.splitext(base)
    return f"{root}_{scen.example}_{scen.case}_{scen.desired}{ext or '.csv'}"


def _run_one(scen):
    rows = run_scenario(scen)
    # solutions hold meshes and closures; keep what the caller prints
    return [(r.csv_fields(), r.failed) for r in rows]


def cmd_run(args):
    cases = _names(args.case)
    desired = _names(args.desired)
    scens = []
    combos = [(c, d) for c in cases for d in desired]
    seen = set()
    for c, d in combos:
        scen = ScenarioSpec(
            example=args.example,
            case=c,
            desired=d,
            alphas=args.alphas,
            n=args.n,
            fields_out=args.fields_out,
            fields_alphas=args.fields_alphas,
            approx_clamp=args.approx_clamp,
            y0_rule=args.y0_rule,
            phi=args.phi,
            tol=args.tol,
            max_iter=args.max_iter,
        )
        if scen.tag in seen:  # neitzel ignores --desired
            continue
        seen.add(scen.tag)
        scens.append(scen)
    for s in scens:
        s.out = _out_path(args.out, s, len(scens) > 1)

    if args.jobs > 1 and len(scens) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_run_one, scens))
    else:
        results = [_run_one(s) for s in scens]

    any_failed = False
    for scen, rows in zip(scens, results):
        print(f"# {scen.tag}" + (f" -> {scen.out}" if scen.out else ""))
        print(",".join(("alpha", "pnorm", "eta", "J", "verdict", "iterations", "residual")))
        for fields, failed in rows:
            print(",".join(fields))
            any_failed |= failed
    return 2 if any_failed else 0


def cmd_constants(args):
    b = constants.gn_constant(args.q, include_bound_1=args.include_bound_1)
    def show(x):
        return "n/a" if x is None else f"{x:.15e}"
    print(f"q        = {b.q:g}")
    print(f"theta    = {b.theta:.15e}")
    print(f"C1       = {show(b.c1)}")
    print(f"C2       = {show(b.c2)}")
    print(f"C3       = {show(b.c3)}  (factors up to j = {b.truncation_terms})")
    print(f"C_q      = {b.c_q:.15e}  ({b.attained_by})")
    print(f"1/C_q    = {1.0 / b.c_q:.15e}")
    print(f"C_q^-1/2 = {b.c_q ** -0.5:.15e}")
    return 0


def cmd_eta(args):
    q = constants.q_of_r(args.r)
    c_q = constants.gn_constant(q).c_q
    print(f"{constants.eta(args.alpha, args.r, args.M, c_q):.15e}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="optcert", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve an alpha sweep and certify each row")
    r.add_argument("--example", choices=EXAMPLES, default="cubic")
    r.add_argument("--case", default="unconstrained",
                   help=f"one or more of {', '.join(CASES)} (comma separated)")
    r.add_argument("--desired", default="a1", help="a1, a2 (comma separated); ignored for neitzel")
    r.add_argument("--alphas", type=_floats, default=tuple(10.0**k for k in range(3, -7, -1)))
    r.add_argument("--n", type=int, default=32)
    r.add_argument("--out", help="CSV path for the table")
    r.add_argument("--fields-out", help="directory for nodal field CSVs")
    r.add_argument("--fields-alphas", type=_floats, default=None,
                   help="alphas to export fields for (default: the featured ones)")
    r.add_argument("--approx-clamp", action="store_true",
                   help="sample the control clamp at quadrature points instead of splitting")
    r.add_argument("--y0-rule", choices=("centroid", "degree8"), default="centroid",
                   help="quadrature for the desired-state load in the adjoint equation")
    r.add_argument("--phi", help="override the nonlinearity: cubic, quintic or power:<k>")
    r.add_argument("--tol", type=float, default=1e-10, help="KKT residual tolerance (inf-norm)")
    r.add_argument("--max-iter", type=int, default=100, help="Newton iteration limit per alpha")
    r.add_argument("--jobs", type=int, default=1, help="run independent scenarios in parallel")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("constants", help="Gagliardo-Nirenberg bounds for an exponent q")
    c.add_argument("--q", type=float, required=True)
    c.add_argument("--include-bound-1", action="store_true")
    c.set_defaults(func=cmd_constants)

    e = sub.add_parser("eta", help="global-optimality threshold")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--r", type=float, required=True)
    e.add_argument("--M", type=float, required=True)
    e.set_defaults(func=cmd_eta)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"optcert: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
