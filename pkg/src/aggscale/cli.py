"""Command-line front end.

One subcommand per solver.  Every output file starts with '#' comment
lines carrying the artifact version and the full run configuration, so a
result can be reproduced bit-for-bit from its own header.  Exit codes:
0 success, 2 input validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .errors import NumericalError, ValidationError
from .model import make_problem
from .roots import solve_delta_marginal, solve_delta_nongel
from .series import gel_series, marginal_series, nongel_series
from . import kinetics, pantograph, shoot

logger = logging.getLogger("aggscale")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _config_blob(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["version"] = __version__
    return cfg


def _header_lines(args: argparse.Namespace) -> list[str]:
    return [f"aggscale {__version__}",
            "config " + json.dumps(_config_blob(args), sort_keys=True)]


def _emit_json(payload: dict, args: argparse.Namespace, out: str | None) -> None:
    payload = dict(payload)
    payload["config"] = _config_blob(args)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_delta(args) -> int:
    if args.psi0 is not None:
        r = solve_delta_marginal(args.psi0)
        payload = {"psi0": args.psi0, "delta": r.value, "residual": r.residual,
                   "bracket": list(r.bracket), "iterations": r.iterations}
    else:
        r = solve_delta_nongel(args.lam)
        payload = {"lambda": args.lam, "delta": r.value, "residual": r.residual,
                   "bracket": list(r.bracket), "iterations": r.iterations}
    _emit_json(payload, args, args.out)
    return 0


def _cmd_series(args) -> int:
    if args.lam < 1.0:
        delta = solve_delta_nongel(args.lam).value
        s = nongel_series(args.lam, delta, -args.c, args.n)
    elif args.lam == 1.0:
        s = marginal_series(args.a1, args.n)
    else:
        if args.tau is None:
            raise ValidationError("gelling series needs --tau")
        s = gel_series(args.lam, args.tau, args.n)
    _emit_json({"lambda": args.lam, "psi0": s.psi0, "step": s.step,
                "coeffs": list(s.coeffs), "radius_est": s.radius_est,
                "variable": s.variable}, args, args.out)
    return 0


def _march_and_write(problem, seed, end, args, floor) -> int:
    sol = pantograph.march(problem, seed, end, tol=args.tol, floor=floor,
                           handoff=args.handoff)
    logger.info("march: front=%g decayed=%s residual_max=%.3e steps=%d",
                sol.front, sol.decayed, sol.residual_max, len(sol.t0s))
    pantograph.write_solution_csv(args.out, sol, n=args.samples,
                                  header_lines=_header_lines(args))
    return 0


def _cmd_solve_nongel(args) -> int:
    problem = make_problem(args.lam, args.c)
    delta = solve_delta_nongel(args.lam).value
    seed = nongel_series(args.lam, delta, -args.c, args.n)
    end = problem.varmap.to_transformed(args.xmax) if args.ymax is None else args.ymax
    floor = args.floor if args.floor is not None else problem.constants.psi0 * 1e-5
    return _march_and_write(problem, seed, end, args, floor)


def _cmd_solve_gel(args) -> int:
    problem = make_problem(args.lam, args.tau)
    seed = gel_series(args.lam, args.tau, args.n)
    return _march_and_write(problem, seed, args.zmax, args,
                            args.floor if args.floor is not None else 1e-300)


def _cmd_solve_marginal(args) -> int:
    problem = make_problem(1.0, args.a1)
    seed = marginal_series(args.a1, args.n)
    return _march_and_write(problem, seed, args.xmax, args,
                            args.floor if args.floor is not None else 1e-300)


def _cmd_find_tau(args) -> int:
    r = shoot.find_tau(args.lam, tol_tau=args.tol_tau, horizon=args.horizon,
                       march_tol=args.tol)
    _emit_json({"lambda": args.lam, "tau_star": r.tau_star,
                "bracket": list(r.bracket), "sigma": r.sigma,
                "evaluations": r.evaluations, "march_tol": r.march_tol},
               args, args.out)
    return 0


def _cmd_simulate(args) -> int:
    states = kinetics.simulate(args.lam, args.jmax, args.t_end, init=args.init,
                               tol=args.tol, n_snapshots=args.snapshots,
                               m2_stop_ratio=args.m2_stop)
    kinetics.write_snapshots_csv(args.out, states, _header_lines(args))
    if args.moments_out:
        kinetics.write_moments_csv(args.moments_out, states, _header_lines(args))
    return 0


def _cmd_collapse(args) -> int:
    states = kinetics.simulate(args.lam, args.jmax, args.t_end, tol=args.tol,
                               n_snapshots=args.snapshots)
    problem = make_problem(args.lam, args.c)
    delta = solve_delta_nongel(args.lam).value
    seed = nongel_series(args.lam, delta, -args.c, args.n)
    sol = pantograph.march(problem, seed, args.ymax, tol=1e-8,
                           floor=problem.constants.psi0 * 1e-8,
                           handoff=seed.radius_est / 8.0)
    report = kinetics.collapse(states, sol, (args.t_lo, args.t_hi))
    _emit_json({"lambda": args.lam, "times": report.times,
                "scaling_distances": report.scaling_distances,
                "self_distances": report.self_distances},
               args, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggscale",
                                 description="Scaling solutions and kinetics for the "
                                             "diagonal aggregation kernel")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=fn)
        p.add_argument("--out", default=None, help="output file (default: stdout for JSON)")
        return p

    p = add("delta", _cmd_delta, help="correction exponent root")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--psi0", type=float, default=None,
                   help="solve the marginal alternative-family equation instead")

    p = add("series", _cmd_series, help="local series coefficients")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--a1", type=float, default=-1.0)
    p.add_argument("--n", type=int, default=20)

    for name, fn in (("solve-nongel", _cmd_solve_nongel),
                     ("solve-gel", _cmd_solve_gel),
                     ("solve-marginal", _cmd_solve_marginal)):
        p = add(name, fn, help=f"march and export ({name.split('-')[1]} regime)")
        p.add_argument("--lambda", dest="lam", type=float,
                       required=name != "solve-marginal")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--n", type=int, default=20)
        p.add_argument("--samples", type=int, default=512)
        p.add_argument("--handoff", type=float, default=None,
                       help="seed handoff override (transformed variable)")
        p.add_argument("--floor", type=float, default=None,
                       help="decay termination threshold for psi")
        if name == "solve-nongel":
            p.add_argument("--c", type=float, default=1.0)
            p.add_argument("--ymax", type=float, default=None)
            p.add_argument("--xmax", type=float, default=50.0)
        elif name == "solve-gel":
            p.add_argument("--tau", type=float, required=True)
            p.add_argument("--zmax", type=float, default=1e3)
        else:
            p.add_argument("--a1", type=float, default=-1.0)
            p.add_argument("--xmax", type=float, default=100.0)

    p = add("find-tau", _cmd_find_tau, help="bisect the critical gelling exponent")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol-tau", dest="tol_tau", type=float, default=1e-7)
    p.add_argument("--horizon", type=float, default=1e3,
                   help="initial classification horizon (auto-doubled when undecided)")
    p.add_argument("--tol", type=float, default=1e-11, help="march tolerance")

    p = add("simulate", _cmd_simulate, help="direct dyadic kinetics")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--jmax", type=int, default=60)
    p.add_argument("--t-end", dest="t_end", type=float, required=True)
    p.add_argument("--init", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--snapshots", type=int, default=40)
    p.add_argument("--m2-stop", dest="m2_stop", type=float, default=None,
                   help="terminate when M2 reaches this multiple of M2(0)")
    p.add_argument("--moments-out", dest="moments_out", default=None)

    p = add("collapse", _cmd_collapse, help="rescaled kinetics vs scaling function")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--jmax", type=int, default=60)
    p.add_argument("--t-end", dest="t_end", type=float, required=True)
    p.add_argument("--t-lo", dest="t_lo", type=float, required=True)
    p.add_argument("--t-hi", dest="t_hi", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--snapshots", type=int, default=12)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--ymax", type=float, default=10.0)

    return ap


def main(argv: list[str] | None = None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("AGGSCALE_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "delta" and args.lam is None and args.psi0 is None:
        ap.error("delta needs --lambda or --psi0")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
