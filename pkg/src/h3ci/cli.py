"""Command-line front end: ``h3ci {pes,mex,phase,solve}``.

Lengths are bohr and angles degrees at this boundary.  Options can also come
from a JSON file (``--config``); explicit flags win over the file, the file
wins over built-in defaults.  The effective configuration is echoed as ``#``
lines at the top of every CSV.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .cqe import CQEConfig
from .geometry import MolecularGeometry
from .integrals import CoincidentNuclei
from .simulator import NoiseModel

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _trotter(value: str):
    if value == "exact":
        return None
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'exact'") from None
    if k < 1:
        raise argparse.ArgumentTypeError("trotter steps must be >= 1")
    return k


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option defaults (flags take precedence)")
    p.add_argument("--solver", choices=["fci", "cqe"], default="fci", help="energy solver (default: fci)")
    p.add_argument("--states", choices=["pair", "energy"], default="pair",
                   help="E1/E2 selection: intersecting triplet pair or plain energy order (default: pair)")
    p.add_argument("--noise", type=float, default=0.0, metavar="LAMBDA",
                   help="depolarizing rate for the cqe solver (default: 0)")
    p.add_argument("--readout", type=float, default=1e-3, metavar="HARTREE",
                   help="readout-bias scale used when --noise > 0 (default: 1e-3)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")
    p.add_argument("--trotter", type=_trotter, default=None, metavar="K|exact",
                   help="Trotter steps per generator, or 'exact' (default: exact)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="h3ci", description="H3+ conical-intersection toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pes", help="scan a potential-energy curve or surface")
    _common(p)
    p.add_argument("--mode", choices=["d3h", "c2v", "xy"], required=True, help="scan type")
    p.add_argument("--r-min", type=float, default=0.5, help="d3h: first R (bohr)")
    p.add_argument("--r-max", type=float, default=3.0, help="d3h: last R (bohr)")
    p.add_argument("--R", type=float, default=1.0, help="c2v/xy: half-distance of the fixed pair (bohr)")
    p.add_argument("--rho-min", type=float, default=1.0, help="c2v: first rho (bohr)")
    p.add_argument("--rho-max", type=float, default=3.0, help="c2v: last rho (bohr)")
    p.add_argument("--steps", type=int, default=20, help="d3h/c2v: number of points")
    p.add_argument("--x-min", type=float, default=-1.0, help="xy: first x (bohr)")
    p.add_argument("--x-max", type=float, default=1.0, help="xy: last x (bohr)")
    p.add_argument("--nx", type=int, default=20, help="xy: points along x")
    p.add_argument("--y-min", type=float, default=1.0, help="xy: first y (bohr)")
    p.add_argument("--y-max", type=float, default=2.5, help="xy: last y (bohr)")
    p.add_argument("--ny", type=int, default=12, help="xy: points along y")
    p.add_argument("--workers", type=int, default=1, help="parallel processes (default: 1)")
    p.add_argument("--gap-tol", type=float, default=0.02,
                   help="report degeneracies with gap below this (hartree)")
    p.set_defaults(func=cmd_pes)

    p = sub.add_parser("mex", help="minimum-energy crossing point search")
    _common(p)
    p.add_argument("--theta", type=float, default=57.819, help="start angle (degrees)")
    p.add_argument("--rho", type=float, default=2.897, help="start rho (bohr)")
    p.add_argument("--R", type=float, default=1.0, help="half-distance of the fixed pair (bohr)")
    p.add_argument("--free", default="theta,rho", help="comma-separated free parameters from R,rho,theta")
    p.add_argument("--lambda0", type=float, default=12.0, help="gap penalty weight")
    p.add_argument("--step", type=float, default=0.1, help="descent step factor")
    p.add_argument("--fd-step", type=float, default=1e-3, help="finite-difference step (bohr / radian)")
    p.add_argument("--gap-tol", type=float, default=1e-3, help="stop when the gap is below this (hartree)")
    p.add_argument("--max-iter", type=int, default=25, help="iteration limit")
    p.add_argument("--no-safeguard", action="store_true", help="never shorten a step that raises L")
    p.set_defaults(func=cmd_mex)

    p = sub.add_parser("phase", help="geometric phase around a loop of atom 3")
    _common(p)
    p.add_argument("--cx", type=float, default=0.0, help="loop centre x (bohr)")
    p.add_argument("--cy", type=float, default=math.sqrt(3.0), help="loop centre y (bohr)")
    p.add_argument("--radius", type=float, default=0.3, help="loop radius (bohr)")
    p.add_argument("--points", type=int, default=64, help="points on the loop (>= 16)")
    p.add_argument("--R", type=float, default=1.0, help="half-distance of the fixed pair (bohr)")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("solve", help="energies at a single geometry")
    _common(p)
    p.add_argument("--R", type=float, default=1.0, help="half-distance of the fixed pair (bohr)")
    p.add_argument("--rho", type=float, required=True, help="distance of atom 3 from the origin (bohr)")
    p.add_argument("--theta", type=float, default=90.0, help="polar angle of atom 3 (degrees)")
    p.set_defaults(func=cmd_solve)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        # re-parse with the file as defaults so explicit flags still win
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(file_cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        subparser.set_defaults(**file_cfg)
        args = parser.parse_args(argv)
    return args


def effective_config(args) -> list[str]:
    skip = {"func", "config", "verbose"}
    return [f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip]


def _solver_setup(args):
    from .surfaces import PointSolver

    if args.noise < 0 or args.noise > 1:
        raise ConfigError("--noise must lie in [0, 1]")
    if args.noise > 0 and args.solver != "cqe":
        raise ConfigError("--noise needs --solver cqe")
    cqe = CQEConfig(trotter_steps=args.trotter)
    if args.solver == "fci":
        return PointSolver("fci", args.states)
    if args.noise > 0:
        return PointSolver("cqe-noisy", args.states, NoiseModel(args.noise, args.readout, args.seed), cqe)
    return PointSolver("cqe", args.states, cqe=cqe)


def cmd_pes(args) -> int:
    from .surfaces import ScanSpec, detect_ci_records, locate_ci_grid, scan, write_csv

    ps = _solver_setup(args)
    if args.mode == "xy":
        if args.nx < 2 or args.ny < 2:
            raise ConfigError("--nx and --ny must be >= 2")
        spec = ScanSpec("xy", R=args.R, x_values=np.linspace(args.x_min, args.x_max, args.nx),
                        y_values=np.linspace(args.y_min, args.y_max, args.ny),
                        solver=ps.solver, states=ps.states, noise=ps.noise, cqe=ps.cqe)
    else:
        if args.steps < 2:
            raise ConfigError("--steps must be >= 2")
        lo, hi = (args.r_min, args.r_max) if args.mode == "d3h" else (args.rho_min, args.rho_max)
        spec = ScanSpec(args.mode, values=np.linspace(lo, hi, args.steps), R=args.R,
                        solver=ps.solver, states=ps.states, noise=ps.noise, cqe=ps.cqe)
    try:
        spec.geometries()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    records = scan(spec, workers=args.workers)
    if args.out:
        write_csv(records, args.out, effective_config(args))
    failed = [r for r in records if r.failed or not r.converged]
    good = [r for r in records if not r.failed]
    print(f"{len(records)} points, {len(failed)} failed or unconverged")
    if good:
        if args.mode == "c2v":
            found = detect_ci_records(good, args.gap_tol, "rho")
            print("degeneracies at rho =", ", ".join(f"{x:.4f}" for x in found) or "none")
        elif args.mode == "xy":
            x, y = locate_ci_grid(records, args.nx, args.ny)
            print(f"smallest gap near x = {x:.4f}, y = {y:.4f}")
        else:
            print(f"max gap along curve: {max(r.gap for r in good):.3e} hartree")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_mex(args) -> int:
    from .mex import MexConfig, optimize, write_trace_csv

    free = tuple(p.strip() for p in args.free.split(",") if p.strip())
    if args.rho <= 0 and "theta" in free:
        raise ConfigError("start rho must be > 0 when theta is free (polar angle undefined)")
    try:
        start = MolecularGeometry(args.R, args.rho, math.radians(args.theta))
        cfg = MexConfig(free=free, lambda0=args.lambda0, step_size=args.step, fd_step=args.fd_step,
                        max_iterations=args.max_iter, gap_tol=args.gap_tol,
                        safeguard=not args.no_safeguard, solver=_solver_setup(args))
        for d in start.distances():
            if d <= 1e-6:
                raise CoincidentNuclei("start geometry has coincident nuclei")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    trace = optimize(start, cfg)
    print(trace.table())
    print("converged" if trace.converged else "not converged")
    if args.out:
        write_trace_csv(trace, args.out, effective_config(args) + cfg.describe())
    return EXIT_OK if trace.converged else EXIT_PARTIAL


def cmd_phase(args) -> int:
    from .diabatic import LoopSpec, transport_loop, write_loop_csv

    if args.solver != "fci" or args.noise:
        raise ConfigError("phase loops use FCI wavefunctions; --solver cqe/--noise are not supported")
    try:
        loop = LoopSpec((args.cx, args.cy), args.radius, args.points, args.R, args.states)
        loop.geometries()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = transport_loop(loop)
    verdict = "encloses CI" if res.encloses_ci else "no CI enclosed"
    print(f"geometric phase = {res.phase:.6f} rad ({verdict})")
    if args.out:
        write_loop_csv(res, args.out, effective_config(args))
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        g = MolecularGeometry(args.R, args.rho, math.radians(args.theta))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rec = _solver_setup(args)(g)
    if rec.failed:
        print(f"solver failed: {rec.failure}", file=sys.stderr)
        return EXIT_CONFIG if "Coincident" in rec.failure else EXIT_PARTIAL
    print(f"E0 = {rec.E0:.10f}\nE1 = {rec.E1:.10f}\nE2 = {rec.E2:.10f}\ngap = {rec.gap:.3e}")
    if args.out:
        from .surfaces import write_csv

        write_csv([rec], args.out, effective_config(args))
    return EXIT_OK if rec.converged else EXIT_PARTIAL


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except ConfigError as exc:
        print(f"h3ci: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"h3ci: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
