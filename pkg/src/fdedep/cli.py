"""Command line front end ``fde-dep``.

Exit codes: 0 when every verdict passed and every solve completed, 1 when
some outcome was Refuted, Stalled or inconsistent (reports are still
written), 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__, specs
from .convergence import Resolution, cross_check
from .dependence import DEFAULT_EPS, HYPOTHESIS_K_MAX, SolverSettings, run_dependence
from .errors import FdeError
from .fourier import run_fourier_application
from .grid import write_csv
from .solver import solve

log = logging.getLogger("fdedep")

COMMANDS = ("solve", "family", "fourier", "check-seq")
DEFAULTS = {"tol": 1e-10, "radius": 1.0, "seed": 0}


class UsageError(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="fde-dep", description="Solve retarded functional differential equations and test continuous dependence.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    help_ = {
        "solve": "solve one problem; writes trajectory.csv and diagnostics.json",
        "family": "run a perturbation family; writes dependence.json and dependence.csv",
        "fourier": "compare Fourier partial-sum right-hand sides; writes fourier.csv and fourier.json",
        "check-seq": "classify a function sequence; writes verdicts.json",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=help_[name])
        s.add_argument("input", help="JSON input document")
        s.add_argument("-o", "--output", default="fde-dep-out", help="output directory (default: %(default)s)")
        s.add_argument("--h", type=float, help="grid step (overrides the file)")
        s.add_argument("--tol", type=float, default=DEFAULTS["tol"], help="Picard tolerance")
        s.add_argument("--radius", type=float, default=DEFAULTS["radius"], help="solver tube radius")
        s.add_argument("--k-max", type=int, help="largest sequence index used by the convergence checks")
        s.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="seed for random spot checks")
        s.add_argument("--eps-ladder", help="comma-separated decreasing thresholds")
        s.add_argument("--workers", type=int, default=1, help="parallel member solves (family)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _validate(args):
    if args.h is not None and not args.h > 0:
        raise UsageError("--h must be positive")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    if not args.radius > 0:
        raise UsageError("--radius must be positive")
    if args.k_max is not None and args.k_max < 4:
        raise UsageError("--k-max must be at least 4")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.eps_ladder is not None:
        try:
            eps = tuple(float(v) for v in args.eps_ladder.split(","))
        except ValueError:
            raise UsageError("--eps-ladder must be comma-separated numbers") from None
        if not eps or any(e <= 0 for e in eps) or list(eps) != sorted(eps, reverse=True):
            raise UsageError("--eps-ladder must be positive and decreasing")
        args.eps_ladder = eps


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _manifest(out, args, resolved):
    config = {
        "command": args.command,
        "input": str(args.input),
        "output": str(args.output),
        "h": args.h,
        "tol": args.tol,
        "tube_radius": args.radius,
        "k_max": args.k_max,
        "seed": args.seed,
        "eps_ladder": list(args.eps_ladder) if args.eps_ladder else None,
        "workers": args.workers,
        **resolved,
    }
    doc = {
        "tool": "fde-dep",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
    }
    _dump(out / "manifest.json", doc)


def _problem_dict(p):
    return {
        "sigma": p.sigma,
        "r": p.r,
        "h": p.h,
        "horizon": p.horizon,
        "dim": p.dim,
        "rhs": getattr(p.f, "source", None),
    }


def cmd_solve(args, out):
    p = specs.problem_from(specs.load(args.input), h=args.h)
    _manifest(out, args, {"problem": _problem_dict(p)})
    res = solve(p, tube_radius=args.radius, tol=args.tol)
    write_csv(res.x, out / "trajectory.csv")
    _dump(out / "diagnostics.json", res.diagnostics())
    print(f"{res.status}: reached t = {p.sigma + res.achieved:.6g} in {len(res.steps)} step(s)")
    if res.reason:
        print(res.reason)
    return 0 if res.completed else 1


def cmd_family(args, out):
    spec, eps = specs.family_from(specs.load(args.input), h=args.h)
    eps = args.eps_ladder or eps or DEFAULT_EPS
    k_max = args.k_max or HYPOTHESIS_K_MAX
    settings = SolverSettings(tol=args.tol, tube_radius=args.radius)
    resolved = {
        "base": _problem_dict(spec.base),
        "K": spec.K,
        "a_prime": spec.a_prime,
        "c": spec.c,
        "sigma_drift": spec.sigma_drift,
        "tail_start": spec.tail_start,
        "delta": spec.delta,
        "eps_ladder": list(eps),
        "k_max": k_max,
        "fourier_mode": spec.fourier is not None,
    }
    _manifest(out, args, resolved)
    rep = run_dependence(spec, eps, settings, workers=args.workers, seed=args.seed, k_max=k_max)
    rep.write_json(out / "dependence.json")
    rep.write_csv(out / "dependence.csv")
    stalled = [m.k for m in rep.members if m.status != "Completed"]
    for name, v in rep.verdicts.items():
        print(f"{name}: {v['tag']}")
    if rep.rate_k is not None:
        print(f"rate: slope {rep.rate:.4g} in c_k, {rep.rate_k:.4g} in k")
    if stalled:
        print(f"stalled members: {stalled}")
    return 0 if rep.passed and not stalled else 1


def cmd_fourier(args, out):
    f, opts = specs.fourier_from(specs.load(args.input), h=args.h)
    k_max = args.k_max or 1024
    _manifest(out, args, {**opts, "k_max": k_max, "f": f.source})
    rep = run_fourier_application(f, tube_radius=args.radius, tol=args.tol, lab_k_max=k_max, **opts)
    rep.write_csv(out / "fourier.csv")
    rep.write_json(out / "fourier.json")
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for row in rep.rows:
        print(f"n = {row['n']}: sup|S_n - f| = {row['sup_rhs_err']:.3e}, sup|x_n - x| = {row['sup_sol_err']:.3e}")
    print(f"continuous convergence of S_n: {rep.verdict.tag}")
    return 0 if rep.passed else 1


def cmd_check_seq(args, out):
    seq = specs.seq_from(specs.load(args.input))
    kw = {"k_max": args.k_max} if args.k_max else {}
    if args.eps_ladder:
        kw["eps_ladder"] = args.eps_ladder
    res = Resolution(**kw)
    _manifest(out, args, {"resolution": res.as_dict(), "box": [[float(a), float(b)] for a, b in zip(seq.lo, seq.hi)], "grid": seq.grid})
    m = cross_check(seq, res)
    _dump(out / "verdicts.json", m.as_dict())
    for name, v in m.verdicts.items():
        extra = ""
        if v.witness is not None:
            extra = f" (witness x = {v.witness.point}, gap {v.witness.gap:.4g} >= eps {v.witness.eps:g})"
        print(f"{name}: {v.tag}{extra}")
    for msg in m.inconsistencies:
        print(f"Inconsistency: {msg}")
    refuted = any(v.refuted for v in m.verdicts.values())
    return 0 if m.ok and not refuted else 1


HANDLERS = {"solve": cmd_solve, "family": cmd_family, "fourier": cmd_fourier, "check-seq": cmd_check_seq}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        if not Path(args.input).is_file():
            raise UsageError(f"{args.input}: no such file")
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](args, out)
    except UsageError as exc:
        print(f"fde-dep: error: {exc}", file=sys.stderr)
        return 2
    except (specs.InputError, FdeError, ValueError) as exc:
        print(f"fde-dep: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
