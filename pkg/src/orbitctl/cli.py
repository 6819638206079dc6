"""``orbitctl``: verify, analyse and simulate codimension-one dissipative systems.

Exit codes: 0 success, 1 a mathematical check failed, 2 malformed input.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import expr
from .expr import ParseError
from .floquet import PERIODICITY_TOL, HypothesisError, analytic_multipliers, classify
from .integrate import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationError, solve
from .orbit import distance_to_orbit, evaluate_orbit, verify_periodicity
from .system import (SingularPoint, control_field_X0, lie_residuals, rate_template,
                     regularity_report, vector_field, wedge_norm_squared)
from .sysfile import InputError, dumps, load_system, system_to_dict, write_csv

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2
LIE_TOL = 1e-9
LIE_POINT_FLOOR = 1e-6  # skip random points with |W|^2 below this


class _Failure(Exception):
    def __init__(self, code: int, reasons, message: str, report: dict | None = None):
        super().__init__(message)
        self.code = code
        self.reasons = list(reasons)
        self.report = report


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args):
    try:
        return load_system(args.system, args.rate)
    except InputError as exc:
        raise _Failure(EXIT_INPUT, [exc.reason], str(exc)) from None
    except ParseError as exc:
        raise _Failure(EXIT_INPUT, ["parse"], str(exc)) from None


# --- verify -------------------------------------------------------------------

def _lie_check(sys_, orbit, points: int, seed: int, tol: float) -> dict:
    """Lie-derivative residuals at random regular points near the orbit."""
    rng = np.random.default_rng(seed)
    field = vector_field(sys_)
    worst, used, attempts = 0.0, 0, 0
    while used < points and attempts < 20 * points:
        attempts += 1
        t = rng.uniform(0.0, orbit.period)
        x = np.asarray(evaluate_orbit(orbit, t), dtype=float) + 0.1 * rng.standard_normal(sys_.n)
        x = x.tolist()
        try:
            if wedge_norm_squared(sys_, x) < LIE_POINT_FLOOR:
                continue
            res = lie_residuals(field, sys_, x)
        except (SingularPoint, ArithmeticError):
            continue
        scale = max(1.0, float(np.linalg.norm(field(x))))
        worst = max(worst, float(np.max(np.abs(res), initial=0.0)) / scale)
        used += 1
    return {"points": used, "max_residual": worst, "tol": tol}


def cmd_verify(args) -> tuple[int, dict]:
    sys_, orbit = _load(args)
    try:
        per = verify_periodicity(orbit, vector_field(sys_), m=args.samples, tol=args.periodicity_tol)
    except SingularPoint as exc:
        raise _Failure(EXIT_FAILED, ["singular"], str(exc)) from None
    reg = regularity_report(sys_, orbit, args.samples)
    lie = _lie_check(sys_, orbit, args.points, args.seed, args.lie_tol)
    reasons = list(per.reasons) + list(reg.reasons)
    if lie["points"] == 0:
        reasons.append("no_regular_points")
    elif not lie["max_residual"] <= lie["tol"]:
        reasons.append("lie_residual")
    report = {
        "command": "verify",
        "system": args.system,
        "passed": not reasons,
        "reasons": reasons,
        "periodicity": {"period": orbit.period, "closure": per.closure,
                        "max_residual": per.max_residual, "closure_tol": args.periodicity_tol,
                        "residual_tol": per.tol},
        "regularity": {"membership": reg.membership,
                       "independence_margin": reg.independence_margin,
                       "regular_value_margin": reg.regular_value_margin,
                       "conserved_margin": reg.conserved_margin,
                       "thresholds": dict(reg.thresholds)},
        "lie": lie,
    }
    return (EXIT_OK if not reasons else EXIT_FAILED), report


# --- multipliers --------------------------------------------------------------

def _multiplier_report(args, sys_, orbit, command: str) -> dict:
    try:
        rep = analytic_multipliers(sys_, orbit, panels=args.panels, numeric=args.numeric,
                                   samples=args.samples, rtol=args.tol_rel, atol=args.tol_abs,
                                   periodicity_tol=args.periodicity_tol)
    except HypothesisError as exc:
        raise _Failure(EXIT_FAILED, exc.reasons, str(exc)) from None
    except SingularPoint as exc:
        raise _Failure(EXIT_FAILED, ["singular"], str(exc)) from None
    except IntegrationError as exc:
        raise _Failure(EXIT_FAILED, ["integration"], f"{exc} (last good t = {exc.t_last!r})") from None
    verdict = classify(rep)
    report = {
        "command": command,
        "system": args.system,
        "k": rep.k,
        "p": rep.p,
        "period": rep.period,
        "manifold": rep.manifold,
        "integrals": [{"index": i, "value": v, "error": e, "margin": m}
                      for i, (v, e, m) in enumerate(zip(rep.integrals, rep.integral_errors, rep.margins),
                                                    start=1)],
        "analytic": list(rep.analytic),
        "numeric": list(rep.numeric) if rep.numeric is not None else None,
        "reduced": list(rep.reduced) if rep.reduced is not None else None,
        "pairing": [{"analytic": a, "numeric": b, "gap": g} for a, b, g in rep.pairing],
        "max_gap": rep.max_gap if rep.numeric is not None else None,
        "regular_value_I": rep.regular_value_I,
        "verdict": {"outcome": verdict.outcome.value, "witness": verdict.witness,
                    "manifold": verdict.manifold},
    }
    if args.csv:
        Path(args.csv).write_text(_multiplier_csv(rep), encoding="utf-8")
    return report


def _multiplier_csv(rep) -> str:
    if rep.numeric is not None:
        rows = [(i, a.real, a.imag, b.real, b.imag, g)
                for i, (a, b, g) in enumerate(rep.pairing, start=1)]
    else:
        rows = [(i, a.real, a.imag, "", "", "") for i, a in enumerate(rep.analytic, start=1)]
    header = ("index", "analytic_re", "analytic_im", "numeric_re", "numeric_im", "gap")
    return write_csv(header, rows)


def cmd_multipliers(args) -> tuple[int, dict]:
    sys_, orbit = _load(args)
    return EXIT_OK, _multiplier_report(args, sys_, orbit, "multipliers")


# --- stabilize ----------------------------------------------------------------

def cmd_stabilize(args) -> tuple[int, dict]:
    sys_, orbit = _load(args)
    if not sys_.perturbation_mode:
        raise _Failure(EXIT_INPUT, ["perturbation_mode"], "stabilize needs a base_field")
    try:
        psi = expr.parse(args.psi, sys_.n)
        rate = rate_template(args.rate_kind, psi, args.c)
    except ParseError as exc:
        raise _Failure(EXIT_INPUT, ["parse"], f"psi: {exc}") from None
    except ValueError as exc:
        raise _Failure(EXIT_INPUT, ["template"], str(exc)) from None
    new = sys_.with_rates([rate] * sys_.p)
    for t in np.arange(args.samples) * (orbit.period / args.samples):
        try:
            control_field_X0(new, [float(c) for c in evaluate_orbit(orbit, t)])
        except SingularPoint as exc:
            raise _Failure(EXIT_FAILED, ["singular"], str(exc)) from None
    if args.out_system:
        doc = system_to_dict(new, orbit, relative_to=Path(args.out_system).parent)
        Path(args.out_system).write_text(dumps(doc) + "\n", encoding="utf-8")
    report = _multiplier_report(args, new, orbit, "stabilize")
    report["template"] = {"kind": args.rate_kind, "psi": str(psi), "c": float(args.c),
                          "rate": str(rate)}
    return EXIT_OK, report


# --- simulate -----------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise _Failure(EXIT_INPUT, ["x0"], f"cannot parse initial point {text!r}") from None


def cmd_simulate(args) -> tuple[int, str]:
    sys_, orbit = _load(args)
    x0 = _floats(args.x0)
    if len(x0) != sys_.n:
        raise _Failure(EXIT_INPUT, ["x0"], f"x0 has {len(x0)} coordinates, system has {sys_.n}")
    if not args.t_end > 0 or not args.dt > 0:
        raise _Failure(EXIT_INPUT, ["schema"], "--t-end and --dt must be positive")
    steps = int(math.floor(args.t_end / args.dt + 1e-9))
    times = [j * args.dt for j in range(steps + 1)]
    if times[-1] < args.t_end:
        times.append(args.t_end)
    field = vector_field(sys_)
    try:
        traj = solve(lambda t, y: np.asarray(field(y.tolist()), dtype=float), x0, 0.0, args.t_end,
                     rtol=args.tol_rel, atol=args.tol_abs, t_eval=times)
    except (IntegrationError, SingularPoint, ArithmeticError) as exc:
        last = getattr(exc, "t_last", None)
        raise _Failure(EXIT_FAILED, ["integration"],
                       f"integration failed: {exc}" + (f" (last good t = {last!r})" if last is not None else ""),
                       {"command": "simulate", "reasons": ["integration"], "t_last": last}) from None
    header = ["t"] + [f"x{i}" for i in range(1, sys_.n + 1)]
    observe = "dist" in (args.observe or [])
    if observe:
        header.append("dist_to_orbit")
    rows = []
    for t, x in zip(traj.times, traj.states):
        row = [float(t)] + [float(v) for v in x]
        if observe:
            row.append(distance_to_orbit(x, orbit))
        rows.append(row)
    return EXIT_OK, write_csv(header, rows)


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("system", help="builtin name (e.g. harmonic:zD) or JSON system file")
    common.add_argument("--tol-rel", type=float, default=DEFAULT_RTOL, help="integrator relative tolerance")
    common.add_argument("--tol-abs", type=float, default=DEFAULT_ATOL, help="integrator absolute tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    common.add_argument("--rate", default=None, help="override every rate expression")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    checks = argparse.ArgumentParser(add_help=False)
    checks.add_argument("--samples", type=int, default=64, help="orbit samples for hypothesis checks")
    checks.add_argument("--periodicity-tol", type=float, default=PERIODICITY_TOL)

    mult = argparse.ArgumentParser(add_help=False)
    mult.add_argument("--panels", type=int, default=256, help="Simpson panels for rate integrals")
    mult.add_argument("--numeric", action=argparse.BooleanOptionalAction, default=True,
                      help="also compute the monodromy spectrum")
    mult.add_argument("--csv", default=None, help="CSV summary of the multipliers")

    parser = argparse.ArgumentParser(prog="orbitctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common, checks], help="check orbit and regularity hypotheses")
    p.add_argument("--points", type=int, default=100, help="random points for the Lie-derivative check")
    p.add_argument("--lie-tol", type=float, default=LIE_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("multipliers", parents=[common, checks, mult], help="characteristic multipliers")
    p.set_defaults(func=cmd_multipliers)

    p = sub.add_parser("stabilize", parents=[common, checks, mult],
                       help="replace the rates by a sign-definite template and analyse")
    p.add_argument("--rate-kind", choices=("stabilizing", "destabilizing"), default="stabilizing")
    p.add_argument("--psi", default="0", help="expression psi in -(psi^2 + c)")
    p.add_argument("--c", type=float, default=1.0, help="positive constant c")
    p.add_argument("--out-system", default=None, help="write the templated system file here")
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("simulate", parents=[common], help="integrate a trajectory to CSV")
    p.add_argument("--x0", required=True, help="initial point, comma separated")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.1, help="output spacing")
    p.add_argument("--observe", action="append", choices=("dist",), help="extra output columns")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, result = args.func(args)
    except _Failure as exc:
        print(f"orbitctl {args.command}: {exc}", file=sys.stderr)
        report = exc.report or {"command": args.command, "system": args.system,
                                "passed": False, "reasons": exc.reasons, "message": str(exc)}
        # simulate's --out is a CSV trajectory, so its failure report goes to stdout
        _emit(dumps(report) + "\n", None if args.command == "simulate" else args.out)
        return exc.code
    _emit(result if isinstance(result, str) else dumps(result) + "\n", args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
