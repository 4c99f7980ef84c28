"""Command-line entry points: build, orbit, bench, verify.

Exit codes: 0 success (including an empty family), 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .linear import LinearMapChoice
from .normalizer import TransformTheory, build_theory, truncation_indicator
from .orbits import (DEFAULT_TOL, CartesianState, CorrectionError, OrbitRecord, SingularityError,
                     family_orbits, propagate)
from .persist import read_theory, write_theory
from .reduced import FAMILIES, RootNotFound, bifurcation_values
from .ring import float_constant

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
THREADS_ENV = "HILLNF_THREADS"
CSV_HEADER = "t,x,y,z,X,Y,Z,vx,vy,vz"


class InvalidInput(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def state_row(t: float, s: CartesianState) -> str:
    vx, vy, vz = s.velocity
    return ",".join(_fmt(v) for v in (t, s.x, s.y, s.z, s.X, s.Y, s.Z, vx, vy, vz))


def write_csv(path: Path, rows: Sequence[tuple[float, CartesianState]]) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for t, s in rows:
            fh.write(state_row(t, s) + "\n")


def _choice(text: str) -> LinearMapChoice:
    try:
        return LinearMapChoice.from_label(text)
    except (ValueError, KeyError) as exc:
        raise InvalidInput(f"bad --map value {text!r}: {exc}") from exc


def _stat_line(s) -> str:
    return (f"order {s.n:2d}  time {s.seconds:10.4f} s  W terms {s.w_terms:7d}  "
            f"N terms {s.n_terms:5d}  max|W| {s.max_w_coeff:.3e}  "
            f"residual {s.residual_ratio:.3e}  digits {s.max_digits}")


# ---------------------------------------------------------------- commands


def cmd_build(args) -> int:
    theory = build_theory(args.order, args.arith, _choice(args.map),
                          progress=None if args.quiet else lambda s: print(_stat_line(s), flush=True))
    if args.out:
        write_theory(theory, args.out)
    top = max((s.max_digits for s in theory.stats), default=0)
    print(f"built order {theory.order} ({theory.backend}); largest integer {top} digits"
          + (f"; written to {args.out}" if args.out else ""))
    return EXIT_OK


def _load(args) -> TransformTheory:
    try:
        theory = read_theory(args.theory)
    except OSError as exc:
        raise InvalidInput(f"cannot read theory file: {exc}") from exc
    if args.order is not None:
        if args.order > theory.order:
            raise InvalidInput(f"theory has order {theory.order}, requested {args.order}")
        theory = theory.truncated(args.order)
    return theory


def _record_json(rec: OrbitRecord) -> dict:
    out = rec.summary()
    if rec.correction is not None:
        out["correction_defects"] = rec.correction.defects
    return out


def cmd_orbit(args) -> int:
    theory = _load(args)
    records = family_orbits(theory, args.family, args.L, ell=args.ell, samples=args.samples,
                            ell_count=args.ell_count, correct=args.correct, tol=args.tol)
    summary = {"family": args.family, "L": args.L, "order": theory.order}
    if not records:
        summary.update(status="not bifurcated yet", orbits=[])
        if args.family in ("halo", "bridge"):
            b = bifurcation_values(theory)
            summary["bifurcation_values"] = {"L_h": b.L_h, "L_b1": b.L_b1, "L_b2": b.L_b2}
    else:
        summary.update(status="ok", orbits=[_record_json(r) for r in records])
    if args.out:
        prefix = Path(args.out)
        for rec in records:
            if rec.samples:
                write_csv(prefix.with_name(f"{prefix.name}-{rec.family}.csv"), rec.samples)
            if rec.analytic:
                write_csv(prefix.with_name(f"{prefix.name}-{rec.family}-analytic.csv"),
                          [(p.ell, p.state) for p in rec.analytic])
        prefix.with_name(prefix.name + ".json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    theory = build_theory(args.max_order, args.arith, _choice(args.map))
    ratios = truncation_indicator(theory)
    t2 = next((s.seconds for s in theory.stats if s.n == 2), None) or float("nan")
    lines = ["order,seconds,scaled_time,w_terms,max_w_coeff,residual_ratio"]
    for s in theory.stats:
        lines.append(",".join([str(s.n), _fmt(s.seconds), _fmt(s.seconds / t2), str(s.w_terms),
                               _fmt(s.max_w_coeff), _fmt(ratios[s.n])]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _read_state(path: str) -> tuple[np.ndarray, float]:
    """State and period from an orbit JSON summary or a text file ``x y z X Y Z T``."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        values = [float(v) for v in text.replace(",", " ").split()]
        if len(values) != 7:
            raise InvalidInput("state file needs seven numbers: x y z X Y Z T")
        return np.array(values[:6]), values[6]
    if "orbits" in data:
        if not data["orbits"]:
            raise InvalidInput("summary holds no orbits")
        data = data["orbits"][0]
    if "corrected_initial" in data:
        return np.array(data["corrected_initial"]), float(data["corrected_period"])
    return np.array(data["initial"], dtype=float), float(data["period"])


def cmd_verify(args) -> int:
    try:
        s0, T = _read_state(args.state)
    except (OSError, KeyError, ValueError) as exc:
        raise InvalidInput(f"cannot read state file: {exc}") from exc
    if args.period is not None:
        T = args.period
    if not (T > 0 and math.isfinite(T)):
        raise InvalidInput("period must be positive")
    times = np.linspace(0.0, T, max(args.samples, 2))
    traj = propagate(s0, T, args.tol, samples=times)
    energies = [CartesianState.from_array(s).energy() for s in traj.states]
    report = {
        "period": T,
        "epsilon": float(np.abs(traj.states[-1] - s0).max()),
        "energy_drift": float(max(abs(e - energies[0]) for e in energies)),
        "radius_min": float(min(np.linalg.norm(traj.states[:, :3] - [float_constant("x"), 0, 0], axis=1))),
    }
    if args.out:
        write_csv(Path(args.out), [(float(t), CartesianState.from_array(s))
                                   for t, s in zip(traj.t, traj.states)])
    print(json.dumps(report, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hillnf", description="Normal forms and periodic orbits "
                                "about the libration points of the Hill problem.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="normalize to a given order and write a theory file")
    b.add_argument("--order", type=int, required=True)
    b.add_argument("--arith", choices=("exact", "float"), default="float")
    b.add_argument("--map", default="standard", help="standard, alternative or a custom label")
    b.add_argument("--out", help="theory file path")
    b.add_argument("--quiet", action="store_true")
    b.set_defaults(func=cmd_build)

    o = sub.add_parser("orbit", help="periodic orbits of one family at one action L")
    o.add_argument("--theory", required=True)
    o.add_argument("--family", choices=FAMILIES, required=True)
    o.add_argument("--L", type=float, required=True)
    o.add_argument("--order", type=int, help="truncate the theory to this order")
    o.add_argument("--ell", type=float, default=0.0, help="Lissajous angle of the initial condition")
    o.add_argument("--samples", type=int, default=0, help="propagated samples per period")
    o.add_argument("--ell-count", type=int, default=0, help="analytic points along the orbit")
    o.add_argument("--correct", action="store_true", help="refine by differential correction")
    o.add_argument("--tol", type=float, default=DEFAULT_TOL)
    o.add_argument("--out", help="output prefix for CSV and JSON files")
    o.set_defaults(func=cmd_orbit)

    n = sub.add_parser("bench", help="per-order timing and growth diagnostics as CSV")
    n.add_argument("--max-order", type=int, required=True)
    n.add_argument("--arith", choices=("exact", "float"), default="float")
    n.add_argument("--map", default="standard")
    n.add_argument("--out")
    n.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="propagate a state and report closure and energy drift")
    v.add_argument("--state", required=True, help="orbit JSON summary or 'x y z X Y Z T' text")
    v.add_argument("--period", type=float)
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--tol", type=float, default=DEFAULT_TOL)
    v.add_argument("--out", help="CSV of the propagated samples")
    v.set_defaults(func=cmd_verify)
    return p


def _apply_threads() -> None:
    value = os.environ.get(THREADS_ENV)
    if value:
        import numba

        numba.set_num_threads(max(1, min(int(value), numba.config.NUMBA_NUM_THREADS)))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "L", 1.0) is not None and getattr(args, "L", 1.0) <= 0:
        print("error: --L must be positive", file=sys.stderr)
        return EXIT_INVALID
    try:
        _apply_threads()
        return args.func(args)
    except (InvalidInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, SingularityError, CorrectionError, RootNotFound, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
