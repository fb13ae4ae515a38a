"""``scglue`` command line: identity suites, spectra, indices and field-file gluing.

Exit status is 0 when every check passes, 1 on a numeric failure and 2 on a
usage, parse or range error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import formats as F
from . import gluing as G
from . import operators as Op
from . import orbit as O
from . import scharness as SH
from . import verify as V
from ._parallel import parallel_map
from .errors import ParseError, ScglueError
from .fields import AntiGluedField, FiniteCylinderField, GluingParameter, HalfCylinderField, aligned_index
from .profile import CUTOFF_MODELS

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flags or out-of-range overrides; maps to exit status 2."""


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--Nt", type=int, default=16, help="circle samples (even, >= 4)")
    p.add_argument("--Ds", type=float, default=0.25, help="s-grid spacing")
    p.add_argument("--Smax", type=float, default=30.0, help="half-cylinder truncation")
    p.add_argument("--R", type=float, default=12.0, help="neck length")
    p.add_argument("--theta", type=float, default=0.0, help="twist angle in [0, 1)")
    p.add_argument("--delta", type=str, default=None, help="comma-separated weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cutoff", choices=sorted(CUTOFF_MODELS), default="exp")
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "report"), default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="scglue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the identity suites")
    p.add_argument("--suite", choices=("all", "nodal", "orbit", "operators"), default="all")
    p.add_argument("--pairs", type=int, default=50, help="random pairs per (R, theta)")

    p = sub.add_parser("glue", parents=[common], help="glue and anti-glue two half-cylinder fields")
    p.add_argument("--x", type=Path, required=True, help="SCFIELD on the + half-cylinder")
    p.add_argument("--y", type=Path, required=True, help="SCFIELD on the - half-cylinder")
    p.add_argument("--hat", action="store_true", help="use the hat maps (zero constants)")

    p = sub.add_parser("unglue", parents=[common], help="recover the half-cylinder pair")
    p.add_argument("--in", dest="inp", type=Path, required=True,
                   help="file holding the glued and anti-glued fields")
    p.add_argument("--hat", action="store_true")

    p = sub.add_parser("orbit-avg", parents=[common], help="standard map of a glued orbit element")
    p.add_argument("--elem", type=Path, required=True)
    p.add_argument("--orbit", type=Path, default=None, help="SCORBIT file if not inside --elem")
    p.add_argument("--max-modulus", type=float, default=O.DISK_RADIUS)

    p = sub.add_parser("spectrum", parents=[common], help="asymptotic operator spectrum as CSV")
    p.add_argument("--loop", type=Path, required=True, help="SCLOOP file")
    p.add_argument("--K", type=int, default=16, help="Fourier truncation")
    p.add_argument("--scales", type=str, default="1", help="comma-separated multipliers of A")

    p = sub.add_parser("index", parents=[common], help="CR index over a weight sweep")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--delta-from", type=float, default=None)
    p.add_argument("--delta-to", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("cz", parents=[common], help="Conley-Zehnder index of a symplectic path")
    p.add_argument("--path", type=Path, required=True, help="SCPATH file")
    p.add_argument("--maslov", action="store_true", help="Maslov index of a loop instead")

    p = sub.add_parser("probe", parents=[common], help="sc-shadow probes")
    p.add_argument("--targets", type=str, default=",".join(SH.TARGETS))
    return parser


def _validate(args) -> None:
    if args.Nt < 4 or args.Nt % 2:
        raise UsageError(f"--Nt must be an even integer >= 4 (got {args.Nt})")
    if not (args.Ds > 0 and math.isfinite(args.Ds)):
        raise UsageError(f"--Ds must be positive (got {args.Ds})")
    if not args.Ds <= 0.5:
        raise UsageError(f"--Ds must be <= 0.5 (got {args.Ds})")
    if aligned_index(args.Smax, args.Ds) is None or args.Smax < 10.0:
        raise UsageError(f"--Smax must be a multiple of --Ds and >= 10 (got {args.Smax})")
    if not args.R > 0:
        raise UsageError(f"--R must be positive (got {args.R})")
    if not 0.0 <= args.theta < 1.0:
        raise UsageError(f"--theta must lie in [0, 1) (got {args.theta})")
    if args.seed < 0:
        raise UsageError(f"--seed must be non-negative (got {args.seed})")


def _emit(args, text: str, default_out) -> None:
    if args.out is None:
        default_out.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_verify(args, out) -> int:
    if args.pairs < 1:
        raise UsageError(f"--pairs must be >= 1 (got {args.pairs})")
    cfg = V.VerifyConfig(Nt=args.Nt, ds=args.Ds, Smax=args.Smax, seed=args.seed, pairs=args.pairs,
                         orbit_nt=max(32, 2 * args.Nt),
                         cutoff=CUTOFF_MODELS[args.cutoff])
    results = V.run(args.suite, cfg)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("check,max_err,tol,status\n")
        for r in results:
            buf.write(f"{r.name},{r.error!r},{r.tol!r},{'PASS' if r.passed else 'FAIL'}\n")
        text = buf.getvalue()
    else:
        text = "".join(r.line() + "\n" for r in results)
        n_bad = sum(not r.passed for r in results)
        text += f"{len(results) - n_bad}/{len(results)} checks passed\n"
    _emit(args, text, out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _one_field(path: Path, kind):
    fld = F.read_field(path)
    if not isinstance(fld, kind):
        raise UsageError(f"{path}: expected a {kind.__name__}")
    return fld


def cmd_glue(args, out) -> int:
    ux = _one_field(args.x, HalfCylinderField)
    uy = _one_field(args.y, HalfCylinderField)
    a = GluingParameter.from_length(args.R, args.theta)
    cutoff = CUTOFF_MODELS[args.cutoff]
    if args.hat:
        w, v = G.oplus_hat(a, ux, uy, cutoff), G.ominus_hat(a, ux, uy, cutoff)
    else:
        w, v = G.oplus(a, ux, uy, cutoff), G.ominus(a, ux, uy, cutoff)
    buf = io.StringIO()
    F.write_field(w, buf)
    if isinstance(v, AntiGluedField):
        F.write_field(v, buf)
    _emit(args, buf.getvalue(), out)
    return EXIT_OK


def cmd_unglue(args, out) -> int:
    flds = F.read_fields(args.inp)
    if len(flds) != 2 or not isinstance(flds[0], FiniteCylinderField) \
            or not isinstance(flds[1], AntiGluedField):
        raise UsageError(f"{args.inp}: expected a finite field followed by an anti-glued field")
    w, v = flds
    cutoff = CUTOFF_MODELS[args.cutoff]
    unglue = G.unglue_pair_hat if args.hat else G.unglue_pair
    ux, uy = unglue(w, v, cutoff)
    buf = io.StringIO()
    F.write_field(ux, buf)
    F.write_field(uy, buf)
    _emit(args, buf.getvalue(), out)
    return EXIT_OK


def cmd_orbit_avg(args, out) -> int:
    elem, orbit = F.read_element(args.elem)
    if args.orbit is not None:
        orbit = F.read_orbit(args.orbit)
    if orbit is None:
        orbit = elem.q.orbit if elem.q is not None else None
    if orbit is None:
        raise UsageError("interior elements need an orbit (--orbit FILE)")
    cutoff = CUTOFF_MODELS[args.cutoff]
    if elem.kind == "boundary" and elem.r > 0.0:
        elem = O.bar_oplus(elem, cutoff, max_modulus=args.max_modulus)
    if elem.kind == "boundary":
        q = elem.q
        d = (0.5 * q.orbit.k - q.orbit.k * q.theta_x) % 1.0
    else:
        q = O.averaging_A_Phi(elem, orbit=orbit)
        d = O.middle_averages(elem.r, elem.w, orbit)[2]
    vals = (q.cx, q.cy, q.theta_x, q.theta_y, d)
    if args.format == "csv":
        text = "c_x,c_y,theta_x,theta_y,d\n" + ",".join(repr(float(x)) for x in vals) + "\n"
    else:
        text = "".join(f"{k} {float(x)!r}\n" for k, x in zip(("c_x", "c_y", "theta_x", "theta_y", "d"), vals))
    _emit(args, text, out)
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    if args.K < 4:
        raise UsageError(f"--K must be >= 4 (got {args.K})")
    L = F.read_loop(args.loop)
    scales = _csv_floats(args.scales)
    if not scales:
        raise UsageError("--scales is empty")
    bound = Op.TWO_PI * (args.K // 2 - 2)
    rows, report = [], []
    for scale in scales:
        spec = Op.asymptotic_spectrum(Op.LoopOperator(scale * L.A, L.n), args.K)
        rows.extend((scale, v, m) for v, m in spec.within(bound))
        w = Op.admissible_weight(spec)
        report.append(f"scale {scale!r} gap {spec.gap[0]!r} {spec.gap[1]!r} "
                      f"admissible_weight {'none' if w is None else repr(w)}")
        if args.delta is not None:
            for d in _csv_floats(args.delta):
                ok = Op.weight_is_admissible(spec, d)
                report.append(f"scale {scale!r} delta {d!r} {'admissible' if ok else 'not admissible'}")
    if args.format == "report":
        text = "".join(line + "\n" for line in report) + F.spectrum_csv(rows)
    else:
        text = F.spectrum_csv(rows)
    _emit(args, text, out)
    return EXIT_OK


def _deltas(args) -> list[float]:
    if args.delta is not None:
        return _csv_floats(args.delta)
    lo, hi, steps = args.delta_from, args.delta_to, args.steps
    if lo is None or hi is None:
        raise UsageError("give --delta or both --delta-from and --delta-to")
    steps = 2 if steps is None else steps
    if steps < 1 or (steps == 1 and lo != hi):
        raise UsageError(f"--steps must be >= 2 for a range (got {steps})")
    return [float(x) for x in np.linspace(lo, hi, steps)]


def cmd_index(args, out) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1 (got {args.n})")
    deltas = _deltas(args)
    for d in deltas:
        if d <= 0.0 or d % Op.TWO_PI == 0.0:
            raise UsageError(f"weights must be positive and not multiples of 2 pi (got {d})")
    configs = [Op.CRConfig.resolved(args.n, d) for d in deltas]
    results = parallel_map(Op.cr_index, configs)
    rows = [(d, *tuple(r)) for d, r in zip(deltas, results)]
    if args.format == "report":
        text = "".join(f"delta {d!r} kernel {k} cokernel {c} index {i} gap_ratio {r.gap_ratio:.3g}\n"
                       for (d, k, c, i), r in zip(rows, results))
    else:
        text = F.index_csv(rows)
    _emit(args, text, out)
    return EXIT_OK if all(r.gap_ratio >= Op.GAP_RATIO for r in results) else EXIT_FAIL


def cmd_cz(args, out) -> int:
    path = F.read_path(args.path)
    value = Op.maslov_loop(path) if args.maslov else Op.conley_zehnder(path)
    _emit(args, f"{value}\n", out)
    return EXIT_OK


def cmd_probe(args, out) -> int:
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    unknown = [t for t in targets if t not in SH.TARGETS]
    if unknown:
        raise UsageError(f"unknown targets {unknown}; choose from {', '.join(SH.TARGETS)}")
    grid = SH.ProbeGrid(Nt=args.Nt, ds=args.Ds, Smax=args.Smax)
    report = SH.run_suite(targets, grid, seed=args.seed, cutoff=CUTOFF_MODELS[args.cutoff])
    _emit(args, report.render(), out)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "glue": cmd_glue, "unglue": cmd_unglue, "orbit-avg": cmd_orbit_avg,
            "spectrum": cmd_spectrum, "index": cmd_index, "cz": cmd_cz, "probe": cmd_probe}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        _validate(args)
        return COMMANDS[args.command](args, out)
    except ParseError as exc:
        print(f"scglue: parse error: {exc}", file=err)
        return EXIT_USAGE
    except (UsageError, OSError) as exc:
        print(f"scglue: {exc}", file=err)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"scglue: numeric failure: {exc}", file=err)
        return EXIT_FAIL
    except (ScglueError, ValueError) as exc:
        print(f"scglue: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
