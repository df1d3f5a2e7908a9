"""Command-line front end.

Exit codes: 0 ok / pass, 1 usage or malformed input, 2 indeterminate count,
3 hypothesis fails, 4 unsupported degree, 5 continuation count not constant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bounds import (check_aggregate, check_calanchi_ruf, check_theorem_1_1, check_theorem_1_2,
                     check_theorem_1_3)
from .coefficients import Equation
from .counting import (Contour, continuation_count, frozen_root_radius, homotopy_family,
                       isolate_zeros, rho_region)
from .displacement import scan_real_line
from .errors import (IndefiniteLeading, InvalidInput, PolyPeriodicError, StepLimitExceeded,
                     UnsupportedDegree)
from .flow import IntegratorConfig, integrate
from .planar import PlanarSystem, check_corollary_4_1, count_limit_cycles

EXIT_OK, EXIT_USAGE, EXIT_INDETERMINATE, EXIT_FAIL, EXIT_UNSUPPORTED, EXIT_NONCONSTANT = range(6)

THEOREMS = ("1.1", "1.2", "1.3i", "1.3ii", "1.3iii", "cr", "4.1i", "4.1ii", "4.1iii", "4.1iv",
            "aggregate", "aggregate1.2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _grid_spec(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        n, m = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like NxM, got {text!r}") from None
    if n < 1 or m < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return n, m


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eq", metavar="PATH", help="equation JSON")
    common.add_argument("--sys", metavar="PATH", help="planar system JSON")
    common.add_argument("--omega", type=float, help="override the horizon")
    common.add_argument("--radius", type=float, help="escape radius for the integrator")
    common.add_argument("--box", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))
    common.add_argument("--theorem", choices=THEOREMS)
    common.add_argument("--K", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--grid", type=_grid_spec, metavar="NxM")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--seed", type=int, default=0)
    p = _Parser(prog="polyperiodic", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("count", parents=[common], help="isolate and count periodic solutions")
    sub.add_parser("check", parents=[common], help="evaluate a theorem's hypotheses")
    sc = sub.add_parser("scan", parents=[common], help="q over a complex grid or the real line")
    sc.add_argument("--real-line", action="store_true",
                    help="bracket real zeros on [X0, X1] with N grid points")
    sub.add_parser("continuation", parents=[common], help="count along the homotopy family")
    sub.add_parser("cycles", parents=[common], help="limit cycles of a planar system")
    return p


def _read_json(path: str | None, what: str) -> Any:
    if not path:
        raise UsageError(f"--{what} PATH is required")
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidInput(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _load_eq(args) -> Equation:
    eq = Equation.from_dict(_read_json(args.eq, "eq"))
    if args.omega is not None:
        if not args.omega > 0:
            raise InvalidInput("--omega must be positive")
        eq = eq.with_omega(args.omega)
    return eq


def _config(args) -> IntegratorConfig:
    kw = {}
    if args.rel_tol is not None:
        kw["rel_tol"] = args.rel_tol
    if args.radius is not None:
        kw["escape_radius"] = args.radius
    return IntegratorConfig(**kw)


def _manifest(args, argv: list[str]) -> dict:
    overrides = []
    for flag in ("omega", "radius", "box", "theorem", "K", "steps", "grid", "threads", "rel_tol"):
        v = getattr(args, flag, None)
        if v is not None:
            overrides.append(["--" + flag.replace("_", "-"), list(v) if isinstance(v, tuple) else v])
    if getattr(args, "real_line", False):
        overrides.append(["--real-line", True])
    return {"command": args.command, "input_path": args.eq or args.sys, "config_overrides": overrides,
            "output_path": args.out, "seed": args.seed}


def _emit(args, text: str, suffix: str | None = None) -> None:
    if args.out:
        path = Path(args.out)
        if suffix:
            path = path.with_suffix(suffix)
        path.write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _region(args, eq: Equation) -> Contour:
    if args.box:
        x0, y0, x1, y1 = args.box
        return Contour.box(complex(x0, y0), complex(x1, y1))
    return rho_region(eq)


def cmd_count(args, manifest) -> int:
    eq = _load_eq(args)
    sols = isolate_zeros(eq, _region(args, eq), cfg=_config(args), threads=args.threads)
    _emit(args, sols.to_json(manifest=manifest))
    if args.out:
        _emit(args, sols.to_csv(), ".csv")
    else:
        sys.stdout.write(sols.to_csv())
    return EXIT_OK if sols.certified else EXIT_INDETERMINATE


def cmd_check(args, manifest) -> int:
    th = args.theorem
    if th is None:
        raise UsageError("--theorem is required")
    if th.startswith("4.1"):
        obj = PlanarSystem.from_dict(_read_json(args.sys, "sys")) if args.sys else _load_eq(args)
        try:
            rep = check_corollary_4_1(obj, th[3:])
        except IndefiniteLeading as exc:
            print(f"hypothesis fails: {exc}", file=sys.stderr)
            return EXIT_FAIL
    else:
        eq = _load_eq(args)
        if th == "1.1":
            rep = check_theorem_1_1(eq, args.K)
        elif th == "1.2":
            rep = check_theorem_1_2(eq, args.K)
        elif th.startswith("1.3"):
            rep = check_theorem_1_3(eq, th[3:])
        elif th == "cr":
            rep = check_calanchi_ruf(eq)
        else:
            rep = check_aggregate(eq, "1.2" if th == "aggregate1.2" else "1.1", args.K)
    print(rep.table())
    if args.out:
        _emit(args, rep.to_json(manifest=manifest))
    return EXIT_OK if rep.verdict else EXIT_FAIL


def _scan_rows(eq, cfg, xs, ys):
    for y in ys:
        for x in xs:
            c = complex(x, y)
            out = integrate(eq, c, 0.0, eq.omega, cfg)
            if out.completed:
                q = out.offset
                yield ["%.17g" % x, "%.17g" % y, "COMPLETED", "%.17g" % q.real, "%.17g" % q.imag,
                       "%.17g" % abs(q), "", ""]
            else:
                arm = "" if out.arm is None else str(out.arm)
                yield ["%.17g" % x, "%.17g" % y, "ESCAPE", "", "", "", "%.17g" % out.escape_time, arm]


def cmd_scan(args, manifest) -> int:
    eq = _load_eq(args)
    cfg = _config(args)
    if not args.box:
        raise UsageError("--box X0 Y0 X1 Y1 is required")
    x0, y0, x1, y1 = args.box
    n, m = args.grid or (41, 41)
    if args.real_line:
        res = scan_real_line(eq, (x0, x1), max(n, 2), cfg)
        doc = {"zeros": res.zeros, "brackets": [list(b) for b in res.brackets],
               "escape_boundaries": res.escape_boundaries, "manifest": manifest}
        _emit(args, json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_OK
    xs = np.linspace(x0, x1, n) if n > 1 else [0.5 * (x0 + x1)]
    ys = np.linspace(y0, y1, m) if m > 1 else [0.5 * (y0 + y1)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["c_re", "c_im", "status", "q_re", "q_im", "abs_q", "escape_time", "arm"])
    w.writerows(_scan_rows(eq, cfg, xs, ys))
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_continuation(args, manifest) -> int:
    eq = _load_eq(args)
    steps = 10 if args.steps is None else args.steps
    family = homotopy_family(eq, "1.2" if args.theorem == "1.2" else "1.1")
    if args.box:
        region = _region(args, eq)
    else:
        lams = [0.0] if steps == 0 else [j / steps for j in range(steps + 1)]
        r = 1.25 * max(frozen_root_radius(family(lam)) for lam in lams)
        region = Contour.box(complex(-r, -r), complex(r, r))
    rep = continuation_count(family, steps, region, _config(args), threads=args.threads)
    print(f"{'lambda':>24} {'count':>6} certified")
    for e in rep.entries:
        print(f"{e.lam:>24.17g} {'-' if e.count is None else e.count:>6} {e.certified}")
    if args.out:
        box = region.shape
        _emit(args, json.dumps({**rep.to_dict(), "region": box.as_list(), "manifest": manifest},
                               indent=2, sort_keys=True))
    return EXIT_OK if rep.constant else EXIT_NONCONSTANT


def cmd_cycles(args, manifest) -> int:
    sys_ = PlanarSystem.from_dict(_read_json(args.sys, "sys"))
    rep = count_limit_cycles(sys_, _config(args))
    _emit(args, rep.to_json(manifest=manifest))
    return EXIT_OK


COMMANDS = {"count": cmd_count, "check": cmd_check, "scan": cmd_scan,
            "continuation": cmd_continuation, "cycles": cmd_cycles}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        return COMMANDS[args.command](args, _manifest(args, argv))
    except UnsupportedDegree as exc:
        print(f"unsupported degree: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (UsageError, InvalidInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StepLimitExceeded as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except PolyPeriodicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
