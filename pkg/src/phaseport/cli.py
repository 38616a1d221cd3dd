"""Command-line front end: analyze, portrait, phaseline, scan, linsolve, eig.

Exit codes: 0 success, 1 analysis failure, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, expr
from .algebra2 import COMPLEX_CONJUGATE, Mat2, eigenvectors
from .corpus import (
    ModelFileError, ModelRecord, UnknownModelError, builtin_model, parse_model_file,
)
from .cycles import ContinuationError, hopf_scan
from .linsys import DefectiveMatrixError, classify_linear, eval_solution, general_solution, solve_ivp
from .phase1d import Model1D, fold_scan_1d
from .phase2d import Model2D, jacobian_at
from .report import analysis_report, phaseline_report, to_canonical_json
from .svg import render_phaseline_svg, render_portrait_svg


class _InputError(Exception):
    pass


class _AnalysisError(Exception):
    pass


def _load_model(args) -> tuple[ModelRecord, bytes | None]:
    if args.builtin and args.model_file:
        raise _InputError("give either --builtin NAME or a model file, not both")
    if args.builtin:
        try:
            record = builtin_model(args.builtin)
        except UnknownModelError as exc:
            raise _InputError(str(exc.args[0])) from exc
        if not record.available:
            raise _InputError(f"model {record.name!r} is registered but unavailable: {record.note}")
        return record, None
    if args.model_file:
        path = Path(args.model_file)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise _InputError(f"cannot read {path}: {exc}") from exc
        try:
            return parse_model_file(raw.decode()), raw
        except (ModelFileError, UnicodeDecodeError) as exc:
            raise _InputError(f"{path}: {exc}") from exc
    raise _InputError("no model given; use --builtin NAME or a model file path")


def _parse_matrix(text: str) -> Mat2:
    parts = text.split(",")
    if len(parts) != 4:
        raise _InputError(f"matrix must be 'a,b,c,d', got {text!r}")
    try:
        a, b, c, d = (float(p) for p in parts)
    except ValueError as exc:
        raise _InputError(f"non-numeric matrix entry in {text!r}") from exc
    return Mat2(a, b, c, d)


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _InputError(f"point must be 'x,y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise _InputError(f"non-numeric coordinate in {text!r}") from exc


def _emit_json(payload: dict, json_path: str | None) -> None:
    text = to_canonical_json(payload)
    if json_path:
        Path(json_path).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_analyze(args) -> int:
    record, raw = _load_model(args)
    if not isinstance(record.model, Model2D):
        raise _InputError("analyze needs a 2D model; use 'phaseline' for 1D models")
    payload = analysis_report(record, grid=args.grid, raw_bytes=raw)
    _emit_json(payload, args.json)
    if args.json:
        classes = ", ".join(e["class"] for e in payload["equilibria"])
        print(f"{record.name}: {len(payload['equilibria'])} equilibria [{classes}] -> {args.json}")
    return 0


def _cmd_phaseline(args) -> int:
    record, raw = _load_model(args)
    if not isinstance(record.model, Model1D):
        raise _InputError("phaseline needs a 1D model; use 'analyze' for 2D models")
    if args.output:
        Path(args.output).write_text(render_phaseline_svg(record.model))
    payload = phaseline_report(record, raw_bytes=raw)
    if args.json or not args.output:
        _emit_json(payload, args.json)
    return 0


def _cmd_portrait(args) -> int:
    record, _ = _load_model(args)
    if not isinstance(record.model, Model2D):
        raise _InputError("portrait needs a 2D model")
    starts = tuple(_parse_point(s) for s in args.start or ())
    svg = render_portrait_svg(record.model, grid=args.grid, starts=starts, t_max=args.tmax)
    if args.output:
        Path(args.output).write_text(svg)
    else:
        sys.stdout.write(svg)
    return 0


def _cmd_scan(args) -> int:
    record, raw = _load_model(args)
    if args.fold == args.hopf:
        raise _InputError("choose exactly one of --fold or --hopf")
    lo, hi = args.range
    rows: list[dict] = []
    critical = None

    if args.fold:
        if not isinstance(record.model, Model1D):
            raise _InputError("--fold scans 1D models")
        from .phase1d import find_equilibria_1d
        import numpy as np
        for p in np.linspace(lo, hi, args.steps):
            eqs = find_equilibria_1d(record.model.with_param(args.param, float(p)))
            rows.append({"param": float(p), "equilibria": [e.x for e in eqs]})
        critical = fold_scan_1d(record.model, args.param, (lo, hi), args.steps)
        for row in rows:
            print(f"{args.param}={row['param']:.6g}  equilibria={len(row['equilibria'])}")
    else:
        if not isinstance(record.model, Model2D):
            raise _InputError("--hopf scans 2D models")
        try:
            res = hopf_scan(record.model, args.param, (lo, hi), args.steps)
        except ContinuationError as exc:
            for p, eq, tr, det in exc.path:
                print(f"{args.param}={p:.6g}  eq=({eq[0]:.6g},{eq[1]:.6g})  tr={tr:.6g}  det={det:.6g}")
            print(f"error: {exc} (last good {args.param}={exc.last_param:.6g})", file=sys.stderr)
            raise _AnalysisError(str(exc)) from exc
        if res is not None:
            critical = res.critical
            rows = [
                {"param": p, "equilibrium": [eq[0], eq[1]], "tr": tr, "det": det}
                for p, eq, tr, det in res.path
            ]
        else:
            rows = []
        for row in rows:
            eq = row["equilibrium"]
            print(f"{args.param}={row['param']:.6g}  eq=({eq[0]:.6g},{eq[1]:.6g})"
                  f"  tr={row['tr']:.6g}  det={row['det']:.6g}")

    if critical is None:
        print("no critical value found in range")
    else:
        print(f"critical {args.param} = {critical!r}")
    if args.json:
        payload = {
            "mode": "fold" if args.fold else "hopf",
            "param": args.param,
            "range": [lo, hi],
            "steps": args.steps,
            "rows": rows,
            "critical": critical,
            "model": record.name,
            "version": __version__,
        }
        _emit_json(payload, args.json)
    return 0


def _fmt_root_pair(values) -> str:
    if values.kind == COMPLEX_CONJUGATE:
        return f"{values.alpha!r} +- {values.beta!r}i"
    return f"{values.lam1!r}, {values.lam2!r}"


def _cmd_eig(args) -> int:
    m = _parse_matrix(args.matrix)
    eig = eigenvectors(m)
    print(f"matrix [[{m.a!r}, {m.b!r}], [{m.c!r}, {m.d!r}]]")
    print(f"det = {m.det!r}, tr = {m.tr!r}")
    print(f"eigenvalues: {_fmt_root_pair(eig.values)}")
    if eig.values.kind == COMPLEX_CONJUGATE:
        print(f"eigenvector: ({eig.vr[0]!r}, {eig.vr[1]!r}) + i({eig.vi[0]!r}, {eig.vi[1]!r})")
    else:
        print(f"eigenvectors: ({eig.v1[0]!r}, {eig.v1[1]!r}), ({eig.v2[0]!r}, {eig.v2[1]!r})")
    print(f"classification: {classify_linear(m)}")
    return 0


def _cmd_linsolve(args) -> int:
    m = _parse_matrix(args.matrix)
    sol = general_solution(m)
    print(f"matrix [[{m.a!r}, {m.b!r}], [{m.c!r}, {m.d!r}]]  class: {classify_linear(m)}")
    if sol.kind == "real":
        print(f"x(t) = C1*({sol.v1[0]!r}, {sol.v1[1]!r})*exp({sol.lam1!r}*t)"
              f" + C2*({sol.v2[0]!r}, {sol.v2[1]!r})*exp({sol.lam2!r}*t)")
    else:
        print(f"lambda = {sol.alpha!r} +- {sol.beta!r}i,"
              f" v = ({sol.vr[0]!r}, {sol.vr[1]!r}) + i({sol.vi[0]!r}, {sol.vi[1]!r})")
    if args.init:
        init = _parse_point(args.init)
        try:
            ivp = solve_ivp(m, init)
        except DefectiveMatrixError as exc:
            raise _AnalysisError(str(exc)) from exc
        print(f"C1 = {ivp.c1!r}, C2 = {ivp.c2!r}  (x(0), y(0)) = {init}")
        for t in (0.0, 1.0, 2.0, 5.0):
            x, y = eval_solution(ivp, t)
            print(f"t={t:g}: x={x!r}, y={y!r}")
    return 0


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("model_file", nargs="?", help="model file path")
    p.add_argument("--builtin", help="name of a built-in model")
    p.add_argument("--json", metavar="PATH", help="write the JSON report to PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseport",
        description="Qualitative analysis of 1D/2D autonomous ODE systems",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="equilibria, Jacobians, classification (2D)")
    _add_model_args(p)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("phaseline", help="1D equilibria, arrows, basins")
    _add_model_args(p)
    p.add_argument("-o", "--output", metavar="PATH", help="write an SVG phase line")
    p.set_defaults(fn=_cmd_phaseline)

    p = sub.add_parser("portrait", help="SVG phase portrait (2D)")
    _add_model_args(p)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--start", action="append", metavar="X,Y",
                   help="trajectory start point (repeatable)")
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("-o", "--output", metavar="PATH", help="output SVG path (default stdout)")
    p.set_defaults(fn=_cmd_portrait)

    p = sub.add_parser("scan", help="parameter scans: --fold (1D) or --hopf (2D)")
    _add_model_args(p)
    p.add_argument("--param", required=True)
    p.add_argument("--range", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--fold", action="store_true")
    p.add_argument("--hopf", action="store_true")
    p.set_defaults(fn=_cmd_scan)

    p = sub.add_parser("eig", help="eigenvalues/eigenvectors of a 2x2 matrix")
    p.add_argument("matrix", help="a,b,c,d (row-major)")
    p.set_defaults(fn=_cmd_eig)

    p = sub.add_parser("linsolve", help="closed-form solution of dX/dt = A X")
    p.add_argument("matrix", help="a,b,c,d (row-major)")
    p.add_argument("--init", metavar="X,Y", help="initial point for the IVP")
    p.set_defaults(fn=_cmd_linsolve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, expr.ExprError, _AnalysisError,
            DefectiveMatrixError, ContinuationError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
