"""Command-line front end: ingestion, pipeline orchestration, reports.

Subcommands: ``check`` (compatibility residuals), ``synthesize-minlag``
(elliptic solve, frame integration, surface export, round-trip report),
``integrate``, ``verify``, ``gauss``, ``eigen``.  Input and output use a
single self-describing JSON schema tagged ``parakahler/1``; reports are
serialized canonically (fixed field order, floats at 17 significant
digits) so identical inputs produce byte-identical files.  Exit codes:
0 success, 1 tolerance breach, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import gaussmaps, integrator, liealg, surface2d
from .liealg import Signature
from .surface2d import Grid2D, MCPair, SurfaceData

SCHEMA = "parakahler/1"

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2


class CliInputError(ValueError):
    """Malformed or inconsistent input file."""


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise CliInputError("non-finite value in report")
        return format(v, ".17g")
    if isinstance(obj, complex):
        return _canon({"re": obj.real, "im": obj.imag})
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_canon(v)}" for k, v in obj.items())
        return "{" + items + "}"
    raise TypeError(f"cannot serialize {type(obj)}")


def canonical_json(obj) -> str:
    return _canon(obj) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliInputError("top-level JSON value must be an object")
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise CliInputError(f"unsupported schema {doc.get('schema')!r}")
    return doc


def _field(doc: dict, key: str, shape, default=None) -> np.ndarray:
    if key not in doc:
        if default is None:
            raise CliInputError(f"missing field {key!r}")
        return np.full(shape, default, dtype=float)
    arr = np.asarray(doc[key], dtype=float)
    if arr.shape != shape:
        raise CliInputError(f"field {key!r} has shape {arr.shape}, expected {shape}")
    return arr


def _grid_from_json(doc: dict, override_h: float | None = None) -> Grid2D:
    g = doc.get("grid")
    if not isinstance(g, dict):
        raise CliInputError("missing grid description")
    try:
        grid = Grid2D(nx=int(g["nx"]), ny=int(g["ny"]),
                      x0=float(g.get("x0", 0.0)), y0=float(g.get("y0", 0.0)),
                      hx=float(g["hx"]), hy=float(g["hy"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliInputError(f"bad grid description: {exc}") from exc
    if grid.nx < 2 or grid.ny < 2 or grid.hx <= 0 or grid.hy <= 0:
        raise CliInputError("grid must have nx, ny >= 2 and positive spacings")
    if override_h is not None:
        nx = int(round((grid.nx - 1) * grid.hx / override_h)) + 1
        ny = int(round((grid.ny - 1) * grid.hy / override_h)) + 1
        grid = Grid2D(nx=nx, ny=ny, x0=grid.x0, y0=grid.y0,
                      hx=override_h, hy=override_h)
    return grid


def surface_from_json(doc: dict, H: int | None = None,
                      override_h: float | None = None) -> tuple[SurfaceData, str]:
    """Build SurfaceData from a schema document; omitted fields default to
    the specialization values (theta -> pi/2, phi -> 0, rho -> 0)."""
    grid = _grid_from_json(doc, override_h)
    shape = grid.shape
    hval = int(doc.get("H", H if H is not None else -1))
    if hval not in (1, -1):
        raise CliInputError("H must be +1 or -1")
    kind = doc.get("kind", "general")
    if kind not in surface2d.KINDS:
        raise CliInputError(f"kind must be one of {surface2d.KINDS}")
    u = _field(doc, "u", shape, default=0.0)
    theta = _field(doc, "theta", shape, default=0.5 * np.pi)
    phi = (_field(doc, "phi_re", shape, 0.0)
           + 1j * _field(doc, "phi_im", shape, 0.0))
    Q = (_field(doc, "Q_re", shape, 0.0)
         + 1j * _field(doc, "Q_im", shape, 0.0))
    rho = (_field(doc, "rho_re", shape, 0.0)
           + 1j * _field(doc, "rho_im", shape, 0.0))
    try:
        data = SurfaceData(sig=Signature(hval), grid=grid, u=u, theta=theta,
                           phi=phi, Q=Q, rho=rho)
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc
    return data, kind


def surface_to_json(data: SurfaceData, kind: str = "general") -> dict:
    g = data.grid
    return {
        "schema": SCHEMA,
        "H": data.sig.H,
        "kind": kind,
        "grid": {"nx": g.nx, "ny": g.ny, "x0": g.x0, "y0": g.y0,
                 "hx": g.hx, "hy": g.hy},
        "u": data.u,
        "theta": data.theta,
        "phi_re": data.phi.real, "phi_im": data.phi.imag,
        "Q_re": data.Q.real, "Q_im": data.Q.imag,
        "rho_re": data.rho.real, "rho_im": data.rho.imag,
    }


def _parse_lambdas(text: str | None):
    if not text:
        return surface2d.LAMBDA_SAMPLES
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace("i", "j")
        try:
            out.append(complex(tok))
        except ValueError as exc:
            raise CliInputError(f"bad lambda value {tok!r}") from exc
    return tuple(out)


# ---------------------------------------------------------------------------
# Pipeline pieces shared by the commands
# ---------------------------------------------------------------------------


def _run_pipeline(data: SurfaceData, kind: str):
    mc = surface2d.build_mc(data, kind)
    field = integrator.integrate_frame(mc)
    lift = integrator.extract_lift(field, data)
    rec, errors = integrator.round_trip(lift, data)
    return mc, field, lift, rec, errors


def _surface_rows(lift, data: SurfaceData) -> list[list[float]]:
    from .paracomplex import s2n_normalize

    xs, chis = s2n_normalize(lift.x, lift.chi)
    g = lift.grid
    rows = []
    for i in range(g.nx):
        for j in range(g.ny):
            rows.append([g.y1[i], g.y2[j], *xs[i, j], *chis[i, j],
                         float(data.u[i, j]), float(data.theta[i, j])])
    return rows


_CSV_HEADER = "y1,y2,x1,x2,x3,chi1,chi2,chi3,u,theta"


def _rows_to_csv(rows: list[list[float]]) -> str:
    lines = [_CSV_HEADER]
    for row in rows:
        lines.append(",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def _write_surface(path: str, rows: list[list[float]]) -> None:
    if path.endswith(".json"):
        _emit(canonical_json({"schema": SCHEMA, "columns": _CSV_HEADER.split(","),
                              "rows": rows}), path)
    else:
        _emit(_rows_to_csv(rows), path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    doc = _load_json(args.input)
    data, kind = surface_from_json(doc, H=args.H, override_h=args.grid_h)
    kind = args.kind or kind
    residuals = surface2d.compat_residuals(data, kind)
    ok = all(v < args.tol_flat for v in residuals.values())
    report = {
        "schema": SCHEMA, "command": "check", "kind": kind,
        "tolerance": args.tol_flat, "residuals": residuals, "pass": ok,
    }
    _emit(canonical_json(report), args.output)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_synthesize_minlag(args) -> int:
    doc = _load_json(args.input)
    data, _ = surface_from_json(doc, H=args.H, override_h=args.grid_h)
    g = data.grid
    try:
        u = surface2d.solve_tzitzeica(data.sig, g, data.Q, u_boundary=data.u)
    except (ValueError, surface2d.NewtonDivergenceError) as exc:
        raise CliInputError(f"elliptic solve failed: {exc}") from exc
    solved = SurfaceData(sig=data.sig, grid=g, u=u, theta=data.theta,
                         phi=data.phi, Q=data.Q, rho=data.rho)
    mc, field, lift, rec, errors = _run_pipeline(solved, "minlag")
    min_abs_q = float(np.min(np.abs(data.Q)))
    q_zeros = int(np.count_nonzero(np.abs(data.Q) < 1e-8))
    report = {
        "schema": SCHEMA, "command": "synthesize-minlag",
        "pde_residual": surface2d.compat_residuals(solved, "minlag")["tzitzeica"],
        "flatness": integrator.max_flatness(mc),
        "roundtrip_errors": errors,
        "min_abs_Q": min_abs_q,
        "q_zero_cells": q_zeros,
        "q_zero_locus_flagged": q_zeros > 0,
        "pass": max(errors.values()) < args.tol_rt,
    }
    if args.output:
        _write_surface(args.output, _surface_rows(lift, solved))
    _emit(canonical_json(report), args.report)
    return EXIT_OK if report["pass"] else EXIT_TOLERANCE


def cmd_integrate(args) -> int:
    doc = _load_json(args.input)
    data, kind = surface_from_json(doc, H=args.H, override_h=args.grid_h)
    kind = args.kind or kind
    mc, field, lift, rec, errors = _run_pipeline(data, kind)
    report = {
        "schema": SCHEMA, "command": "integrate", "kind": kind,
        "flatness": integrator.max_flatness(mc),
        "loop_disagreement": integrator.loop_disagreement(mc),
        "det_deviation": float(np.max(np.abs(np.linalg.det(field.F) - 1.0))),
        "reality_defect": integrator.reality_defect(field, data.sig),
        "roundtrip_errors": errors,
        "pass": integrator.max_flatness(mc) < args.tol_flat,
    }
    if args.output:
        _write_surface(args.output, _surface_rows(lift, data))
    _emit(canonical_json(report), args.report)
    return EXIT_OK if report["pass"] else EXIT_TOLERANCE


def cmd_verify(args) -> int:
    doc = _load_json(args.input)
    data, kind = surface_from_json(doc, H=args.H, override_h=args.grid_h)
    kind = args.kind or kind
    mc, field, lift, rec, errors = _run_pipeline(data, kind)
    lambdas = _parse_lambdas(args.lam)
    certs = {}
    for k in (6, 3, 2):
        cert = surface2d.primitive_check(mc, k, data.sig,
                                         lambda_samples=lambdas)
        certs[f"k{k}"] = {"residual": cert.residual, "pass": cert.passed}
    ok = max(errors.values()) < args.tol_rt
    report = {
        "schema": SCHEMA, "command": "verify", "kind": kind,
        "tolerance_roundtrip": args.tol_rt,
        "roundtrip_errors": errors,
        "flatness": integrator.max_flatness(mc),
        "loop_disagreement": integrator.loop_disagreement(mc),
        "invariants": integrator.lift_invariant_report(lift, data),
        "certificates": certs,
        "pass": ok,
    }
    _emit(canonical_json(report), args.output)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_gauss(args) -> int:
    doc = _load_json(args.input)
    data, kind = surface_from_json(doc, H=args.H, override_h=args.grid_h)
    kind = args.kind or kind
    mc = surface2d.build_mc(data, kind)
    field = integrator.integrate_frame(mc)
    sig = data.sig
    cert = gaussmaps.harmonicity_certificate(field.F, mc, args.k, sig)
    rngdev = {kind_: gaussmaps.stabilizer_invariance(kind_, sig, trials=args.trials)
              for kind_ in gaussmaps.KINDS}
    fields = {}
    for kind_ in gaussmaps.KINDS:
        m = gaussmaps.gauss_of_frame(field.F, kind_, sig)
        fields[kind_] = {"re": m.real, "im": m.imag}
    report = {
        "schema": SCHEMA, "command": "gauss", "k": args.k,
        "certificate": {"residual": cert.residual, "pass": cert.passed,
                        "trace_removed": cert.trace_removed},
        "stabilizer_invariance": rngdev,
        "diagram_check": gaussmaps.diagram_check(field.F, sig),
        "product_identities": gaussmaps.product_identities(sig),
        "fields": fields,
    }
    _emit(canonical_json(report), args.output)
    return EXIT_OK if cert.passed else EXIT_TOLERANCE


def cmd_eigen(args) -> int:
    doc = _load_json(args.input)
    hval = int(doc.get("H", args.H if args.H is not None else -1))
    if hval not in (1, -1):
        raise CliInputError("H must be +1 or -1")
    re = np.asarray(doc.get("re"), dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != (3, 3) or im.shape != (3, 3):
        raise CliInputError("matrix fields re/im must be 3x3")
    X = re + 1j * im
    sig = Signature(hval)
    if abs(np.trace(X)) > 1e-10:
        raise CliInputError("matrix must be trace-free")
    parts = liealg.eigenspace_decomposition(X, sig)
    masses = liealg.eigenspace_masses(X, sig)
    report = {
        "schema": SCHEMA, "command": "eigen", "H": hval,
        "eigenvalue_sign": liealg.eigenvalue_sign(sig),
        "masses": masses,
        "projections": [{"slot": j, "re": p.real, "im": p.imag}
                        for j, p in enumerate(parts)],
    }
    _emit(canonical_json(report), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parakahler",
        description="Surface pipeline: check, solve, integrate, verify, "
                    "and certify Gauss maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rt=False, lam=False):
        p.add_argument("--input", required=True, help="input JSON file")
        p.add_argument("--output", default=None,
                       help="output path ('-' for stdout)")
        p.add_argument("--tol-flat", dest="tol_flat", type=float, default=1e-8)
        if rt:
            p.add_argument("--tol-rt", dest="tol_rt", type=float, default=1e-5)
        p.add_argument("--kind", choices=surface2d.KINDS, default=None)
        p.add_argument("--H", type=int, choices=(1, -1), default=None)
        p.add_argument("--grid-h", dest="grid_h", type=float, default=None,
                       help="override the grid spacing, keeping the extent")
        if lam:
            p.add_argument("--lambda", dest="lam", default=None,
                           help="comma-separated deformation parameters")

    p = sub.add_parser("check", help="compatibility residual report")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize-minlag",
                       help="solve the structure equation and integrate")
    common(p, rt=True)
    p.add_argument("--report", default="-", help="report path")
    p.set_defaults(func=cmd_synthesize_minlag)

    p = sub.add_parser("integrate", help="frame integration and surface export")
    common(p, rt=True)
    p.add_argument("--report", default="-", help="report path")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("verify", help="round-trip verification report")
    common(p, rt=True, lam=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gauss", help="Gauss-map fields and certificates")
    common(p)
    p.add_argument("--k", type=int, choices=(6, 3, 2), default=6)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("eigen", help="eigenspace projections of a matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--H", type=int, choices=(1, -1), default=None)
    p.set_defaults(func=cmd_eigen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
