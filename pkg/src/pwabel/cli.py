"""Command-line interface: analyze, scan, curves, bounds, oracle."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import GEOMETRY_CHECKS, audit, khovanskii_bound, paper_bounds
from .errors import DegenerateCurve, IllConditioned, NoSignChange, PwAbelError, WindowTooSmall
from .flow import AbelEq, Tolerances
from .poincare import SearchConfig, find_cycles
from .trigpoly import TrigPoly, changes_sign, normalize

SCHEMA_VERSION = 1
EXIT_OK, EXIT_BAD_INPUT, EXIT_PARTIAL = 0, 2, 3
COEFF_NAMES = ("a0", "a1", "a2", "b0", "b1", "b2")


class BadInput(ValueError):
    pass


# --------------------------------------------------------------------------
# output


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def to_json(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits.

    Non-finite floats become null. Keys keep insertion order, so the text is
    deterministic for a deterministic object.
    """
    out = io.StringIO()

    def emit(o, level):
        pad = " " * (indent * level)
        inner = " " * (indent * (level + 1))
        if o is None:
            out.write("null")
        elif isinstance(o, (bool, np.bool_)):
            out.write("true" if o else "false")
        elif isinstance(o, (int, np.integer)):
            out.write(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.write(fmt_float(o) if math.isfinite(o) else "null")
        elif isinstance(o, str):
            out.write(json.dumps(o))
        elif isinstance(o, dict):
            if not o:
                out.write("{}")
                return
            out.write("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.write(f"{inner}{json.dumps(str(k))}: ")
                emit(v, level + 1)
                out.write(",\n" if i < len(o) - 1 else "\n")
            out.write(pad + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                out.write("[]")
                return
            out.write("[\n")
            for i, v in enumerate(o):
                out.write(inner)
                emit(v, level + 1)
                out.write(",\n" if i < len(o) - 1 else "\n")
            out.write(pad + "]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    out.write("\n")
    return out.getvalue()


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# input parsing


def parse_triple(text: str, name: str, n: int = 3) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise BadInput(f"--{name}: expected {n} comma-separated numbers, got {text!r}")
    if len(vals) != n:
        raise BadInput(f"--{name}: expected {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise BadInput(f"--{name}: coefficients must be finite")
    return vals


def parse_tol(text: Optional[str]) -> Tolerances:
    if not text:
        return Tolerances()
    parts = text.split(",")
    try:
        rtol, atol = float(parts[0]), float(parts[1]) if len(parts) > 1 else float(parts[0])
    except (ValueError, IndexError):
        raise BadInput(f"--tol: expected REL,ABS, got {text!r}")
    if not (0 < rtol < 1 and 0 < atol < 1):
        raise BadInput("--tol: tolerances must lie in (0, 1)")
    return Tolerances(rtol, atol, min(atol, 1e-12))


def equation_from_args(a: Optional[str], b: Optional[str], normalized: bool = False) -> AbelEq:
    if a is None or b is None:
        raise BadInput("both --a and --b are required")
    ac = parse_triple(a, "a")
    if normalized:
        (b0,) = parse_triple(b, "b", 1)
        return AbelEq(TrigPoly(*ac), TrigPoly(b0, 0.0 - b0, 1.0))
    return AbelEq(TrigPoly(*ac), TrigPoly(*parse_triple(b, "b")))


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple


def parse_grid(spec: str) -> list[Axis]:
    """``a0=-1:1:3;b0=0`` style: NAME=LO:HI:N (N points) or NAME=v1,v2,...

    Axes are separated by ';' or whitespace.
    """
    axes = []
    for item in spec.replace(";", " ").split():
        if "=" not in item:
            raise BadInput(f"--grid: bad axis {item!r}")
        name, rng = item.split("=", 1)
        name = name.strip()
        if name not in COEFF_NAMES:
            raise BadInput(f"--grid: unknown coefficient {name!r}")
        if any(ax.name == name for ax in axes):
            raise BadInput(f"--grid: {name} given twice")
        try:
            if ":" in rng:
                lo, hi, n = rng.split(":")
                n = int(n)
                if n < 1:
                    raise ValueError
                vals = tuple(np.linspace(float(lo), float(hi), n).tolist())
            else:
                vals = tuple(float(v) for v in rng.split(","))
        except ValueError:
            raise BadInput(f"--grid: bad range {rng!r} for {name}")
        if not all(math.isfinite(v) for v in vals):
            raise BadInput(f"--grid: non-finite value for {name}")
        axes.append(Axis(name, vals))
    if not axes:
        raise BadInput("--grid: empty specification")
    return axes


def grid_cells(axes: list[Axis], base: Sequence[float]) -> list[tuple]:
    """Coefficient 6-tuples in row-major order of the axes as given."""
    idx = {n: i for i, n in enumerate(COEFF_NAMES)}
    cells = []
    for combo in itertools.product(*(ax.values for ax in axes)):
        c = list(base)
        for ax, v in zip(axes, combo):
            c[idx[ax.name]] = v
        cells.append(tuple(c))
    return cells


# --------------------------------------------------------------------------
# analysis


def _geometry(eq: AbelEq, components_grid: int = 512):
    """Tangency points, h = m = 0 points and m = 0 component count of the
    normalized equation, or the reason they are unavailable."""
    from .curves import count_components_m, h_m_intersections, solve_tangency

    nf = normalize(eq.a, eq.b)
    eqn = AbelEq(nf.a, nf.b)
    out = {"tangency": None, "components": None, "hm": None, "notes": [], "partial": False}
    if eqn.a0 == 0.0:
        out["notes"].append("a0 = 0: the curve ratios a1/a0, a2/a0 are undefined")
        return out
    try:
        tr = solve_tangency(eqn)
        out["tangency"] = tr
        out["partial"] = tr.partial
    except (DegenerateCurve, IllConditioned) as exc:
        out["notes"].append(f"tangency: {exc}")
        if isinstance(exc, IllConditioned):
            out["partial"] = True
    try:
        out["components"] = count_components_m(eqn, components_grid)
    except DegenerateCurve as exc:
        out["notes"].append(f"components: {exc}")
    try:
        out["hm"] = len(h_m_intersections(eqn))
    except PwAbelError as exc:
        out["notes"].append(f"h=m=0: {exc}")
    return out


def analyze_equation(eq: AbelEq, tol: Tolerances = Tolerances(), search_grid: int = 512,
                     geometry: bool = True) -> dict:
    """Full report for one equation as plain data."""
    cfg = SearchConfig(grid=search_grid, tol=tol)
    rep = find_cycles(eq, cfg)
    norm = None
    geo = None
    if changes_sign(eq.b):
        nf = normalize(eq.a, eq.b)
        norm = {"a": list(nf.a.as_tuple()), "b0": nf.b0, "time_shift": nf.time_shift,
                "x_scale": nf.x_scale, "tbar": nf.tbar}
        if geometry and rep.kind != "center":
            geo = _geometry(eq)
    tr = geo["tangency"] if geo else None
    tangency_square = tr.count_square if tr is not None else None
    components = geo["components"] if geo else None
    hm = geo["hm"] if geo else None
    generic = bool(tr.generic) if tr is not None else True
    verdict = audit(rep, tangency_square, components, hm, generic)
    partial = bool(rep.unresolved) or bool(geo and geo["partial"])
    cyc = [c.to_dict() for c in rep.cycles]
    return {
        "schema_version": SCHEMA_VERSION,
        "input": {"a": list(eq.a.as_tuple()), "b": list(eq.b.as_tuple())},
        "normalization": norm,
        "center": rep.center_class.to_dict() if rep.center_class is not None else None,
        "cycles": {
            "kind": rep.kind,
            "count": len(rep.cycles),
            "sign_changing": rep.n_sign_changing,
            "constant_sign": rep.n_constant_sign,
            "suspected_center": rep.suspected_center,
            "list": cyc,
            "unresolved": [list(u) if isinstance(u, (list, tuple)) else u for u in rep.unresolved],
        },
        "tangency": None if tr is None else {
            "count_region": tr.count,
            "count_square": tr.count_square,
            "resultant_degree": tr.resultant_degree,
            "spurious_multiplicity": tr.spurious_multiplicity,
            "generic": tr.generic,
            "points": [p.to_dict() for p in tr.all_points],
            "notes": list(tr.notes),
        },
        "hm_count": hm,
        "components": components,
        "bounds": paper_bounds().to_dict(),
        "audit": verdict.to_dict(),
        "diagnostics": _plain(rep.diagnostics) | {"geometry_notes": list(geo["notes"]) if geo else []},
        "partial": partial,
    }


def _plain(d):
    if isinstance(d, dict):
        return {str(k): _plain(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_plain(v) for v in d]
    if isinstance(d, np.ndarray):
        return _plain(d.tolist())
    if isinstance(d, np.generic):
        return d.item()
    return d


# --------------------------------------------------------------------------
# scan

SCAN_COLUMNS = ("cell",) + COEFF_NAMES + (
    "status", "center", "cycles", "sign_changing", "constant_sign", "tangency_region",
    "tangency_square", "hm", "components", "audit", "violations", "geometry_flags", "error")


def _cell_row(job) -> dict:
    i, coeffs, tol, search_grid, timing = job
    row = {"cell": i, **dict(zip(COEFF_NAMES, coeffs))}
    t0 = time.perf_counter()
    try:
        eq = AbelEq(TrigPoly(*coeffs[:3]), TrigPoly(*coeffs[3:]))
        r = analyze_equation(eq, tol, search_grid)
        checks = r["audit"]["checks"]
        # geometry claims are recorded apart from the cycle bounds
        cyc_bad = [c["name"] for c in checks if not c["ok"] and c["name"] not in GEOMETRY_CHECKS]
        geo_bad = [c["name"] for c in checks if not c["ok"] and c["name"] in GEOMETRY_CHECKS]
        row.update(
            status="partial" if r["partial"] else "ok",
            center=r["center"]["kind"] if r["center"] else "",
            cycles=r["cycles"]["count"] if r["cycles"]["kind"] != "center" else "",
            sign_changing=r["cycles"]["sign_changing"],
            constant_sign=r["cycles"]["constant_sign"],
            tangency_region=r["tangency"]["count_region"] if r["tangency"] else "",
            tangency_square=r["tangency"]["count_square"] if r["tangency"] else "",
            hm="" if r["hm_count"] is None else r["hm_count"],
            components="" if r["components"] is None else r["components"],
            audit="VIOLATION" if cyc_bad else "pass",
            violations="; ".join(cyc_bad),
            geometry_flags="; ".join(geo_bad),
            error="",
        )
    except Exception as exc:  # a failed cell must not abort the sweep
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    if timing:
        row["wall_time"] = time.perf_counter() - t0
    return row


def _csv_value(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    return "" if v is None else str(v)


def scan_rows(cells: list[tuple], tol: Tolerances = Tolerances(), search_grid: int = 512,
              jobs: int = 1, timing: bool = False) -> list[dict]:
    jobs_ = [(i, c, tol, search_grid, timing) for i, c in enumerate(cells)]
    if jobs <= 1:
        return [_cell_row(j) for j in jobs_]
    # chunksize 1: idle workers pull the next cell; map keeps cell order
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_cell_row, jobs_, chunksize=1))


def rows_to_csv(rows: list[dict], timing: bool = False) -> str:
    cols = SCAN_COLUMNS + (("wall_time",) if timing else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")  # RFC 4180
    w.writerow(cols)
    for r in rows:
        w.writerow([_csv_value(r.get(c, "")) for c in cols])
    return buf.getvalue()


# --------------------------------------------------------------------------
# curves export


def curves_rows(eq: AbelEq, resolution: int = 256) -> list[tuple]:
    """(kind, id, t, x, m_residual, g_residual, h_value, region) rows for the
    h = 0 branch, each m = 0 polyline and each tangency point, in the
    normalized coordinates."""
    from .curves import h_zero_branch_vec, m_zero_polylines, solve_tangency

    nf = normalize(eq.a, eq.b)
    eqn = AbelEq(nf.a, nf.b)
    rows = []
    z1 = np.linspace(nf.tbar, nf.tbar + 2 * math.pi, resolution + 2)[1:-1]
    z2 = h_zero_branch_vec(eqn, z1)
    for u, v in zip(z1, z2):
        rows.append(("h_zero", 0, 0.5 * (u - v), 0.5 * (u + v), "", "", "", ""))
    for k, line in enumerate(m_zero_polylines(eqn, resolution)):
        for t, x in line:
            rows.append(("m_zero", k, float(t), float(x), "", "", "", ""))
    try:
        tr = solve_tangency(eqn)
        for k, p in enumerate(tr.all_points):
            rows.append(("tangency", k, p.t, p.x, p.m_residual, p.g_residual, p.h_value, p.region))
    except DegenerateCurve:
        pass
    return rows


# --------------------------------------------------------------------------
# entry points


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwabel", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def coeffs(sp, required=True):
        sp.add_argument("--a", required=required, help="a0,a1,a2")
        sp.add_argument("--b", required=required, help="b0,b1,b2 (or b0 with --normalized)")
        sp.add_argument("--normalized", action="store_true",
                        help="b is sin t + b0 (1 - cos t), given by b0 alone")
        sp.add_argument("--tol", help="REL,ABS integration tolerances")

    sp = sub.add_parser("analyze", help="cycles, centers, geometry and audit for one equation")
    coeffs(sp)
    sp.add_argument("--search-grid", type=int, default=512)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json",), default="json")

    sp = sub.add_parser("scan", help="sweep a coefficient grid, one CSV row per cell")
    coeffs(sp, required=False)
    sp.add_argument("--grid", required=True, help="e.g. 'a0=-1:1:3;b0=-1,0,1'")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--search-grid", type=int, default=512)
    sp.add_argument("--timing", action="store_true", help="add a wall_time column")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv",), default="csv")

    sp = sub.add_parser("curves", help="export h = 0, m = 0 and tangency points as CSV")
    coeffs(sp)
    sp.add_argument("--resolution", type=int, default=256)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv",), default="csv")

    sp = sub.add_parser("bounds", help="the explicit bound values")
    sp.add_argument("--khovanskii", help="n;m1,..,mn;k;rho to evaluate the formula")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json",), default="json")

    sp = sub.add_parser("oracle", help="brute-force cycle count by direct displacement sampling")
    coeffs(sp)
    sp.add_argument("--grid", type=int, default=4096, help="number of sample points")
    sp.add_argument("--window", help="LO,HI initial-value window")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json",), default="json")
    return p


def _cmd_analyze(args) -> int:
    eq = equation_from_args(args.a, args.b, args.normalized)
    if args.search_grid < 8:
        raise BadInput("--search-grid must be at least 8")
    rep = analyze_equation(eq, parse_tol(args.tol), args.search_grid)
    _write(to_json(rep), args.out)
    return EXIT_PARTIAL if rep["partial"] else EXIT_OK


def _cmd_scan(args) -> int:
    base = [0.0] * 6
    if args.a:
        base[:3] = parse_triple(args.a, "a")
    if args.b:
        if args.normalized:
            (b0,) = parse_triple(args.b, "b", 1)
            base[3:] = [b0, 0.0 - b0, 1.0]
        else:
            base[3:] = parse_triple(args.b, "b")
    if args.jobs < 1:
        raise BadInput("--jobs must be positive")
    cells = grid_cells(parse_grid(args.grid), base)
    rows = scan_rows(cells, parse_tol(args.tol), args.search_grid, args.jobs, args.timing)
    _write(rows_to_csv(rows, args.timing), args.out)
    return EXIT_OK


def _cmd_curves(args) -> int:
    eq = equation_from_args(args.a, args.b, args.normalized)
    if not changes_sign(eq.b):
        raise BadInput("curves need b(t) to change sign")
    rows = curves_rows(eq, args.resolution)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("kind", "id", "t", "x", "m_residual", "g_residual", "h_value", "region"))
    for r in rows:
        w.writerow([_csv_value(v) for v in r])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    out = {"schema_version": SCHEMA_VERSION, "bounds": paper_bounds().to_dict()}
    if args.khovanskii:
        try:
            n, degs, k, rho = args.khovanskii.split(";")
            degs = [int(d) for d in degs.split(",")]
            out["khovanskii"] = khovanskii_bound(int(n), degs, int(k), int(rho))
        except ValueError as exc:
            raise BadInput(f"--khovanskii: {exc}")
    _write(to_json(out), args.out)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .oracle import brute_count

    eq = equation_from_args(args.a, args.b, args.normalized)
    window = parse_triple(args.window, "window", 2) if args.window else None
    try:
        r = brute_count(eq, x_window=window, grid=args.grid)
    except WindowTooSmall as exc:
        raise BadInput(f"--window: {exc}")
    _write(to_json({"schema_version": SCHEMA_VERSION, **r.to_dict()}), args.out)
    return EXIT_OK


def _glue_values(argv: Sequence[str]) -> list[str]:
    """Turn ``--a -1,0,0`` into ``--a=-1,0,0`` so negative values parse."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--a", "--b", "--tol", "--window", "--grid"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and not nxt.startswith("--"):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_glue_values(argv))
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    cmd = {"analyze": _cmd_analyze, "scan": _cmd_scan, "curves": _cmd_curves,
           "bounds": _cmd_bounds, "oracle": _cmd_oracle}[args.cmd]
    try:
        return cmd(args)
    except (BadInput, NoSignChange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except PwAbelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
