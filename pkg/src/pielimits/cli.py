"""Command-line interface: ``pielimits <command> [options]``.

Exit codes: 0 success, 1 usage or validation error, 2 numeric domain error
(or a sweep with failed cells), 3 bound certification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, InfeasibleError, PieError
from .link import (
    LinkGeometry,
    design_variable_bandwidth,
    information_rate,
)
from .model import (
    ModulationFormat,
    OperatingPoint,
    photocount_probabilities,
    pie_approx_lambert,
    pie_bound,
    pie_bound_ns,
)
from .optimize import (
    CellError,
    PieResult,
    check_axis,
    default_axis,
    optimize_format_order,
    optimize_vanishing_signal,
    sweep,
)
from .oracle import ChannelSpec, certify_bound_ns, exact_mutual_information
from .scenario import Scenario, ScenarioError, parse_range

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_CERTIFY = 3

SWEEP_COLUMNS = ("n_a", "n_b", "pie_bits_per_photon", "m_star", "log2_m_star",
                 "n_s_star", "converged")
PANELS = {
    "pie_star": ("pie_bits_per_photon", "pie_star"),
    "n_s_star": ("n_s_star", "n_s_star"),
    "log2_m_star": ("log2_m_star", "log2_m_star"),
}

log = logging.getLogger("pielimits")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    """Shortest round-trip representation for data files."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def parse_axis(text: str) -> tuple[float, ...]:
    """Axis from ``"a,b,c"`` or log-spaced ``"start:stop:num"``."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            values = np.geomspace(float(start), float(stop), int(num)).tolist()
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse axis {text!r}") from None
    try:
        return check_axis("axis", values)
    except DomainError as exc:
        raise UsageError(f"{exc}: {text!r}") from None


class Output:
    """Where rendered text goes, plus the --json/--quiet switches."""

    def __init__(self, args):
        self.json = args.json
        self.quiet = args.quiet
        self.path = args.output
        self.chunks: list[str] = []

    def emit(self, text: str) -> None:
        self.chunks.append(text if text.endswith("\n") else text + "\n")

    def emit_json(self, obj) -> None:
        self.emit(json.dumps(obj, indent=2, allow_nan=False))

    def note(self, text: str) -> None:
        if not self.quiet:
            print(text, file=sys.stderr)

    def flush(self) -> None:
        text = "".join(self.chunks)
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_bound(args, out: Output) -> int:
    if args.m < 1:
        raise UsageError("--m must be >= 1")
    if args.ns is not None:
        n_s = args.ns
        pie = pie_bound_ns(n_s, args.nb, args.m)
    else:
        if args.na <= 0:
            raise UsageError("--na must be > 0")
        point = OperatingPoint(args.na, args.nb)
        fmt = ModulationFormat.from_point(point, args.m)
        n_s = fmt.n_s
        pie = pie_bound(point, fmt)
    p_c, p_b = photocount_probabilities(n_s, args.nb)
    if out.json:
        out.emit_json({"pie_bits_per_photon": pie, "p_c": p_c, "p_b": p_b,
                       "n_s": n_s, "n_b": args.nb, "m": args.m})
    else:
        out.emit(f"PIE bound     {pie:.10g} bits/photon\n"
                 f"n_s           {n_s:.10g}\n"
                 f"p_c           {p_c:.10g}\n"
                 f"p_b           {p_b:.10g}")
    return EXIT_OK


def _result_dict(result: PieResult) -> dict:
    data = {
        "n_a": result.n_a,
        "n_b": result.n_b,
        "pie_bits_per_photon": result.pie_star,
        "m_star": result.m_star,
        "log2_m_star": result.log2_m_star,
        "n_s_star": result.n_s_star,
        "converged": result.converged,
        "capped": result.capped,
        "evaluations": result.evaluations,
    }
    if result.m_continuous is not None:
        data["m_continuous"] = result.m_continuous
    return data


def cmd_optimize(args, out: Output) -> int:
    if not args.na > 0:
        raise UsageError("--na must be > 0 (use `limit` for n_a -> 0)")
    if args.m_cap is not None and args.m_cap < 1:
        raise UsageError("--m-cap must be >= 1")
    result = optimize_format_order(OperatingPoint(args.na, args.nb), args.m_cap,
                                   continuous=args.continuous)
    if out.json:
        out.emit_json(_result_dict(result))
    else:
        lines = [
            f"PIE*          {result.pie_star:.10g} bits/photon",
            f"M*            {result.m_star}",
            f"log2 M*       {result.log2_m_star:.10g}",
            f"n_s*          {result.n_s_star:.10g}",
            f"converged     {_fmt(result.converged)}",
            f"capped        {_fmt(result.capped)}",
        ]
        if result.m_continuous is not None:
            lines.append(f"M (real)      {result.m_continuous:.10g}")
        out.emit("\n".join(lines))
    if result.capped:
        out.note(f"warning: M cap {args.m_cap} binds; unconstrained optimum is larger")
    if not result.converged:
        out.note("warning: overflow guard on M reached; result is best found")
    return EXIT_OK


def cmd_limit(args, out: Output) -> int:
    if not args.nb > 0 or not math.isfinite(args.nb):
        raise UsageError("--nb must be finite and > 0")
    data = {"n_b": args.nb}
    if not args.approx:
        opt = optimize_vanishing_signal(args.nb)
        data["pie_bits_per_photon"] = opt.pie_star
        data["n_s_star"] = opt.n_s_star
    if args.approx or args.both:
        approx = pie_approx_lambert(args.nb)
        data["approx_bits_per_photon"] = approx
        if args.nb >= 2.0 / math.e:
            out.note("warning: n_b >= 2/e, where the approximation turns back up "
                     "with noise; it holds only for n_b << 1")
    if args.both:
        data["relative_gap"] = (abs(data["approx_bits_per_photon"] - opt.pie_star)
                                / opt.pie_star)

    if out.json:
        out.emit_json(data)
    elif args.approx:
        out.emit(f"{data['approx_bits_per_photon']:.10g}")
    elif args.both:
        out.emit(f"numerical     {opt.pie_star:.10g} bits/photon (n_s* = {opt.n_s_star:.6g})\n"
                 f"approximation {data['approx_bits_per_photon']:.10g} bits/photon\n"
                 f"relative gap  {data['relative_gap']:.6g}")
    else:
        out.emit(f"{opt.pie_star:.10g}")
    return EXIT_OK


def _sweep_rows(grid):
    for n_a, n_b, cell in grid.iter_cells():
        if isinstance(cell, CellError):
            yield [n_a, n_b, "", "", "", "", False], cell.message
        else:
            yield [n_a, n_b, cell.pie_star, cell.m_star, cell.log2_m_star,
                   cell.n_s_star, cell.converged], ""


def write_sweep_csv(grid, path: Path) -> list[Path]:
    """Long-format table plus one matrix file per result field."""
    failed = bool(grid.failures)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS + (("error",) if failed else ()))
    for row, err in _sweep_rows(grid):
        cells = [_fmt(v) for v in row]
        writer.writerow(cells + [err] if failed else cells)
    path.write_text(buf.getvalue())
    written = [path]

    for suffix, (label, field) in PANELS.items():
        panel = grid.panel(field)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"{label} (rows n_a, cols n_b)"] + [_fmt(v) for v in grid.n_b_axis])
        for n_a, row in zip(grid.n_a_axis, panel):
            writer.writerow([_fmt(n_a)] + ["" if math.isnan(v) else _fmt(float(v))
                                           for v in row])
        panel_path = path.with_name(f"{path.stem}_{suffix}{path.suffix}")
        panel_path.write_text(buf.getvalue())
        written.append(panel_path)
    return written


def sweep_to_json(grid) -> dict:
    def matrix(field):
        return [[None if isinstance(c, CellError) else getattr(c, field) for c in row]
                for row in grid.cells]

    return {
        "n_a_axis": list(grid.n_a_axis),
        "n_b_axis": list(grid.n_b_axis),
        "pie_bits_per_photon": matrix("pie_star"),
        "m_star": matrix("m_star"),
        "log2_m_star": matrix("log2_m_star"),
        "n_s_star": matrix("n_s_star"),
        "converged": matrix("converged"),
        "errors": [{"i_a": i, "i_b": j, "message": e.message}
                   for i, j, e in grid.failures],
    }


def cmd_sweep(args, out: Output) -> int:
    scenario = Scenario.load(args.scenario) if args.scenario else None
    if args.na_axis:
        a_axis = parse_axis(args.na_axis)
    elif scenario and scenario.n_a_axis:
        a_axis = parse_axis(",".join(map(repr, scenario.n_a_axis)))
    else:
        a_axis = tuple(default_axis())
    if args.nb_axis:
        b_axis = parse_axis(args.nb_axis)
    elif scenario and scenario.n_b_axis:
        b_axis = parse_axis(",".join(map(repr, scenario.n_b_axis)))
    else:
        b_axis = tuple(default_axis())
    m_cap = args.m_cap if args.m_cap is not None else (scenario.m_cap if scenario else None)

    grid = sweep(a_axis, b_axis, m_cap=m_cap, workers=args.workers)
    as_json = out.json or (scenario is not None and scenario.output_format == "json")
    path = Path(out.path or ("sweep.json" if as_json else "sweep.csv"))
    if as_json:
        path.write_text(json.dumps(sweep_to_json(grid), indent=2, allow_nan=False) + "\n")
        written = [path]
    else:
        written = write_sweep_csv(grid, path)
    out.path = None  # files already written; summary goes to stdout
    failures = grid.failures
    if not out.quiet:
        out.emit(f"{grid.shape[0]}x{grid.shape[1]} cells, {len(failures)} failed")
        for p in written:
            out.emit(f"wrote {p}")
    return EXIT_DOMAIN if failures else EXIT_OK


def _analysis_dict(geom: LinkGeometry, analysis) -> dict:
    return {
        "range_m": geom.r,
        "bandwidth_hz": geom.bandwidth,
        "eta_ch": analysis.eta_ch,
        "n_a": analysis.n_a,
        "n_b": analysis.n_b,
        "pie_bits_per_photon": analysis.pie_star,
        "m_star": analysis.m_star,
        "log2_m_star": math.log2(analysis.m_star),
        "n_s_star": analysis.n_s_star,
        "t_s_star_s": analysis.t_s_star,
        "rate_bps": analysis.rate,
        "background_counts_per_frame": analysis.background_counts_per_frame,
        "coherent_pie_bits_per_photon": analysis.coherent_pie,
        "coherent_rate_bps": analysis.coherent_rate,
        "near_field": analysis.near_field,
        "converged": analysis.converged,
        "capped": analysis.capped,
        "within_coherence_time": analysis.within_coherence_time,
    }


def cmd_link(args, out: Output) -> int:
    scenario = Scenario.load(args.scenario)
    n_b = scenario.n_b if args.nb is None else args.nb
    geom = scenario.geometry
    base = information_rate(geom, n_b, scenario.m_cap, scenario.coherence_time_s)
    report = _analysis_dict(geom, base)

    table = []
    if args.range_axis:
        try:
            ranges = [parse_range(r) for r in args.range_axis.split(",")]
        except ScenarioError as exc:
            raise UsageError(str(exc)) from None
        for r in ranges:
            if args.fix_na:
                g, a = design_variable_bandwidth(geom, base.n_a, n_b, r,
                                                 m_cap=scenario.m_cap)
            else:
                g = geom.replace(r=r)
                a = information_rate(g, n_b, scenario.m_cap)
            table.append(_analysis_dict(g, a))
        first = table[0]["rate_bps"]
        for row in table:
            row["rate_ratio"] = row["rate_bps"] / first
    elif args.fix_na:
        raise UsageError("--fix-na needs --range-axis")

    if out.json:
        out.emit_json({"link": report, "range_sweep": table})
        return EXIT_OK

    lines = [
        f"# pielimits {__version__} link report",
        f"channel transmission      {base.eta_ch:.6g}",
        f"n_a (signal/slot)         {base.n_a:.6g}",
        f"n_b (background/slot)     {base.n_b:.6g}",
        f"PIE*                      {base.pie_star:.6g} bits/photon",
        f"M*                        {base.m_star} (log2 = {math.log2(base.m_star):.4g})",
        f"n_s*                      {base.n_s_star:.6g}",
        f"t_s*                      {base.t_s_star:.6g} s",
        f"information rate          {base.rate:.6g} bit/s",
        f"background counts/frame   {base.background_counts_per_frame:.6g}",
        f"coherent-detection PIE    {base.coherent_pie:.6g} bits/photon",
        f"coherent-detection rate   {base.coherent_rate:.6g} bit/s",
    ]
    if base.within_coherence_time is not None:
        lines.append(f"t_s* < coherence time     {_fmt(base.within_coherence_time)}")
    if base.near_field:
        lines.append("warning: channel transmission > 1 (near-field geometry)")
    if table:
        lines.append("")
        lines.append("range_m,bandwidth_hz,n_a,m_star,pie_bits_per_photon,rate_bps,rate_ratio")
        for row in table:
            lines.append(",".join(_fmt(row[k]) for k in (
                "range_m", "bandwidth_hz", "n_a", "m_star", "pie_bits_per_photon",
                "rate_bps", "rate_ratio")))
    out.emit("\n".join(lines))
    return EXIT_OK


def cmd_certify(args, out: Output) -> int:
    if args.m < 1:
        raise UsageError("--m must be >= 1")
    if args.ns < 0 or args.nb < 0:
        raise UsageError("--ns and --nb must be >= 0")
    note = None
    if args.ns == 0:
        exact = exact_mutual_information(ChannelSpec.from_photons(args.m, 0.0, args.nb))
        bound = margin = None
        note = "bound requires n_s > 0; exact mutual information only"
    else:
        cert = certify_bound_ns(args.ns, args.nb, args.m)
        exact, bound, margin = cert.exact_bits, cert.bound_bits, cert.margin_bits
    ok = margin is None or margin >= -1e-10

    if out.json:
        data = {"n_s": args.ns, "n_b": args.nb, "m": args.m, "bound_bits": bound,
                "exact_bits": exact, "margin_bits": margin, "holds": ok}
        if note:
            data["note"] = note
        out.emit_json(data)
    else:
        lines = []
        if bound is not None:
            lines.append(f"bound (n_s*PIE)   {bound:.12g} bits/symbol")
        lines.append(f"exact MI          {exact:.12g} bits/symbol")
        if margin is not None:
            lines.append(f"margin            {margin:.6g} bits/symbol")
        if note:
            lines.append(f"note: {note}")
        out.emit("\n".join(lines))
    if not ok:
        out.note("certification FAILED: bound exceeds exact mutual information")
        return EXIT_CERTIFY
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable JSON output")
    common.add_argument("--output", metavar="PATH", default=argparse.SUPPRESS,
                        help="write output to PATH instead of stdout")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress notes and warnings")

    parser = _Parser(prog="pielimits", parents=[common],
                     description="Photon information efficiency limits of "
                                 "background-limited photon-counting links.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bound", parents=[common], help="PIE bound for a given format")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ns", type=float, help="photons per symbol")
    group.add_argument("--na", type=float, help="signal photons per slot")
    p.add_argument("--nb", type=float, required=True, help="background photons per slot")
    p.add_argument("--m", type=int, required=True, help="format order M")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("optimize", parents=[common], help="optimise M at (n_a, n_b)")
    p.add_argument("--na", type=float, required=True)
    p.add_argument("--nb", type=float, required=True)
    p.add_argument("--m-cap", type=int, default=None, help="upper limit on M")
    p.add_argument("--continuous", action="store_true",
                   help="also report the real-valued optimum of M")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("limit", parents=[common], help="vanishing-signal PIE limit")
    p.add_argument("--nb", type=float, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--approx", action="store_true", help="Lambert-W approximation only")
    mode.add_argument("--both", action="store_true", help="numerical, approximation and gap")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("sweep", parents=[common], help="optimise over an (n_a, n_b) grid")
    p.add_argument("--scenario", metavar="FILE", help="scenario file with sweep axes")
    p.add_argument("--na-axis", help="'a,b,c' or log-spaced 'start:stop:num' "
                                     "(default 1e-8:1:50)")
    p.add_argument("--nb-axis", help="as --na-axis")
    p.add_argument("--m-cap", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("link", parents=[common], help="full link budget from a scenario")
    p.add_argument("scenario", metavar="FILE")
    p.add_argument("--nb", type=float, default=None, help="override scenario n_b")
    p.add_argument("--range-axis", help="comma-separated ranges, e.g. 1AU,2AU,4AU")
    p.add_argument("--fix-na", action="store_true",
                   help="rescale bandwidth to hold n_a fixed across --range-axis")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("certify", parents=[common],
                       help="compare the bound against exact mutual information")
    p.add_argument("--ns", type=float, required=True)
    p.add_argument("--nb", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code
    for name, default in (("json", False), ("output", None), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    out = Output(args)
    try:
        code = args.func(args, out)
    except (UsageError, ScenarioError) as exc:
        print(f"pielimits {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, InfeasibleError, ArithmeticError, PieError) as exc:
        print(f"pielimits {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
