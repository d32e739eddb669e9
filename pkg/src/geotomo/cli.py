"""Command-line interface.

Exit codes: 0 success, 2 rejected parameters, 3 numerical non-convergence,
4 pipeline failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import platform
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import (
    Ball,
    ConvexBody,
    PerturbedBody,
    TabulatedBody,
    check_convexity,
    direction,
    make_counterexample_body,
    superellipse_body,
    support_halfwidth,
    volume,
)
from .buspetty import (
    build_counterexample,
    check_condition,
    default_threads,
    positive_verify,
    scan_counterexample,
)
from .errors import ConvergenceError, DomainError, PipelineError, PreconditionError
from .fourier import axisym_homogeneous_ft, frac_laplacian_grid
from .fracderiv import cos_profile, exp_profile, frac_deriv_at_zero, integer_deriv_at_zero
from .sections import SectionProfile
from .svgplot import line_chart

EXIT_OK, EXIT_DOMAIN, EXIT_CONVERGENCE, EXIT_PIPELINE, EXIT_USAGE = 0, 2, 3, 4, 64

log = logging.getLogger("geotomo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ------------------------------------------------------------ formatting


def fmt(x) -> str:
    return f"{float(x):.12g}"


def _round(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


def to_json(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def to_csv(header: list, rows: list, comments: list | None = None) -> str:
    buf = io.StringIO()
    for c in comments or []:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ------------------------------------------------------------ body specs


def _parse_pairs(tokens) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise DomainError(f"body spec token {tok!r} is not key=value")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _num(d: dict, key: str, default=None, cast=float):
    if key not in d:
        if default is None:
            raise DomainError(f"body spec needs {key}=")
        return default
    try:
        return cast(d[key])
    except ValueError:
        raise DomainError(f"body spec value {key}={d[key]!r} is not a number") from None


def parse_body_spec(text: str, base_dir: Path | None = None) -> ConvexBody:
    """Build a body from ``kind:...`` shorthand, ``key=value`` tokens or ``@file``."""
    text = text.strip()
    base_dir = base_dir or Path.cwd()
    if text.startswith("@"):
        path = (base_dir / text[1:]).resolve()
        return parse_body_spec(_read_spec_file(path), path.parent)
    if "=" not in text.split(":", 1)[0] and ":" in text:
        head, *rest = text.split(":")
        fields = {"kind": head}
        for tok in rest:
            if "=" in tok:
                fields.update(_parse_pairs([tok]))
            elif head == "ball":
                fields["radius"] = tok
            elif head == "tabulated":
                fields["file"] = tok
            else:
                raise DomainError(f"unexpected positional value {tok!r} in body spec")
    else:
        fields = _parse_pairs(text.replace(",", " ").split())
    kind = fields.get("kind")
    if kind == "ball":
        return Ball(_num(fields, "n", cast=int), _num(fields, "radius", 1.0))
    if kind == "profile":
        return make_counterexample_body(_num(fields, "n", cast=int), _num(fields, "p"), _num(fields, "N"))
    if kind == "superellipse":
        return superellipse_body(
            _num(fields, "n", cast=int), _num(fields, "a", 1.0), _num(fields, "b", 1.0), _num(fields, "r", 2.0), _num(fields, "s", 1.0)
        )
    if kind == "tabulated":
        if "file" not in fields:
            raise DomainError("tabulated body spec needs file=")
        return TabulatedBody.from_csv(base_dir / fields["file"], _num(fields, "n", cast=int))
    if kind == "perturbed":
        from .buspetty import bump_expansion

        if "base" not in fields:
            raise DomainError("perturbed body spec needs base=")
        base_path = (base_dir / fields["base"]).resolve()
        base = parse_body_spec(_read_spec_file(base_path), base_path.parent)
        alpha = _num(fields, "alpha", 0.5)
        v = bump_expansion(base.n, _num(fields, "bump_center", 0.0), _num(fields, "bump_width"))
        g = axisym_homogeneous_ft(v, alpha + 2.0)
        return PerturbedBody(base, g, _num(fields, "eps"))
    raise DomainError(f"unknown body kind {kind!r}")


def _read_spec_file(path: Path) -> str:
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DomainError(f"cannot read body spec {path}: {exc.strerror}") from None
    return " ".join(line.split("#", 1)[0].strip() for line in lines if line.strip())


def read_config(path: str) -> dict:
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc.strerror}") from None
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{num}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


# ------------------------------------------------------------ parser


DEFAULTS = {
    "p": 0.0,
    "t": 0.0,
    "xi_angle": 0.0,
    "points": 65,
    "grid": 181,
    "per_decade": 4,
    "N_range": "1:1e12",
    "format": None,
    "alpha": None,
    "n": None,
    "bump_center": 0.0,
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--plot", default=None, help="also write an SVG chart to this path")
    p.add_argument("--config", default=None, help="key=value file merged under the flags")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geotomo", description="Sections, fractional derivatives and volume comparison for bodies of revolution.")
    parser.add_argument("--version", action="version", version=f"geotomo {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    body = sub.add_parser("body", help="body queries")
    bsub = body.add_subparsers(dest="action", parser_class=_Parser)
    info = bsub.add_parser("info", help="volume, radii, support and convexity")
    info.add_argument("--body")
    _common(info)

    sec = sub.add_parser("section", help="weighted section value A(t)")
    sec.add_argument("--body")
    sec.add_argument("--p", type=float, default=None)
    sec.add_argument("--t", type=float, default=None, nargs="+")
    sec.add_argument("--xi-angle", type=float, default=None)
    _common(sec)

    prof = sub.add_parser("sprofile", help="tabulate the section profile")
    prof.add_argument("--body")
    prof.add_argument("--p", type=float, default=None)
    prof.add_argument("--xi-angle", type=float, default=None)
    prof.add_argument("--points", type=int, default=None)
    _common(prof)

    fd = sub.add_parser("fracderiv", help="fractional derivatives at zero")
    fd.add_argument("--f", choices=["exp", "cos"])
    fd.add_argument("--body")
    fd.add_argument("--p", type=float, default=None)
    fd.add_argument("--xi-angle", type=float, default=None)
    fd.add_argument("--q", type=float, nargs="+")
    _common(fd)

    lap = sub.add_parser("laplacian", help="fractional Laplacian of the central section function")
    lap.add_argument("--body")
    lap.add_argument("--alpha", type=float, default=None)
    lap.add_argument("--grid", type=int, default=None)
    _common(lap)

    bp = sub.add_parser("bp", help="volume comparison pipelines")
    bsp = bp.add_subparsers(dest="action", parser_class=_Parser)
    chk = bsp.add_parser("check", help="check the Laplacian section condition")
    chk.add_argument("--K")
    chk.add_argument("--L")
    chk.add_argument("--alpha", type=float, default=None)
    chk.add_argument("--grid", type=int, default=None)
    _common(chk)
    ver = bsp.add_parser("verify-positive", help="check the volume ordering for a pair meeting the condition")
    ver.add_argument("--K")
    ver.add_argument("--L")
    ver.add_argument("--alpha", type=float, default=None)
    ver.add_argument("--grid", type=int, default=None)
    _common(ver)
    scan = bsp.add_parser("scan", help="scan the critical integral over N")
    scan.add_argument("--n", type=int, default=None)
    scan.add_argument("--alpha", type=float, default=None)
    scan.add_argument("--N", dest="N_range", default=None, help="range lo:hi")
    scan.add_argument("--per-decade", type=int, default=None)
    _common(scan)
    build = bsp.add_parser("build", help="construct a counterexample pair")
    build.add_argument("--n", type=int, default=None)
    build.add_argument("--alpha", type=float, default=None)
    build.add_argument("--N", type=float, default=None)
    build.add_argument("--bump-center", type=float, default=None)
    build.add_argument("--bump-width", type=float, default=None)
    build.add_argument("--eps-start", type=float, default=None)
    build.add_argument("--grid", type=int, default=None)
    _common(build)
    return parser


def _merge(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        for k, v in read_config(args.config).items():
            opts[k] = v
    for k, v in vars(args).items():
        if v is not None:
            opts[k] = v
    return opts


def _get(opts: dict, key: str, cast=float, required: bool = True):
    v = opts.get(key)
    if v is None:
        if required:
            raise DomainError(f"missing required parameter --{key.replace('_', '-')}")
        return None
    try:
        return cast(v)
    except (TypeError, ValueError):
        raise DomainError(f"parameter {key}={v!r} is not valid") from None


# ------------------------------------------------------------ commands


def _body(o: dict, key: str) -> ConvexBody:
    if not o.get(key):
        raise DomainError(f"missing required parameter --{key}")
    return parse_body_spec(str(o[key]))


def _cmd_body_info(o):
    body = _body(o, "body")
    n = body.n
    cert = check_convexity(body)
    data = {
        "kind": body.kind,
        "n": n,
        "volume": volume(body),
        "radial_axis": float(body.radial_angle(np.array([0.0]))[0]),
        "radial_equator": float(body.radial_angle(np.array([math.pi / 2]))[0]),
        "support_axis": support_halfwidth(body, direction(n, 0.0)).value,
        "support_equator": support_halfwidth(body, direction(n, math.pi / 2)).value,
        "convex": cert.passed,
        "convexity_defect": cert.worst_defect,
    }
    rows = [[k, fmt(v) if isinstance(v, float) else v] for k, v in data.items()]
    return data, ("key value".split(), rows, []), None


def _cmd_section(o):
    body = _body(o, "body")
    p = _get(o, "p")
    ts = o.get("t")
    ts = [float(x) for x in (ts if isinstance(ts, list) else str(ts).split(","))]
    prof = SectionProfile(body, _get(o, "xi_angle"), p)
    vals = prof(np.array(ts))
    data = {"xi_angle": prof.psi, "p": p, "t": ts, "A": vals.tolist()}
    rows = [[t, float(v)] for t, v in zip(ts, vals)]
    return data, (["t", "A"], rows, []), None


def _cmd_sprofile(o):
    body = _body(o, "body")
    p = _get(o, "p")
    prof = SectionProfile(body, _get(o, "xi_angle"), p)
    ts = np.linspace(0.0, prof.t_max, _get(o, "points", int))
    vals = prof(ts)
    comments = [f"body={o['body']}, xi_angle={fmt(prof.psi)}, p={fmt(p)}"]
    data = {"body": o["body"], "xi_angle": prof.psi, "p": p, "t_max": prof.t_max, "t": ts.tolist(), "A": vals.tolist()}
    plot = ({"A(t)": (ts, vals)}, "t", "A(t)", False, False)
    return data, (["t", "A"], [[float(t), float(v)] for t, v in zip(ts, vals)], comments), plot


def _cmd_fracderiv(o):
    if bool(o.get("f")) == bool(o.get("body")):
        raise DomainError("give exactly one of --f and --body")
    if o.get("q") is None:
        raise DomainError("missing required parameter --q")
    if o.get("f"):
        if o["f"] not in ("exp", "cos"):
            raise DomainError(f"unknown test function {o['f']!r}")
        prof = exp_profile() if o["f"] == "exp" else cos_profile()
        label = o["f"]
    else:
        body = _body(o, "body")
        prof = SectionProfile(body, _get(o, "xi_angle"), _get(o, "p"))
        label = o["body"]
    qs = o["q"] if isinstance(o["q"], list) else [float(x) for x in str(o["q"]).split(",")]
    rows = []
    for q in qs:
        if q == round(q) and round(q) in (0, 1, 2):
            rows.append([float(q), integer_deriv_at_zero(prof, int(round(q))), 0.0])
        else:
            r = frac_deriv_at_zero(prof, q)
            rows.append([float(q), float(r.value), float(r.abs_error_estimate)])
    data = {"profile": label, "rows": rows}
    return data, (["q", "value", "abs_err"], rows, [f"profile={label}"]), None


def _cmd_laplacian(o):
    body = _body(o, "body")
    alpha = _get(o, "alpha")
    grid = np.linspace(0.0, math.pi / 2, _get(o, "grid", int))
    vals = frac_laplacian_grid(body, alpha, grid)
    rows = [[float(a), float(v)] for a, v in zip(grid, vals)]
    data = {"alpha": alpha, "angle_rad": grid.tolist(), "value": vals.tolist()}
    plot = ({"laplacian": (grid, vals)}, "polar angle (rad)", "value", False, False)
    return data, (["angle_rad", "value"], rows, [f"body={o['body']}, alpha={fmt(alpha)}"]), plot


def _cmd_bp_check(o):
    K, L = _body(o, "K"), _body(o, "L")
    rep = check_condition(K, L, _get(o, "alpha"), _get(o, "grid", int))
    rows = [[a, l, r] for a, l, r in zip(rep.grid, rep.lhs, rep.rhs)]
    comments = [f"alpha={fmt(rep.alpha)}, margin={fmt(rep.margin)}, satisfied={rep.satisfied}"]
    margins = np.array(rep.rhs) - np.array(rep.lhs)
    plot = ({"rhs - lhs": (rep.grid, margins)}, "polar angle (rad)", "margin", False, False)
    return rep, (["angle_rad", "lhs", "rhs"], rows, comments), plot


def _cmd_bp_verify(o):
    K, L = _body(o, "K"), _body(o, "L")
    verdict = positive_verify(K, L, _get(o, "alpha"), _get(o, "grid", int))
    rows = [[k, v] for k, v in asdict(verdict).items()]
    return verdict, (["key", "value"], rows, []), None


def _cmd_bp_scan(o):
    rng = str(o["N_range"]).split(":")
    if len(rng) != 2:
        raise DomainError("--N expects lo:hi")
    lo, hi = float(rng[0]), float(rng[1])
    rep = scan_counterexample(_get(o, "n", int), _get(o, "alpha"), lo, hi, _get(o, "per_decade", int), threads=o.get("threads"))
    comments = [f"n={rep.n}, alpha={fmt(rep.alpha)}, p={fmt(rep.p)}, q={fmt(rep.q)}",
                f"threshold_N={'' if rep.threshold_N is None else fmt(rep.threshold_N)}, "
                f"fitted_exponent={'' if rep.fitted_exponent is None else fmt(rep.fitted_exponent)}"]
    Ns = [r[0] for r in rep.rows]
    Is = [r[1] for r in rep.rows]
    plot = ({"|I(N)|": (Ns, Is)}, "N", "|I(N)|", True, True)
    return rep, (["N", "I", "sign"], rep.rows, comments), plot


def _cmd_bp_build(o):
    pair = build_counterexample(
        n=_get(o, "n", int),
        alpha=_get(o, "alpha"),
        N=_get(o, "N", required=False),
        bump_center=_get(o, "bump_center"),
        bump_width=_get(o, "bump_width", required=False),
        eps_start=_get(o, "eps_start", required=False),
        grid_size=_get(o, "grid", int),
        threads=o.get("threads"),
    )
    data = pair.summary()
    rows = [[k, v] for k, v in data.items()]
    rep = pair.condition
    margins = np.array(rep.rhs) - np.array(rep.lhs)
    plot = ({"rhs - lhs": (rep.grid, margins)}, "polar angle (rad)", "margin", False, False)
    return data, (["key", "value"], rows, []), plot


COMMANDS = {
    ("body", "info"): (_cmd_body_info, "json"),
    ("section", None): (_cmd_section, "csv"),
    ("sprofile", None): (_cmd_sprofile, "csv"),
    ("fracderiv", None): (_cmd_fracderiv, "csv"),
    ("laplacian", None): (_cmd_laplacian, "csv"),
    ("bp", "check"): (_cmd_bp_check, "json"),
    ("bp", "verify-positive"): (_cmd_bp_verify, "json"),
    ("bp", "scan"): (_cmd_bp_scan, "json"),
    ("bp", "build"): (_cmd_bp_build, "json"),
}


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_meta(out: str, argv: list, opts: dict, threads: int):
    meta = {
        "tool": "geotomo",
        "version": __version__,
        "argv": argv,
        "options": {k: v for k, v in opts.items() if isinstance(v, (str, int, float, bool, list)) or v is None},
        "threads": threads,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created": __import__("datetime").datetime.now().isoformat(timespec="seconds"),
    }
    Path(out + ".meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")


def run(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    key = (args.command, getattr(args, "action", None))
    if key not in COMMANDS:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    func, default_format = COMMANDS[key]
    try:
        opts = _merge(args)
        threads = _get(opts, "threads", int, required=False) or default_threads()
        if threads < 1:
            raise DomainError("--threads must be positive")
        opts["threads"] = threads
        data, table, plot = func(opts)
        fmt_name = opts.get("format") or default_format
        if fmt_name == "json":
            text = to_json(data)
        else:
            header, rows, comments = table
            text = to_csv(header, rows, comments)
        _emit(text, opts.get("out"))
        if opts.get("out"):
            _write_meta(opts["out"], argv, opts, threads)
        if opts.get("plot"):
            if plot is None:
                raise DomainError(f"no chart is defined for '{' '.join(k for k in key if k)}'")
            series, xl, yl, lx, ly = plot
            Path(opts["plot"]).write_text(line_chart(series, xl, yl, " ".join(k for k in key if k), lx, ly))
    except (DomainError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"error: {exc} (best estimate {exc.estimate!r})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for k, v in exc.diagnostics.items():
            if k != "attempts":
                print(f"  {k}: {v}", file=sys.stderr)
        attempts = exc.diagnostics.get("attempts") or []
        if attempts:
            print(f"  last attempt: {attempts[-1]}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
