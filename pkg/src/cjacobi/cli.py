"""Command-line front end: ``cjacobi <command> --model model.json [options]``.

Commands: lambda, turan, bounds, classify, fs, tv. Options may also come
from a JSON file passed with ``--config``; explicit flags take precedence.

Exit codes: 0 success, 1 I/O or parse error, 2 precondition violation,
3 strict-mode diagnostic failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .eigen import bound_ratio, classify
from .errors import BudgetExceeded, JacobiError, SignChange
from .sequences import CoefficientModel, load_model, model_from_json
from .spectrum import MAX_DIM, Box, finite_section
from .transfer import (
    LambdaScanResult,
    default_scan_radius,
    estimate_gamma,
    in_lambda,
    limit_family,
    scan_family,
)
from .turan import SELECTORS, selector_values, turan_trace, twisted_variation

EXIT_OK, EXIT_IO, EXIT_PRECONDITION, EXIT_STRICT = 0, 1, 2, 3


class Precondition(Exception):
    """Input is well-formed but the command cannot run on it."""


class StrictFailure(Exception):
    """A diagnostic failed while --strict was given."""


@dataclass
class RunConfig:
    command: str = ""
    model: object = None
    nmax: int | None = None
    z: list | None = None
    grid: str | None = None
    offset: int | None = None
    gamma: str | None = None
    tol: float | None = None
    alpha: str | None = None
    dim: int | None = None
    box: str | None = None
    budget: int | None = None
    selector: str | None = None
    points: int | None = None
    scan: str | None = None
    out: str | None = None
    format: str = "csv"
    strict: bool = False
    partial: bool = False
    no_header: bool = False
    base_dir: Path = Path(".")

    def validate(self):
        if self.nmax is not None and self.nmax < 1:
            raise ValueError("--nmax must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("--tol must be > 0")
        if self.format not in ("csv", "json"):
            raise ValueError("--format must be csv or json")


def parse_complex_arg(text) -> complex:
    """'re,im', 're' or a JSON [re, im] list."""
    if isinstance(text, (list, tuple)):
        return complex(float(text[0]), float(text[1]) if len(text) > 1 else 0.0)
    if isinstance(text, (int, float)):
        return complex(text)
    parts = str(text).split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"cannot parse complex value {text!r}")


def parse_grid(text: str):
    parts = [float(v) for v in text.split(":")]
    if len(parts) != 3:
        raise ValueError("--grid must be t0:t1:step")
    t0, t1, step = parts
    if not step > 0:
        raise ValueError("grid step must be > 0")
    return t0, t1, step


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--model", help="model JSON file")
    common.add_argument("--nmax", type=int)
    common.add_argument("--z", action="append", help="spectral parameter re,im (repeatable)")
    common.add_argument("--grid", help="t0:t1:step along gamma*R")
    common.add_argument("--offset", type=int)
    common.add_argument("--gamma", help="re,im; overrides the estimate from the model")
    common.add_argument("--tol", type=float)
    common.add_argument("--alpha", help="initial pair re,im;re,im (default 1;0)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--strict", action="store_true", default=None)
    common.add_argument("--partial", action="store_true", default=None)
    common.add_argument("--no-header", dest="no_header", action="store_true", default=None)

    p = argparse.ArgumentParser(prog="cjacobi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("lambda", parents=[common], help="scan the Lambda set of a limit family")
    t = sub.add_parser("turan", parents=[common], help="trace shifted Turan determinants")
    t.add_argument("--scan", help="Lambda scan JSON; z defaults to the middle of its first interval")
    b = sub.add_parser("bounds", parents=[common], help="two-sided eigenvector bound ratios")
    b.add_argument("--points", type=int, help="interior Lambda points per offset (default 9)")
    c = sub.add_parser("classify", parents=[common], help="proper/improper classification")
    c.add_argument("--points", type=int, help="evidence points (default 3)")
    f = sub.add_parser("fs", parents=[common], help="eigenvalues of a finite section")
    f.add_argument("--dim", type=int)
    f.add_argument("--box", help="x0,x1,y0,y1")
    f.add_argument("--budget", type=int)
    v = sub.add_parser("tv", parents=[common], help="twisted total variation of a sequence")
    v.add_argument("--selector", help=", ".join(SELECTORS))
    return p


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config:
        path = Path(args.config)
        with open(path) as fh:
            node = json.load(fh)
        cfg.base_dir = path.parent
        known = {f.name for f in fields(RunConfig)}
        for key, value in node.items():
            key = key.replace("-", "_")
            if key not in known or key in ("command", "base_dir"):
                raise ValueError(f"unknown config key {key!r}")
            if key == "z" and not (isinstance(value, list) and value and isinstance(value[0], (list, str))):
                value = [value]
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        if f.name in ("command", "base_dir"):
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    cfg.validate()
    return cfg


def resolve_model(cfg: RunConfig) -> CoefficientModel:
    if cfg.model is None:
        raise ValueError("no model given (use --model)")
    if isinstance(cfg.model, dict):
        return model_from_json(cfg.model)
    path = Path(cfg.model)
    if not path.exists() and (cfg.base_dir / path).exists():
        path = cfg.base_dir / path
    return load_model(path)


def parse_alpha(text) -> tuple:
    if text is None:
        return (1.0 + 0j, 0j)
    if isinstance(text, (list, tuple)):
        return tuple(parse_complex_arg(v) for v in text)
    parts = str(text).split(";")
    if len(parts) != 2:
        raise ValueError("--alpha must be 're,im;re,im'")
    return tuple(parse_complex_arg(v) for v in parts)


# output helpers --------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


def fmt(x: float) -> str:
    return f"{x:.17g}"


def header(cfg: RunConfig) -> str | None:
    if cfg.no_header:
        return None
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"cjacobi {__version__} {cfg.command} {stamp}"


def csv_table(cols, rows, head) -> str:
    lines = [f"# {head}"] if head else []
    lines.append(",".join(cols))
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def emit(cfg: RunConfig, text: str, suffix: str = ""):
    if cfg.out is None:
        sys.stdout.write(text)
        return
    path = Path(cfg.out)
    if suffix:
        path = path.with_name(path.stem + suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("JS_THREADS", "1")))
    except ValueError:
        return 1


# commands ----------------------------------------------------------------------------

def _family(model):
    fam = limit_family(model)
    if fam is None:
        raise Precondition("model has no limit family (periodic, modulated or blend)")
    return fam


def _offset(cfg, fam) -> int:
    i = fam.offsets[0] if cfg.offset is None else cfg.offset
    if i not in fam.offsets:
        raise Precondition(f"offset {i} outside {fam.offsets[0]}..{fam.offsets[-1]}")
    return i


def _gamma(cfg, model, i, N) -> complex:
    if cfg.gamma is not None:
        g = parse_complex_arg(cfg.gamma)
        if abs(abs(g) - 1) > 1e-12:
            raise Precondition("--gamma must be unimodular")
        return g
    return estimate_gamma(model, i, N)[0]


def _scan(cfg, model, fam, i):
    g = _gamma(cfg, model, i, fam.period)
    if cfg.grid is not None:
        t0, t1, step = parse_grid(cfg.grid)
    else:
        r = default_scan_radius(model)
        t0, t1, step = -r, r, 1e-3
    return scan_family(fam, i, t0, t1, step, g, cfg.tol or 1e-8)


def cmd_lambda(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    fam = _family(model)
    scan = _scan(cfg, model, fam, _offset(cfg, fam))
    if cfg.format == "json":
        emit(cfg, dump_json(scan.to_json()))
    else:
        emit(cfg, scan.to_csv(header(cfg)))
    if cfg.out is not None:
        parts = " ".join(f"({fmt(lo)}, {fmt(hi)})" for lo, hi in scan.intervals) or "empty"
        print(f"Lambda (offset {scan.offset}): {parts}")
    return EXIT_OK


def _period(model):
    fam = limit_family(model)
    return (fam.period, fam.offsets) if fam is not None else (model.period, tuple(range(model.period)))


def cmd_turan(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    N, offsets = _period(model)
    i = offsets[0] if cfg.offset is None else cfg.offset
    if i not in offsets:
        raise Precondition(f"offset {i} outside {offsets[0]}..{offsets[-1]}")
    g = _gamma(cfg, model, i, N)
    if cfg.z:
        z = parse_complex_arg(cfg.z[0])
    elif cfg.scan:
        with open(cfg.scan) as fh:
            sc = LambdaScanResult.from_json(json.load(fh))
        pts = sc.interior_points(1)
        if not pts:
            raise Precondition("scan file has an empty Lambda set")
        z = sc.gamma * pts[0]
    else:
        raise Precondition("turan needs --z or --scan")
    trace = turan_trace(model, i, N, z, parse_alpha(cfg.alpha), cfg.nmax or 10**4, gamma=g,
                        flat_tol=cfg.tol or 1e-3)
    summary = trace.summary()
    if cfg.format == "json":
        emit(cfg, dump_json(summary))
    else:
        emit(cfg, trace.to_csv(header(cfg)))
        if cfg.out is not None:
            emit(cfg, dump_json(summary), ".summary.json")
    if cfg.out is not None:
        print(f"g = {fmt(trace.g)}  converged = {trace.converged}  sign_change = {trace.sign_change}")
    if cfg.strict and trace.sign_change:
        raise StrictFailure(f"S changes sign after the burn-in (block {trace.burn_in})")
    if cfg.strict and not trace.converged:
        raise StrictFailure("Turan determinants did not converge to a non-degenerate limit")
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    fam = _family(model)
    offsets = fam.offsets if cfg.offset is None else (_offset(cfg, fam),)
    nmax = cfg.nmax or 10**4
    tasks = []
    for i in offsets:
        scan = _scan(cfg, model, fam, i)
        if not scan.intervals:
            raise Precondition(f"Lambda is empty at offset {i}")
        if cfg.z:
            zs = [parse_complex_arg(v) for v in cfg.z]
        else:
            zs = [scan.gamma * t for t in scan.interior_points(cfg.points or 9)]
        for z in zs:
            tasks.append((i, z, in_lambda(fam.matrix(i, z), cfg.tol or 1e-8)))

    def run(task):
        i, z, inside = task
        return task, bound_ratio(model, i, fam.period, z, nmax, n_min=min(10, nmax // (10 * fam.period)))

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(run, tasks))
    rows = []
    for (i, z, inside), br in results:
        rows.append({"offset": i, "z": z, "in_lambda": bool(inside), "inf": br.inf, "sup": br.sup,
                     "ratio": br.ratio, "max_alpha_ratio": br.max_alpha_ratio,
                     "slope": br.slope, "growth_flag": bool(br.slope > 0.5)})
    if cfg.format == "json":
        emit(cfg, dump_json(rows))
    else:
        cols = ["offset", "z_re", "z_im", "in_lambda", "inf", "sup", "ratio", "max_alpha_ratio",
                "slope", "growth_flag"]
        emit(cfg, csv_table(cols, [[r["offset"], r["z"].real, r["z"].imag, int(r["in_lambda"]),
                                    r["inf"], r["sup"], r["ratio"], r["max_alpha_ratio"],
                                    r["slope"], int(r["growth_flag"])] for r in rows], header(cfg)))
    if cfg.strict and any(r["in_lambda"] and r["growth_flag"] for r in rows):
        raise StrictFailure("growing eigenvector bound inside Lambda")
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    report = classify(model, n_max=cfg.nmax or 10**4, evidence_points=cfg.points or 3)
    emit(cfg, dump_json(report.to_json()))
    if cfg.out is not None:
        print(f"{report.verdict}: " + "; ".join(report.statements()))
    return EXIT_OK


def cmd_fs(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    dim = cfg.dim or 100
    if dim > MAX_DIM:
        raise Precondition(f"--dim {dim} exceeds {MAX_DIM}")
    box = Box.parse(cfg.box) if isinstance(cfg.box, str) else Box(*(cfg.box or (-3, 3, -1, 1)))
    try:
        est = finite_section(model, dim, box, cfg.tol or 1e-8, budget=cfg.budget or 200000,
                             partial=bool(cfg.partial))
    except BudgetExceeded as exc:
        raise Precondition(f"{exc} (rerun with --partial to keep what was found)") from exc
    if cfg.format == "json":
        emit(cfg, dump_json(est.to_json()))
    else:
        emit(cfg, est.to_csv(header(cfg)))
    if cfg.out is not None:
        print(f"{est.count} roots, complete = {est.complete}")
    return EXIT_OK


def cmd_tv(cfg: RunConfig) -> int:
    model = resolve_model(cfg)
    if cfg.selector not in SELECTORS:
        raise Precondition(f"unknown selector {cfg.selector!r}; choose from {', '.join(SELECTORS)}")
    N, offsets = _period(model)
    if cfg.offset is not None:
        if cfg.offset not in offsets:
            raise Precondition(f"offset {cfg.offset} outside {offsets[0]}..{offsets[-1]}")
        offsets = (cfg.offset,)
    nmax = cfg.nmax or 10**4
    blocks = nmax // N
    if blocks < 2:
        raise Precondition("--nmax too small for twisted variation")
    z = parse_complex_arg(cfg.z[0]) if cfg.z else 0j
    reports = []
    for i in offsets:
        g = _gamma(cfg, model, i, N) if cfg.selector == "gamma/a" else 1.0
        values = selector_values(model, cfg.selector, (blocks + 1) * N + i + 1, N, z, g)
        reports.append(twisted_variation(values, i, N, blocks))
    if cfg.format == "json":
        emit(cfg, dump_json([dict(r.to_json(), selector=cfg.selector) for r in reports]))
    else:
        emit(cfg, csv_table(["offset", "selector", "total", "exponent", "verdict"],
                            [[r.offset, cfg.selector, r.total, r.exponent, r.verdict] for r in reports],
                            header(cfg)))
    return EXIT_OK


COMMANDS = {"lambda": cmd_lambda, "turan": cmd_turan, "bounds": cmd_bounds,
            "classify": cmd_classify, "fs": cmd_fs, "tv": cmd_tv}


_VALUE_OPTIONS = {"--z", "--grid", "--gamma", "--alpha", "--box"}


def _glue_negative_values(argv):
    """Let ``--grid -4:4:0.001`` through argparse, which would read -4:... as an option."""
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        if tok in _VALUE_OPTIONS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except StrictFailure as exc:
        print(f"strict: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except SignChange as exc:
        print(f"strict: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except Precondition as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, JacobiError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except JacobiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
