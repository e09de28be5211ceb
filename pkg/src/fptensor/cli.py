"""Command-line front end.

    fptensor validate          --frame ap-exponential
    fptensor report            --frame quartic-minkowski --points "[[[0.1, 0.2], [1.0, 0.5]]]"
    fptensor classify          --frame rotated-riemannian --format json
    fptensor check-identities  --frame quartic-minkowski --only canonical-flat
    fptensor chart-check       --frame ap-exponential

Exit status: 0 when every executed check passes, 1 when a check fails, 2 on
input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import ChartMap, chart_transform_check, classification_samples, classify
from .connections import ALL_KINDS, ConnectionKind, FPContext
from .curvature import curvature_set, torsion_set
from .document import BUNDLED, load_bundled, load_frame_document
from .errors import FPError
from .frame import DEFAULT_TOLERANCES, Frame, sample_points, tensor_from_jets, validate_structure
from .identities import check_identities, identity_names
from .jets import EvalPoint

SCHEMA_VERSION = 1
RNG_NAME = "numpy PCG64"
COMMANDS = ("validate", "report", "classify", "check-identities", "chart-check")
DEFAULT_SAMPLES = {"report": 1}


@dataclass
class RunConfig:
    frame: str
    command: str
    samples: int = 100
    seed: int = 0
    tol: float | None = None
    format: str = "text"
    points: list[EvalPoint] | None = None
    kinds: list[ConnectionKind] = field(default_factory=lambda: list(ALL_KINDS))
    only: list[str] | None = None
    natural_chart: bool = False
    chart: list[str] | None = None


class InputError(FPError):
    pass


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def load_frame(spec: str) -> Frame:
    """A frame from a file path or the name of a bundled example."""
    path = Path(spec)
    if path.suffix == ".toml" or path.exists():
        return Frame(load_frame_document(path))
    if spec in BUNDLED:
        return Frame(load_bundled(spec))
    raise InputError(f"{spec!r} is neither a frame file nor a bundled frame ({', '.join(BUNDLED)})")


def parse_points(text: str, n: int | None = None) -> list[EvalPoint]:
    """Points as JSON, inline or in a file: a list of ``[x, y]`` pairs or of
    ``{"x": [...], "y": [...]}`` objects."""
    path = Path(text)
    if not text.lstrip().startswith(("[", "{")) and path.exists():
        text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse --points: {exc}") from exc
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise InputError("--points must be a non-empty list")
    points = []
    for item in raw:
        if isinstance(item, dict) and set(item) == {"x", "y"}:
            x, y = item["x"], item["y"]
        elif isinstance(item, list) and len(item) == 2:
            x, y = item
        else:
            raise InputError(f"cannot read point {item!r}; use [x, y] or {{\"x\": ..., \"y\": ...}}")
        try:
            p = EvalPoint(tuple(x), tuple(y))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad point {item!r}: {exc}") from exc
        if n is not None and p.n != n:
            raise InputError(f"point {item!r} has dimension {p.n}, frame has {n}")
        points.append(p)
    return points


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fptensor",
        description="Torsion, curvature and identity checks for FP-spaces defined by frame documents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--frame", required=True, help="frame document path or bundled name")
        p.add_argument("--samples", type=int, default=None, help="number of sample points")
        p.add_argument("--seed", type=int, default=0, help="seed of the PCG64 sampler")
        p.add_argument("--tol", type=float, default=None, help="override the check tolerance")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--points", default=None, help="explicit points (JSON inline or a file)")
        p.add_argument("--only", default=None, help="comma-separated identity names")
        p.add_argument("--kinds", default=None, help="comma-separated connection kinds")
        p.add_argument("--natural-chart", action="store_true",
                       help="declare the frame's chart natural (table-3 checks)")
        p.add_argument("--chart", default=None,
                       help="chart map as semicolon-separated expressions (chart-check)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.seed < 0 or args.seed >= 2 ** 64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    samples = args.samples if args.samples is not None else DEFAULT_SAMPLES.get(args.command, 100)
    if samples < 1:
        raise InputError("--samples must be positive")
    kinds = list(ALL_KINDS)
    if args.kinds:
        kinds = [ConnectionKind.parse(k) for k in args.kinds.split(",") if k.strip()]
    only = None
    if args.only:
        only = [s.strip() for s in args.only.split(",") if s.strip()]
        unknown = [s for s in only if s not in identity_names()]
        if unknown:
            raise InputError(f"unknown identity name(s): {', '.join(unknown)}")
    chart = [s.strip() for s in args.chart.split(";")] if args.chart else None
    return RunConfig(
        frame=args.frame,
        command=args.command,
        samples=samples,
        seed=args.seed,
        tol=args.tol,
        format=args.format,
        points=None,
        kinds=kinds,
        only=only,
        natural_chart=args.natural_chart,
        chart=chart,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _clean(obj):
    """Make a report JSON-safe: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _points(cfg: RunConfig, frame: Frame) -> list[EvalPoint]:
    if cfg.points is not None:
        return cfg.points
    return sample_points(frame.n, cfg.samples, seed=cfg.seed)


def run_validate(cfg: RunConfig, frame: Frame) -> tuple[dict, bool]:
    tol = None
    if cfg.tol is not None:
        tol = {k: cfg.tol for k in DEFAULT_TOLERANCES if k != "positive_definite"}
    report = validate_structure(frame, _points(cfg, frame), tol)
    return report.to_dict(), report.passed


def _tensor_entry(j, variance, point, name, labels=()):
    return tensor_from_jets(j, variance, point, name, labels).to_dict()


def run_report(cfg: RunConfig, frame: Frame) -> tuple[dict, bool]:
    out = []
    for p in _points(cfg, frame):
        ctx = FPContext(frame, p)
        entry = {
            "point": {"x": list(p.x), "y": list(p.y)},
            "frame": _tensor_entry(ctx.lam, "mu", p, "lambda", ("i", "alpha")),
            "metric": _tensor_entry(ctx.g, "ll", p, "g", ("mu", "nu")),
            "lagrangian": float(ctx.lagrangian.value),
            "cartan_tensor": _tensor_entry(ctx.cartan_tensor, "lll", p, "cartan_tensor", ("beta", "mu", "nu")),
            "barthel": _tensor_entry(ctx.barthel, "ul", p, "N", ("alpha", "beta")),
            "contortion": {
                "A": _tensor_entry(ctx.contortion.A, "ull", p, "A", ("alpha", "mu", "nu")),
                "B": _tensor_entry(ctx.contortion.B, "ull", p, "B", ("alpha", "mu", "nu")),
            },
            "connections": [],
        }
        for kind in cfg.kinds:
            conn = ctx.connection(kind)
            ts = torsion_set(ctx, kind)
            cs = curvature_set(ctx, kind)
            entry["connections"].append({
                "kind": kind.value,
                "coefficients": {k: t.to_dict() for k, t in conn.tensors(p).items()},
                "torsions": {nm: _tensor_entry(j, "ull", p, nm) for nm, j in ts.items()},
                "curvatures": {nm: _tensor_entry(j, "ulll", p, nm) for nm, j in cs.items()},
            })
        out.append(entry)
    return {"points": out}, True


def run_classify(cfg: RunConfig, frame: Frame) -> tuple[dict, bool]:
    if cfg.points is not None:
        samples = cfg.points
    else:
        samples = classification_samples(frame.n, cfg.samples, seed=cfg.seed)
    natural = cfg.natural_chart or frame.natural_chart
    result = classify(frame, samples, cfg.tol, natural_chart=natural)
    return result.to_dict(), result.consistent


def run_check_identities(cfg: RunConfig, frame: Frame) -> tuple[dict, bool]:
    natural = cfg.natural_chart or frame.natural_chart
    results = check_identities(frame, cfg.only, _points(cfg, frame), cfg.tol, natural)
    ok = all(r.passed for r in results if not r.skipped)
    return {"identities": [r.to_dict() for r in results]}, ok


def run_chart_check(cfg: RunConfig, frame: Frame) -> tuple[dict, bool]:
    chart = ChartMap(cfg.chart, frame.n) if cfg.chart else ChartMap.from_frame(frame)
    tol = 1e-7 if cfg.tol is None else cfg.tol
    res = chart_transform_check(frame, chart, _points(cfg, frame), tol)
    from .dsl import to_string

    d = res.to_dict()
    d["chart_map"] = [to_string(e) for e in chart.exprs]
    return d, res.passed


RUNNERS = {
    "validate": run_validate,
    "report": run_report,
    "classify": run_classify,
    "check-identities": run_check_identities,
    "chart-check": run_chart_check,
}


def run(cfg: RunConfig, frame: Frame | None = None) -> tuple[dict, bool]:
    """Execute one command; returns ``(report, all checks passed)``."""
    frame = load_frame(cfg.frame) if frame is None else frame
    if cfg.points is not None:
        for p in cfg.points:
            if p.n != frame.n:
                raise InputError(f"point dimension {p.n} does not match frame dimension {frame.n}")
    result, ok = RUNNERS[cfg.command](cfg, frame)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "frame": frame.name or cfg.frame,
        "n": frame.n,
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "samples": len(cfg.points) if cfg.points is not None else cfg.samples,
        "pass": ok,
        "result": result,
    }
    return _clean(report), ok


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _status(passed) -> str:
    return "PASS" if passed else "FAIL"


def render_text(report: dict) -> str:
    lines = [
        f"command: {report['command']}",
        f"frame: {report['frame']} (n = {report['n']})",
        f"seed: {report['seed']} ({report['rng']}), samples: {report['samples']}",
    ]
    res = report["result"]
    cmd = report["command"]
    if cmd == "validate":
        for c in res["conditions"]:
            lines.append(f"  {c['condition']:<22} {_fmt(c['max_residual']):<24} tol {_fmt(c['tolerance']):<8} "
                         f"{_status(c['pass'])}")
        lines.append(f"  GAP-valid: {res['gap_valid']}  Lagrange-valid: {res['lagrange_valid']}  "
                     f"Finsler-valid: {res['finsler_valid']}")
        lines += [f"  warning: {w}" for w in res["warnings"]]
    elif cmd == "report":
        for entry in res["points"]:
            pt = entry["point"]
            lines.append(f"point x = {pt['x']}, y = {pt['y']}")
            lines.append(f"  lagrangian: {_fmt(entry['lagrangian'])}")
            for key in ("frame", "metric", "cartan_tensor", "barthel"):
                lines.append(f"  {key}: {entry[key]['components']}")
            for key, t in entry["contortion"].items():
                lines.append(f"  contortion {key}: {t['components']}")
            for conn in entry["connections"]:
                lines.append(f"  connection {conn['kind']}")
                for group in ("coefficients", "torsions", "curvatures"):
                    for nm, t in conn[group].items():
                        lines.append(f"    {group[:-1]} {nm}: {t['components']}")
    elif cmd == "classify":
        lines.append(f"natural chart: {res['natural_chart']}")
        for rec in res["classes"] + [res["metric_x_only"]]:
            lines.append(f"  {rec['class']}: {rec['verdict']}")
            for c in rec["conditions"]:
                lines.append(f"    {c['name']:<30} {_fmt(c['residual']):<24} {_status(c['pass'])}")
            lines += [f"    note: {n}" for n in rec["notes"]]
        for k, v in res["inclusions"].items():
            lines.append(f"  inclusion {k}: {'consistent' if v else 'INCONSISTENT'}")
    elif cmd == "check-identities":
        for r in res["identities"]:
            if "skipped_reason" in r:
                lines.append(f"  SKIP {r['name']:<24} {r['skipped_reason']}")
                continue
            lines.append(f"  {_status(r['pass'])} {r['name']:<24} {_fmt(r['residual']):<24} tol {_fmt(r['tolerance'])}")
            for k, v in r.get("variants", {}).items():
                lines.append(f"       variant {k}: {_fmt(v)}")
            lines += [f"       note: {n}" for n in r.get("notes", [])]
    elif cmd == "chart-check":
        lines.append(f"  chart map: {res['chart_map']}")
        lines.append(f"  {_status(res['pass'])} {res['name']} {_fmt(res['residual'])} tol {_fmt(res['tolerance'])}")
    lines.append(f"overall: {_status(report['pass'])}")
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        frame = load_frame(cfg.frame)
        if args.points is not None:
            cfg.points = parse_points(args.points, frame.n)
        report, ok = run(cfg, frame)
    except FPError as exc:
        print(f"fptensor: error: {exc}", file=sys.stderr)
        return 2
    if cfg.format == "json":
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        sys.stdout.write(render_text(report))
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
