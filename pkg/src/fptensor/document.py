"""Frame documents: TOML files declaring a frame field (or a metric to factor).

See ``docs/frame-format.md`` for the exact format.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dsl import Expr, parse_expression, to_string, uses_abs, variables
from .errors import FPError, ParseError

_KNOWN_KEYS = {"n", "frame", "metric", "name", "description", "chart_map", "natural_chart"}


@dataclass(frozen=True)
class FrameDocument:
    """Parsed frame document.

    Exactly one of ``frame`` (row ``i`` = mesh index, column ``alpha`` = world
    index, entry = lambda_i^alpha) and ``metric`` (g_{mu nu}) is set.
    """

    n: int
    frame: tuple[tuple[Expr, ...], ...] | None = None
    metric: tuple[tuple[Expr, ...], ...] | None = None
    name: str = ""
    description: str = ""
    chart_map: tuple[Expr, ...] | None = None
    natural_chart: bool = False
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def to_toml(self) -> str:
        lines = []
        if self.name:
            lines.append(f"name = {_quote(self.name)}")
        if self.description:
            lines.append(f"description = {_quote(self.description)}")
        lines.append(f"n = {self.n}")
        if self.natural_chart:
            lines.append("natural_chart = true")
        key, grid = ("frame", self.frame) if self.frame is not None else ("metric", self.metric)
        lines.append(f"{key} = [")
        for row in grid:
            lines.append("  [" + ", ".join(_quote(to_string(e)) for e in row) + "],")
        lines.append("]")
        if self.chart_map is not None:
            lines.append("chart_map = [" + ", ".join(_quote(to_string(e)) for e in self.chart_map) + "]")
        return "\n".join(lines) + "\n"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _parse_grid(raw, n: int, key: str) -> tuple[tuple[Expr, ...], ...]:
    if not isinstance(raw, list) or len(raw) != n:
        raise ParseError(f"'{key}' must be a list of {n} rows")
    grid = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"'{key}' row {i + 1} must hold {n} expressions")
        parsed = []
        for a, text in enumerate(row):
            if isinstance(text, (int, float)) and not isinstance(text, bool):
                text = repr(float(text))
            if not isinstance(text, str):
                raise ParseError(f"'{key}'[{i + 1}][{a + 1}] must be a string")
            try:
                parsed.append(parse_expression(text, n))
            except ParseError as exc:
                raise ParseError(f"'{key}'[{i + 1}][{a + 1}]: {exc}") from exc
        grid.append(tuple(parsed))
    return tuple(grid)


def parse_frame_document(text: str) -> FrameDocument:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid frame document: {exc}") from exc
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ParseError(f"unknown key(s) in frame document: {', '.join(sorted(unknown))}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ParseError("'n' must be an integer >= 2")
    if ("frame" in data) == ("metric" in data):
        raise ParseError("exactly one of 'frame' and 'metric' must be given")
    frame = _parse_grid(data["frame"], n, "frame") if "frame" in data else None
    metric = _parse_grid(data["metric"], n, "metric") if "metric" in data else None

    chart = None
    if "chart_map" in data:
        raw = data["chart_map"]
        if not isinstance(raw, list) or len(raw) != n or not all(isinstance(s, str) for s in raw):
            raise ParseError(f"'chart_map' must be a list of {n} expression strings")
        chart = tuple(parse_expression(s, n) for s in raw)
        for e in chart:
            if any(kind == "y" for kind, _ in variables(e)):
                raise ParseError("'chart_map' expressions may only use x1..xn")

    for key in ("name", "description"):
        if key in data and not isinstance(data[key], str):
            raise ParseError(f"'{key}' must be a string")
    natural = data.get("natural_chart", False)
    if not isinstance(natural, bool):
        raise ParseError("'natural_chart' must be a boolean")

    warnings = []
    grid = frame if frame is not None else metric
    if any(uses_abs(e) for row in grid for e in row):
        warnings.append("abs() is not smooth at 0; keep samples away from its kinks")

    return FrameDocument(
        n=n,
        frame=frame,
        metric=metric,
        name=data.get("name", ""),
        description=data.get("description", ""),
        chart_map=chart,
        natural_chart=natural,
        warnings=tuple(warnings),
    )


def load_frame_document(path: str | Path) -> FrameDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FPError(f"cannot read frame document {path}: {exc}") from exc
    return parse_frame_document(text)


BUNDLED = (
    "identity",
    "ap-exponential",
    "quartic-minkowski",
    "rotated-riemannian",
    "conformal-quartic",
    "conformal-quartic-3d",
    "twisted-3d",
)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise FPError(f"no bundled frame named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(__file__).parent / "data" / f"{name}.toml"


def load_bundled(name: str) -> FrameDocument:
    return load_frame_document(bundled_path(name))
