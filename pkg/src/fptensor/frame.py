"""Frame fields, coframes and the metric they induce.

Index conventions used throughout the package: a frame matrix ``lam`` has
``lam[i, a] = lambda_i^a`` (row = mesh index, column = world index); the
coframe ``cof[i, m] = lambda_i_m`` is its inverse transpose, so
``g_mn = cof[i, m] cof[i, n]`` and ``g^ab = lam[i, a] lam[i, b]``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import jets
from .document import FrameDocument
from .dsl import Expr, evaluate_on, uses_abs
from .errors import FPError, NotPositiveDefiniteError, SamplingError, SingularFrameError
from .jets import EvalPoint, JetArray

DET_TOL = 1e-10
PD_TOL = 1e-10


@dataclass(frozen=True)
class Tensor:
    """Components of an indexed object at a point.

    ``variance`` has one letter per index: ``u`` (upper), ``l`` (lower) or
    ``m`` (mesh index, not transformed).
    """

    components: np.ndarray
    variance: str
    point: EvalPoint | None = None
    name: str = ""
    labels: tuple[str, ...] = ()
    jets: JetArray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", comps)
        if comps.ndim != len(self.variance):
            raise ValueError(f"rank {comps.ndim} does not match variance {self.variance!r}")
        if not self.labels:
            default = "abcdefgh"[: comps.ndim]
            object.__setattr__(self, "labels", tuple(default))

    @property
    def rank(self) -> int:
        return self.components.ndim

    def is_symmetric(self, i: int = 0, j: int = 1, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.components - np.swapaxes(self.components, i, j)), initial=0) <= tol)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "indices": [
                {"label": lab, "variance": {"u": "upper", "l": "lower", "m": "mesh"}[v]}
                for lab, v in zip(self.labels, self.variance)
            ],
            "shape": list(self.components.shape),
            "components": [float(v) for v in self.components.ravel(order="C")],
        }


def tensor_from_jets(j: JetArray, variance: str, point: EvalPoint, name: str = "", labels=()) -> Tensor:
    return Tensor(j.value, variance, point, name, tuple(labels), j)


class Frame:
    """A parallelization ``lambda_i(x, y)`` given by a frame document.

    Documents with a ``frame`` grid are evaluated entry by entry.  Documents
    with a ``metric`` grid are turned into a frame pointwise: the coframe is
    the lower Cholesky factor of ``g`` (``lambda_i_m = L[m, i]``), so the frame
    matrix is ``L^-1``.
    """

    def __init__(self, document: FrameDocument):
        self.document = document
        self.n = document.n

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[Expr]], **kw) -> "Frame":
        grid = tuple(tuple(r) for r in grid)
        return cls(FrameDocument(n=len(grid), frame=grid, **kw))

    @property
    def name(self) -> str:
        return self.document.name

    @property
    def natural_chart(self) -> bool:
        return self.document.natural_chart

    @property
    def uses_abs(self) -> bool:
        grid = self.document.frame or self.document.metric
        return any(uses_abs(e) for row in grid for e in row)

    def _grid_jets(self, grid, seeds) -> JetArray:
        nvars = seeds[0].nvars
        order = min(s.order for s in seeds)
        rows = [
            jets.stack([jets.as_jet(evaluate_on(e, seeds), nvars, order) for e in row])
            for row in grid
        ]
        return jets.stack(rows)

    def metric_jets(self, seeds) -> JetArray:
        """Metric jets straight from a ``metric`` document (None otherwise)."""
        if self.document.metric is None:
            return None
        return self._grid_jets(self.document.metric, seeds)

    def lam_jets(self, seeds: Sequence[JetArray], point: EvalPoint | None = None) -> JetArray:
        """Frame matrix ``lam[i, a]`` as jets over the variables of ``seeds``."""
        if self.document.frame is not None:
            return self._grid_jets(self.document.frame, seeds)
        g = self.metric_jets(seeds)
        check_positive_definite(g.value, point)
        lower = jets.cholesky(g)
        return jets.inv(lower)


def check_positive_definite(g: np.ndarray, point=None, tol: float = PD_TOL):
    minors = leading_minors(g)
    for k, m in enumerate(minors, start=1):
        if not m > tol:
            raise NotPositiveDefiniteError(point, k, float(m))


def leading_minors(g: np.ndarray) -> list[float]:
    return [float(np.linalg.det(g[:k, :k])) for k in range(1, g.shape[0] + 1)]


@dataclass
class FrameJets:
    """Jets of the frame, coframe and metric at one point."""

    point: EvalPoint
    order: int
    seeds: list
    lam: JetArray
    cof: JetArray
    g: JetArray
    ginv: JetArray


def frame_jets(frame: Frame, point: EvalPoint, order: int | None = None, seeds=None) -> FrameJets:
    order = jets.max_order() if order is None else order
    if point.n != frame.n:
        raise FPError(f"point has dimension {point.n}, frame has dimension {frame.n}")
    if seeds is None:
        seeds = jets.jet_lift(point, order)
    lam = frame.lam_jets(seeds, point)
    d = float(np.linalg.det(lam.value))
    if not abs(d) > DET_TOL:
        raise SingularFrameError(point, d)
    cof = jets.inv(lam).transpose()
    g = jets.einsum("im,in->mn", cof, cof)
    ginv = jets.einsum("ia,ib->ab", lam, lam)
    return FrameJets(point, lam.order, list(seeds), lam, cof, g, ginv)


def frame_matrix(frame: Frame, point: EvalPoint, order: int | None = None) -> Tensor:
    fj = frame_jets(frame, point, order)
    return tensor_from_jets(fj.lam, "mu", point, "lambda", ("i", "alpha"))


def coframe_matrix(frame: Frame, point: EvalPoint) -> Tensor:
    fj = frame_jets(frame, point, 0)
    return tensor_from_jets(fj.cof, "ml", point, "lambda_lower", ("i", "mu"))


def metric(frame: Frame, point: EvalPoint) -> Tensor:
    fj = frame_jets(frame, point, 0)
    return tensor_from_jets(fj.g, "ll", point, "g", ("mu", "nu"))


def inverse_metric(frame: Frame, point: EvalPoint) -> Tensor:
    fj = frame_jets(frame, point, 0)
    return tensor_from_jets(fj.ginv, "uu", point, "g_inv", ("mu", "nu"))


def lagrangian(frame: Frame, point: EvalPoint) -> float:
    """``L = g_mn y^m y^n``, computed as ``sum_i (lambda_i_m y^m)^2``."""
    cof = frame_jets(frame, point, 0).cof.value
    v = cof @ np.asarray(point.y)
    return float(v @ v)


def finsler_function(frame: Frame, point: EvalPoint) -> float:
    return math.sqrt(lagrangian(frame, point))


def frame_from_metric(
    metric_grid: Sequence[Sequence[Expr]],
    probes: Iterable[EvalPoint] | None = None,
    name: str = "",
    tol: float = 1e-10,
) -> FrameDocument:
    """Wrap a metric grid ``g_mn(x, y)`` as a frame document.

    The resulting frame has the Cholesky factor of ``g`` as its coframe.  At
    every probe point ``g`` must be symmetric positive definite and the
    round-trip ``metric(frame) == g`` must hold to ``tol``.
    """
    grid = tuple(tuple(r) for r in metric_grid)
    n = len(grid)
    if any(len(r) != n for r in grid):
        raise FPError("metric grid must be square")
    doc = FrameDocument(n=n, metric=grid, name=name)
    frame = Frame(doc)
    if probes is None:
        probes = sample_points(n, 20, seed=0)
    for p in probes:
        seeds = jets.jet_lift(p, 0)
        g = frame.metric_jets(seeds).value
        if np.max(np.abs(g - g.T)) > tol * (1 + np.max(np.abs(g))):
            raise FPError(f"metric is not symmetric at {p}")
        check_positive_definite(g, p)
        back = frame_jets(frame, p, 0).g.value
        err = np.max(np.abs(back - g))
        if err > tol * (1 + np.max(np.abs(g))):
            raise FPError(f"metric round-trip residual {err:.3e} at {p}")
    return doc


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_points(
    n: int,
    count: int = 100,
    seed: int = 0,
    y_per_x: int = 1,
    axis_cone: float = 1e-3,
    x_range: float = 1.0,
    y_shell: tuple[float, float] = (0.5, 2.0),
) -> list[EvalPoint]:
    """Deterministic sample set from a PCG64 generator.

    ``x`` is uniform in ``[-x_range, x_range]^n``; ``y`` has a uniformly
    random direction (rejecting directions within ``axis_cone`` radians of a
    coordinate axis or coordinate hyperplane) and a radius uniform in
    ``y_shell``.  Points come in groups of ``y_per_x`` sharing one ``x``.
    """
    if count < 1:
        raise SamplingError("need at least one sample")
    if y_per_x < 1:
        raise SamplingError("y_per_x must be positive")
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        x = rng.uniform(-x_range, x_range, size=n)
        for _ in range(y_per_x):
            while True:
                d = rng.standard_normal(n)
                d /= np.linalg.norm(d)
                if np.min(np.abs(d)) > math.sin(axis_cone):
                    break
            r = rng.uniform(*y_shell)
            points.append(EvalPoint(tuple(x), tuple(r * d)))
            if len(points) == count:
                break
    return points


# ---------------------------------------------------------------------------
# structure validation
# ---------------------------------------------------------------------------

DEFAULT_TOLERANCES = {
    "frame_invertibility": 1e-10,
    "homogeneity": 1e-9,
    "lagrange_condition": 1e-9,
    "total_symmetry": 1e-9,
    "positive_definite": 0.0,
}


@dataclass
class ConditionRecord:
    condition: str
    max_residual: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class ValidationReport:
    records: list[ConditionRecord]
    samples: int
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> ConditionRecord:
        for r in self.records:
            if r.condition == name:
                return r
        raise KeyError(name)

    def _ok(self, *names) -> bool:
        return all(self[n].passed for n in names)

    @property
    def gap_valid(self) -> bool:
        return self._ok("frame_invertibility")

    @property
    def lagrange_valid(self) -> bool:
        return self._ok("frame_invertibility", "lagrange_condition")

    @property
    def finsler_valid(self) -> bool:
        return self._ok(
            "frame_invertibility", "lagrange_condition", "total_symmetry",
            "homogeneity", "positive_definite",
        )

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "conditions": [r.to_dict() for r in self.records],
            "gap_valid": self.gap_valid,
            "lagrange_valid": self.lagrange_valid,
            "finsler_valid": self.finsler_valid,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def structure_residuals(fj: FrameJets) -> dict[str, float]:
    """Pointwise residuals of the FP-structure conditions."""
    n = fj.point.n
    y = np.asarray(fj.point.y)
    ydirs = list(range(n, 2 * n))
    lam0 = fj.lam.value
    cof0 = fj.cof.value
    dual = max(
        np.max(np.abs(lam0.T @ cof0 - np.eye(n))),
        np.max(np.abs(lam0 @ cof0.T - np.eye(n))),
    )
    dlam = fj.lam.grad(ydirs).value  # [i, a, b] = d/dy^b lam_i^a
    euler = np.max(np.abs(np.einsum("iab,b->ia", dlam, y)))
    dg = fj.g.grad(ydirs).value  # [m, n, a] = d/dy^a g_mn
    lagr = np.max(np.abs(np.einsum("mna,m->na", dg, y)))
    sym = 0.0
    for perm in itertools.permutations(range(3)):
        sym = max(sym, np.max(np.abs(dg - dg.transpose(perm))))
    minors = leading_minors(fj.g.value)
    pd = max(0.0, PD_TOL - min(minors))
    return {
        "frame_invertibility": float(dual),
        "homogeneity": float(euler),
        "lagrange_condition": float(lagr),
        "total_symmetry": float(sym),
        "positive_definite": float(pd),
    }


def validate_structure(
    frame: Frame, samples: Sequence[EvalPoint], tolerances: dict | None = None
) -> ValidationReport:
    """Evaluate every FP-structure condition at every sample.

    Failures are recorded, not raised; a singular frame at a sample gives an
    infinite invertibility residual.
    """
    if not samples:
        raise SamplingError("validate_structure needs at least one sample")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    worst = {k: 0.0 for k in DEFAULT_TOLERANCES}
    warnings = []
    if frame.uses_abs:
        warnings.append("frame uses abs(); it is not smooth where its argument vanishes")
    for p in samples:
        try:
            fj = frame_jets(frame, p, 1)
        except (SingularFrameError, NotPositiveDefiniteError):
            for k in worst:
                worst[k] = math.inf
            continue
        for k, v in structure_residuals(fj).items():
            worst[k] = max(worst[k], v)
    records = [ConditionRecord(k, worst[k], tol[k], worst[k] <= tol[k]) for k in DEFAULT_TOLERANCES]
    return ValidationReport(records, len(samples), warnings)
