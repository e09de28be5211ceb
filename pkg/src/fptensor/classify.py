"""Special FP-classes, their structure tables, and the chart-change law.

Class membership is decided numerically at sample points:

* FP-Landsberg   ``P°^a_mns y^m = 0``
* FP-Berwald     ``P° = 0`` and the canonical ``Gamma`` depends on ``x`` only
* FP-Minkowskian ``P° = 0 = R°`` (curvature criteria; no chart search)
* FP-Riemannian  canonical ``C = 0``

``P°`` and ``R°`` are the hv- and h-curvatures of the Cartan connection.  A
quantity is "x-only" when its y-derivatives vanish at every sample and its
values agree across samples sharing the same ``x``.
"""
from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets
from .connections import ALL_KINDS, ConnectionKind, FPContext
from .curvature import alternate
from .dsl import Expr, evaluate_on, parse_expression
from .errors import FPError, SamplingError
from .frame import Frame, sample_points, validate_structure
from .identities import (
    DEFAULT_TOL,
    E,
    Geometry,
    IdentityResidual,
    Pair,
    _cartan_r,
    dual_hv_printed,
    scaled_residual,
)
from .jets import EvalPoint, JetArray, jet_lift

K = ConnectionKind

LANDSBERG = "FP-Landsberg"
BERWALD = "FP-Berwald"
MINKOWSKIAN = "FP-Minkowskian"
RIEMANNIAN = "FP-Riemannian"
CLASSES = (LANDSBERG, BERWALD, MINKOWSKIAN, RIEMANNIAN)

HOLDS, FAILS, UNDETERMINED = "holds", "fails", "undetermined"

# (smaller class, larger class)
INCLUSIONS = ((RIEMANNIAN, BERWALD), (BERWALD, LANDSBERG), (MINKOWSKIAN, LANDSBERG))

TABLE_CLASS = {"table-2": BERWALD, "table-3": MINKOWSKIAN, "table-4": RIEMANNIAN}

MIN_Y_PER_X = 3


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def group_by_x(samples: Sequence[EvalPoint]) -> "OrderedDict[tuple, list[EvalPoint]]":
    groups: OrderedDict[tuple, list[EvalPoint]] = OrderedDict()
    for p in samples:
        groups.setdefault(tuple(p.x), []).append(p)
    return groups


def check_multiplicity(samples: Sequence[EvalPoint], minimum: int = MIN_Y_PER_X) -> None:
    for x, pts in group_by_x(samples).items():
        distinct = {tuple(p.y) for p in pts}
        if len(distinct) < minimum:
            raise SamplingError(
                f"x = {list(x)} has {len(distinct)} distinct y value(s); "
                f"classification needs at least {minimum} per x"
            )


def classification_samples(n: int, count: int = 100, seed: int = 0, y_per_x: int = 4) -> list[EvalPoint]:
    """Samples in complete groups of ``y_per_x`` points sharing an ``x``."""
    groups = max(1, math.ceil(count / y_per_x))
    return sample_points(n, groups * y_per_x, seed=seed, y_per_x=y_per_x)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass
class Condition:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class ClassRecord:
    name: str
    conditions: list[Condition]
    verdict: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "class": self.name,
            "conditions": [c.to_dict() for c in self.conditions],
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


@dataclass
class Classification:
    records: list[ClassRecord]
    inclusions: dict[str, bool]
    metric_x_only: ClassRecord
    samples: int
    natural_chart: bool

    def __getitem__(self, name: str) -> ClassRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def verdict(self, name: str) -> str:
        return self[name].verdict

    @property
    def consistent(self) -> bool:
        return all(self.inclusions.values())

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "natural_chart": "declared" if self.natural_chart else "not declared",
            "classes": [r.to_dict() for r in self.records],
            "metric_x_only": self.metric_x_only.to_dict(),
            "inclusions": dict(self.inclusions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _zero_residual(j) -> float:
    v = j.value if isinstance(j, JetArray) else np.asarray(j)
    return scaled_residual(v, np.zeros_like(v))


def pointwise_conditions(ctx: FPContext) -> dict[str, float]:
    """Residuals of every pointwise defining condition at one point."""
    G = Geometry(ctx)
    cartan = G.curv(K.CARTAN_MIRON)
    landsberg = E("amns,m->ans", cartan.P, G.y)
    return {
        "Cartan P y = 0": _zero_residual(landsberg),
        "Cartan P = 0": _zero_residual(cartan.P),
        "Cartan R = 0": _zero_residual(cartan.R),
        "Gamma y-derivatives vanish": _zero_residual(ctx.dy(G.Gamma)),
        "C = 0": _zero_residual(G.C),
        "metric y-derivatives vanish": _zero_residual(ctx.dy(ctx.g)),
    }


def _variation(values: list[np.ndarray]) -> float:
    ref = values[0]
    return max((scaled_residual(v, ref) for v in values[1:]), default=0.0)


def _class_tol(tolerances, name: str) -> float:
    if tolerances is None:
        return DEFAULT_TOL
    if isinstance(tolerances, (int, float)):
        return float(tolerances)
    return float(tolerances.get(name, tolerances.get("default", DEFAULT_TOL)))


def _collect(frame: Frame, samples: Sequence[EvalPoint], with_variation: bool) -> dict[str, float]:
    worst: dict[str, float] = {}
    gamma_groups: dict[tuple, list[np.ndarray]] = {}
    metric_groups: dict[tuple, list[np.ndarray]] = {}
    for p in samples:
        ctx = FPContext(frame, p)
        for k, v in pointwise_conditions(ctx).items():
            worst[k] = max(worst.get(k, 0.0), v)
        if with_variation:
            gamma_groups.setdefault(tuple(p.x), []).append(ctx.canonical_gamma.value)
            metric_groups.setdefault(tuple(p.x), []).append(ctx.g.value)
    if with_variation:
        worst["Gamma variation across y"] = max(_variation(v) for v in gamma_groups.values())
        worst["metric variation across y"] = max(_variation(v) for v in metric_groups.values())
    return worst


_CLASS_CONDITIONS = {
    LANDSBERG: ("Cartan P y = 0",),
    BERWALD: ("Cartan P = 0", "Gamma y-derivatives vanish", "Gamma variation across y"),
    MINKOWSKIAN: ("Cartan P = 0", "Cartan R = 0"),
    RIEMANNIAN: ("C = 0",),
}


def _record(name: str, keys, worst: dict[str, float], tol: float, valid: bool, notes) -> ClassRecord:
    conds = [Condition(k, worst[k], tol) for k in keys if k in worst]
    if not valid or any(math.isnan(c.residual) for c in conds):
        verdict = UNDETERMINED
    else:
        verdict = HOLDS if all(c.passed for c in conds) else FAILS
    return ClassRecord(name, conds, verdict, list(notes))


def classify(
    frame: Frame,
    samples: Sequence[EvalPoint],
    tolerances: dict | float | None = None,
    natural_chart: bool | None = None,
) -> Classification:
    """Decide membership in each special class at the given samples.

    ``tolerances`` is a single number or a mapping from class name (or
    ``"default"``) to tolerance.  Every ``x`` must carry at least three
    distinct ``y`` values.
    """
    if not samples:
        raise SamplingError("classification needs samples")
    check_multiplicity(samples)
    natural = frame.natural_chart if natural_chart is None else natural_chart
    report = validate_structure(frame, samples)
    valid = report.finsler_valid
    notes_all = [] if valid else ["frame is not Finsler-valid at the samples"]
    worst = _collect(frame, samples, True) if report.gap_valid else {}

    records = []
    for name in CLASSES:
        notes = list(notes_all)
        if name == MINKOWSKIAN:
            notes.append("curvature criteria only; natural chart " + ("declared" if natural else "not declared"))
        if name == BERWALD:
            notes.append("y-independence of Gamma is certified in the supplied chart only")
        records.append(_record(name, _CLASS_CONDITIONS[name], worst, _class_tol(tolerances, name), valid, notes))
    metric = _record(
        "metric x-only",
        ("metric y-derivatives vanish", "metric variation across y"),
        worst,
        _class_tol(tolerances, "metric x-only"),
        valid,
        ["metric-level property; FP-Riemannian is decided by the frame, not the metric"],
    )
    verdicts = {r.name: r.verdict for r in records}
    inclusions = {
        f"{small} => {large}": verdicts[small] != HOLDS or verdicts[large] == HOLDS
        for small, large in INCLUSIONS
    }
    return Classification(records, inclusions, metric, len(samples), natural)


# ---------------------------------------------------------------------------
# structure tables
# ---------------------------------------------------------------------------

def _z(j) -> np.ndarray:
    return np.zeros(j.shape)


def _dual_r_rhs(G: Geometry) -> JetArray:
    # T^a_ns|m placed at [a, m, n, s]
    return E("ansm->amns", G.hc(G.T, "ull"))


def _dual_s_rhs(G: Geometry) -> JetArray:
    return E("ansm->amns", G.vc(G.S, "ull"))


def _table_2(G: Geometry, natural: bool) -> list[Pair]:
    ctx = G.ctx
    c, can, d, b = (G.tors(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.DUAL, K.BERWALD))
    cc, canc, bc = (G.curv(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.BERWALD))
    A = G.A
    out = [
        ("cartan T", c.T.value, _z(c.T)),
        ("cartan C", c.C.value, (G.C - G.B).value),
        ("cartan P", c.P.value, _z(c.P)),
        ("cartan S", c.S.value, _z(c.S)),
        ("canonical P", can.P.value, (-A).value),
        ("dual T", d.T.value, (-G.T).value),
        ("dual C", d.C.value, G.C.value.swapaxes(1, 2)),
        ("dual P", d.P.value, -A.value.swapaxes(1, 2)),
        ("dual S", d.S.value, (-G.S).value),
        ("berwald T", b.T.value, _z(b.T)),
        ("berwald C", b.C.value, _z(b.C)),
        ("berwald P", b.P.value, _z(b.P)),
        ("berwald S", b.S.value, _z(b.S)),
    ]
    for k in ALL_KINDS:
        out.append((f"{k.value} R torsion", G.tors(k).R.value, G.R.value))
    out += [
        ("cartan P curvature", cc.P.value, _z(cc.P)),
        ("canonical R curvature", canc.R.value, _z(canc.R)),
        ("canonical P curvature", canc.P.value, _z(canc.P)),
        ("canonical S curvature", canc.S.value, _z(canc.S)),
        ("berwald P curvature", bc.P.value, _z(bc.P)),
        ("berwald S curvature", bc.S.value, _z(bc.S)),
        # horizontal Cartan and Berwald coefficients coincide
        ("cartan F = berwald F", ctx.delta_christoffel.value, ctx.berwald_coeffs.value),
        # x-only objects
        ("A x-only", ctx.dy(A).value, _z(ctx.dy(A))),
        ("Gamma x-only", ctx.dy(G.Gamma).value, _z(ctx.dy(G.Gamma))),
        ("dual F x-only", ctx.dy(d_f := ctx.connection(K.DUAL).F).value, _z(ctx.dy(d_f))),
        ("T x-only", ctx.dy(G.T).value, _z(ctx.dy(G.T))),
        ("P x-only", ctx.dy(G.P).value, _z(ctx.dy(G.P))),
    ]
    return out


def _table_3(G: Geometry, natural: bool) -> list[Pair]:
    ctx = G.ctx
    c, can, d, b = (G.tors(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.DUAL, K.BERWALD))
    cc, canc, dc, bc = (G.curv(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.DUAL, K.BERWALD))
    out: list[Pair] = []
    # vanishing of the (v)h-torsion for every connection
    for k in ALL_KINDS:
        out.append((f"{k.value} R torsion", G.tors(k).R.value, _z(G.R)))
    # every Berwald torsion and curvature vanishes
    for name, j in b.items():
        out.append((f"berwald {name}", j.value, _z(j)))
    for name, j in bc.items():
        out.append((f"berwald {name} curvature", j.value, _z(j)))
    # Cartan: only the (h)hv-torsion and the v-curvature survive
    out += [
        ("cartan T", c.T.value, _z(c.T)),
        ("cartan C", c.C.value, (G.C - G.B).value),
        ("cartan P", c.P.value, _z(c.P)),
        ("cartan S", c.S.value, _z(c.S)),
        ("cartan R curvature", cc.R.value, _z(cc.R)),
        ("cartan P curvature", cc.P.value, _z(cc.P)),
        ("dual T", d.T.value, (-G.T).value),
        ("dual C", d.C.value, G.C.value.swapaxes(1, 2)),
        ("dual S", d.S.value, (-G.S).value),
        ("canonical R curvature", canc.R.value, _z(canc.R)),
        ("canonical P curvature", canc.P.value, _z(canc.P)),
        ("canonical S curvature", canc.S.value, _z(canc.S)),
        ("dual R curvature", dc.R.value, _dual_r_rhs(G).value),
        ("dual S curvature", dc.S.value, _dual_s_rhs(G).value),
    ]
    if natural:
        Gm, A = G.Gamma, G.A
        cartan, berwald = ctx.connection(K.CARTAN_MIRON), ctx.connection(K.BERWALD)
        canonical, dual = ctx.connection(K.CANONICAL), ctx.connection(K.DUAL)
        n = G.n
        zero_h = np.zeros((n, n, n))
        g_dx = ctx.dx(ctx.g)
        c_dx = ctx.dx(G.C)
        dual_p = dual_hv_printed(G, -Gm)
        out += [
            ("natural: N = 0", G.N.value, _z(G.N)),
            ("natural: delta Christoffel = 0", ctx.delta_christoffel.value, zero_h),
            ("natural: berwald F = 0", berwald.F.value, zero_h),
            ("natural: cartan F = 0", cartan.F.value, zero_h),
            ("natural: cartan C = dot Christoffel", cartan.C.value, ctx.dot_christoffel.value),
            ("natural: cartan h-derivative of g is partial", G.hc(ctx.g, "ll", K.CARTAN_MIRON).value, g_dx.value),
            ("natural: berwald h-derivative of g is partial", G.hc(ctx.g, "ll", K.BERWALD).value, g_dx.value),
            ("natural: cartan h-derivative of C is partial", G.hc(G.C, "ull", K.CARTAN_MIRON).value, c_dx.value),
            ("natural: berwald h-derivative of C is partial", G.hc(G.C, "ull", K.BERWALD).value, c_dx.value),
            ("natural: canonical F = A", canonical.F.value, A.value),
            ("natural: dual F = A transposed", dual.F.value, A.value.swapaxes(1, 2)),
            ("natural: canonical P = -Gamma", can.P.value, (-Gm).value),
            ("natural: dual P = -Gamma transposed", d.P.value, -Gm.value.swapaxes(1, 2)),
            ("natural: dual P curvature",
             dc.P.value, (E("anms->ansm", dual_p) + E("ane,ems->ansm", G.S, G.T)).value),
        ]
    return out


def _table_3_variants(G: Geometry, natural: bool) -> dict[str, float]:
    c = G.tors(K.CARTAN_MIRON)
    out = {"cartan C printed (dot Christoffel - B)": scaled_residual(c.C.value, (G.ctx.dot_christoffel - G.B).value)}
    if natural:
        dc = G.curv(K.DUAL)
        printed = dual_hv_printed(G, -G.Gamma)
        out["natural: dual P curvature printed, label order"] = scaled_residual(dc.P.value, printed.value)
        out["natural: dual P curvature printed, slot order"] = scaled_residual(
            dc.P.value, E("anms->ansm", printed).value
        )
    return out


def _table_4(G: Geometry, natural: bool) -> list[Pair]:
    ctx = G.ctx
    c, can, d, b = (G.tors(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.DUAL, K.BERWALD))
    cc, canc, dc, bc = (G.curv(k) for k in (K.CARTAN_MIRON, K.CANONICAL, K.DUAL, K.BERWALD))
    gamma = ctx.formal_christoffel
    P, T = G.P, G.T
    cartan, berwald = ctx.connection(K.CARTAN_MIRON), ctx.connection(K.BERWALD)
    out: list[Pair] = [
        ("cartan T", c.T.value, _z(c.T)),
        ("cartan C", c.C.value, _z(c.C)),
        ("cartan P", c.P.value, _z(c.P)),
        ("cartan S", c.S.value, _z(c.S)),
        ("canonical C", can.C.value, _z(can.C)),
        ("canonical S", can.S.value, _z(can.S)),
        ("dual T", d.T.value, (-T).value),
        ("dual C", d.C.value, _z(d.C)),
        ("dual P", d.P.value, P.value.swapaxes(1, 2)),
        ("dual S", d.S.value, _z(d.S)),
        ("berwald T", b.T.value, _z(b.T)),
        ("berwald C", b.C.value, _z(b.C)),
        ("berwald P", b.P.value, _z(b.P)),
        ("berwald S", b.S.value, _z(b.S)),
    ]
    for k in ALL_KINDS:
        out.append((f"{k.value} R torsion", G.tors(k).R.value, G.R.value))
    for name, j in canc.items():
        out.append((f"canonical {name} curvature", j.value, _z(j)))
    for label, cs in (("cartan", cc), ("dual", dc), ("berwald", bc)):
        out.append((f"{label} P curvature", cs.P.value, _z(cs.P)))
        out.append((f"{label} S curvature", cs.S.value, _z(cs.S)))
    berwald_r = alternate(G.hc(P, "ull") + E("emn,aes->amns", P, P)) + E("ame,ens->amns", P, T)
    out += [
        ("dual R curvature", dc.R.value, _dual_r_rhs(G).value),
        ("cartan R curvature from gamma",
         cc.R.value, (alternate(ctx.delta(gamma) + E("emn,aes->amns", gamma, gamma))).value),
        ("cartan R curvature from A", cc.R.value, _cartan_r(G).value),
        ("berwald R curvature", bc.R.value, berwald_r.value),
        # Cartan and Berwald connections coincide, (gamma, N, 0)
        ("cartan F = gamma", cartan.F.value, gamma.value),
        ("berwald F = gamma", berwald.F.value, gamma.value),
        ("cartan C = 0", cartan.C.value, _z(cartan.C)),
        ("gamma x-only", ctx.dy(gamma).value, _z(ctx.dy(gamma))),
        # canonical and dual connections are (Gamma(x), N, 0) and transposed
        ("Gamma x-only", ctx.dy(G.Gamma).value, _z(ctx.dy(G.Gamma))),
        # contortions
        ("A x-only", ctx.dy(G.A).value, _z(ctx.dy(G.A))),
        ("B = 0", G.B.value, _z(G.B)),
        # frame, metric and Cartan tensor
        ("frame x-only", ctx.dy(ctx.lam).value, _z(ctx.dy(ctx.lam))),
        ("metric x-only", ctx.dy(ctx.g).value, _z(ctx.dy(ctx.g))),
        ("cartan tensor = 0", ctx.cartan_tensor.value, _z(ctx.cartan_tensor)),
        ("berwald coefficients = gamma", ctx.berwald_coeffs.value, gamma.value),
    ]
    return out


_TABLES = {"table-2": _table_2, "table-3": _table_3, "table-4": _table_4}
_TABLE_VARIANTS = {"table-3": _table_3_variants}


def _hypothesis(frame: Frame, cls: str, samples: Sequence[EvalPoint], tol: float) -> list[Condition]:
    groups = group_by_x(samples)
    with_variation = all(len({tuple(p.y) for p in pts}) >= MIN_Y_PER_X for pts in groups.values())
    worst = _collect(frame, samples, with_variation)
    return [Condition(k, worst[k], tol) for k in _CLASS_CONDITIONS[cls] if k in worst]


def verify_special_tables(
    frame: Frame,
    table: str,
    samples: Sequence[EvalPoint],
    tol: float | None = None,
    natural_chart: bool | None = None,
) -> IdentityResidual:
    """Check every cell of a special-space table after verifying its hypothesis.

    ``table`` is ``"table-2"`` (FP-Berwald), ``"table-3"`` (FP-Minkowskian) or
    ``"table-4"`` (FP-Riemannian); a class name is accepted too.  Claims that
    only hold in natural coordinates (table 3) are checked only when the
    chart is declared natural.
    """
    if table in CLASSES:
        table = {v: k for k, v in TABLE_CLASS.items()}[table]
    if table not in _TABLES:
        raise FPError(f"unknown table {table!r}")
    cls = TABLE_CLASS[table]
    t = DEFAULT_TOL if tol is None else tol
    natural = frame.natural_chart if natural_chart is None else natural_chart
    if not samples:
        raise SamplingError("table checks need samples")

    report = validate_structure(frame, samples)
    if not report.finsler_valid:
        return IdentityResidual(table, math.nan, t, len(samples), False,
                                "frame is not Finsler-valid at the samples")
    hyp = _hypothesis(frame, cls, samples, t)
    failed = [c for c in hyp if not c.passed]
    if failed:
        detail = ", ".join(f"{c.name}: {c.residual:.3e}" for c in failed)
        return IdentityResidual(table, math.nan, t, len(samples), False,
                                f"hypothesis not met: {cls} ({detail})")

    parts: dict[str, float] = {}
    variants: dict[str, float] = {}
    for p in samples:
        G = Geometry(FPContext(frame, p))
        for label, l, r in _TABLES[table](G, natural):
            parts[label] = max(parts.get(label, 0.0), scaled_residual(l, r))
        if table in _TABLE_VARIANTS:
            for label, v in _TABLE_VARIANTS[table](G, natural).items():
                variants[label] = max(variants.get(label, 0.0), v)
    worst = max(parts.values(), default=0.0)
    notes = [f"hypothesis {cls} verified"]
    if table == "table-3" and not natural:
        notes.append("natural-coordinate claims skipped: chart not declared natural")
    return IdentityResidual(table, worst, t, len(samples), worst <= t, parts=parts,
                            variants=variants, notes=notes)


# ---------------------------------------------------------------------------
# chart changes
# ---------------------------------------------------------------------------

class ChartMap:
    """A coordinate change ``x' = phi(x)``, written as ``n`` expressions in
    ``x1..xn``; the fibre coordinates follow ``y' = (d phi/dx) y``."""

    def __init__(self, exprs: Sequence[Expr | str], n: int):
        if len(exprs) != n:
            raise FPError(f"chart map needs {n} expressions, got {len(exprs)}")
        parsed = []
        for e in exprs:
            e = parse_expression(e, n) if isinstance(e, str) else e
            parsed.append(e)
        self.exprs = tuple(parsed)
        self.n = n

    @classmethod
    def identity(cls, n: int) -> "ChartMap":
        return cls([f"x{i + 1}" for i in range(n)], n)

    @classmethod
    def from_frame(cls, frame: Frame) -> "ChartMap":
        if frame.document.chart_map is None:
            raise FPError(f"frame {frame.name!r} declares no chart_map")
        return cls(frame.document.chart_map, frame.n)

    def image(self, seeds: Sequence[JetArray]) -> JetArray:
        """``phi`` evaluated on jets (``seeds`` holds the x-jets, repeated as
        dummy y-jets)."""
        full = list(seeds) + list(seeds)
        ref = seeds[0]
        return jets.stack([jets.as_jet(evaluate_on(e, full), ref.nvars, ref.order) for e in self.exprs])

    def jacobian(self, x: Sequence[float]) -> np.ndarray:
        """``p[a', a] = d x'^a' / d x^a`` at ``x``."""
        seeds = jet_lift(EvalPoint(tuple(x), tuple(x)), 1)[: self.n]
        return self.image(seeds).grad(range(self.n)).value

    def inverse_jets(self, x0: Sequence[float], seeds_new: Sequence[JetArray]) -> JetArray:
        """Jets of ``phi^-1`` about ``phi(x0)`` in the variables of
        ``seeds_new`` (whose first ``n`` entries are the new x-coordinates)."""
        u = jets.stack(list(seeds_new[: self.n]))
        nvars, order = u.nvars, u.order
        p0 = self.jacobian(x0)
        if abs(np.linalg.det(p0)) <= 1e-12:
            raise FPError(f"chart Jacobian is singular at x = {list(x0)}")
        p0_inv = np.linalg.inv(p0)
        psi = JetArray.constant(np.asarray(x0, dtype=float), nvars, order)
        # each Newton step with the frozen Jacobian gains at least one order
        for _ in range(order + 2):
            resid = u - self.image([psi[i] for i in range(self.n)])
            psi = psi + E("ab,b->a", p0_inv, resid)
        return psi


class ChartedFrame(Frame):
    """``frame`` expressed in the coordinates of ``chart``: ``lam'_i^a' =
    p^a'_a lam_i^a`` evaluated at the pre-image point."""

    def __init__(self, frame: Frame, chart: ChartMap, x0: Sequence[float]):
        super().__init__(frame.document)
        self.base = frame
        self.chart = chart
        self.x0 = tuple(float(v) for v in x0)

    def lam_jets(self, seeds, point=None):
        n = self.n
        order = seeds[0].order
        # one extra order, consumed by the Jacobian of the inverse map
        lifted = jet_lift(EvalPoint(tuple(s.value for s in seeds[:n]), tuple(s.value for s in seeds[n:])),
                          order + 1, cap=order + 1)
        psi = self.chart.inverse_jets(self.x0, lifted)
        dpsi = psi.grad(range(n))  # [m, b'] = d x^m / d x'^b'
        p = jets.inv(dpsi)  # [a', m]
        v = jets.stack(lifted[n:]).truncate(order)
        y_old = E("mb,b->m", dpsi, v)
        x_old = psi.truncate(order)
        base_seeds = [x_old[i] for i in range(n)] + [y_old[i] for i in range(n)]
        lam = self.base.lam_jets(base_seeds, point)
        return E("ia,ba->ib", lam, p)


def transform_point(chart: ChartMap, point: EvalPoint) -> EvalPoint:
    p = chart.jacobian(point.x)
    return EvalPoint(tuple(chart.image(_x_seeds(point)).value), tuple(p @ np.asarray(point.y)))


def _x_seeds(point: EvalPoint) -> list[JetArray]:
    return jet_lift(point, 0)[: point.n]


def barthel_two_routes(frame: Frame, chart: ChartMap, point: EvalPoint) -> tuple[np.ndarray, np.ndarray]:
    """``(N' recomputed in the new chart, N' from the transformation law)``."""
    n = frame.n
    old = FPContext(frame, point)
    new_point = transform_point(chart, point)
    new = FPContext(ChartedFrame(frame, chart, point.x), new_point, old.order - 1)
    # second derivatives of the inverse map at the new point
    lifted = jet_lift(new_point, 2)
    psi = chart.inverse_jets(point.x, lifted)
    dpsi = psi.grad(range(n))
    q = dpsi.value  # [m, b'] = p^m_b'
    hess = dpsi.grad(range(n)).value  # [m, b', s'] = p^m_{b' s'}
    p = np.linalg.inv(q)  # [a', m]
    y_new = np.asarray(new_point.y)
    law = p @ old.barthel.value @ q + np.einsum("am,mbs,s->ab", p, hess, y_new)
    return new.barthel.value, law


def chart_transform_check(
    frame: Frame,
    chart: ChartMap | None,
    samples: Sequence[EvalPoint],
    tol: float = DEFAULT_TOL,
) -> IdentityResidual:
    """Compare the Barthel connection recomputed in a new chart with the
    transformation law applied to the old one."""
    chart = ChartMap.from_frame(frame) if chart is None else chart
    if chart.n != frame.n:
        raise FPError("chart map dimension does not match the frame")
    if not samples:
        raise SamplingError("chart check needs samples")
    worst = 0.0
    for pt in samples:
        recomputed, law = barthel_two_routes(frame, chart, pt)
        worst = max(worst, scaled_residual(recomputed, law))
    return IdentityResidual("chart-change", worst, tol, len(samples), worst <= tol)
