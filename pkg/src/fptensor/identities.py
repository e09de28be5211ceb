"""Named identity checks relating the connections, torsions and curvatures.

Each identity evaluates pairs ``(lhs, rhs)`` at a point; the residual of a
pair is ``max|lhs - rhs| / (1 + max(|lhs|, |rhs|))`` and an identity's
residual is the maximum over its pairs and over all samples.

Unless stated otherwise ``T, C, R, P, S`` are the torsions of the canonical
connection, ``A, B`` the contortions, ``|`` and ``||`` the canonical h- and
v-covariant derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .connections import ALL_KINDS, ConnectionKind, FPContext
from .covariant import h_cov, v_cov
from .curvature import alternate, curvature_set, torsion_set
from .errors import FPError
from .frame import Frame, validate_structure
from .jets import EvalPoint, JetArray

K = ConnectionKind
DEFAULT_TOL = 1e-7

Pair = tuple[str, np.ndarray, np.ndarray]


def scaled_residual(lhs, rhs, scale: float | None = None) -> float:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = float(np.max(np.abs(lhs - rhs), initial=0.0))
    if scale is None:
        scale = max(float(np.max(np.abs(lhs), initial=0.0)), float(np.max(np.abs(rhs), initial=0.0)))
    return diff / (1.0 + scale)


@dataclass
class IdentityResidual:
    name: str
    residual: float
    tolerance: float
    samples: int
    passed: bool
    skipped_reason: str | None = None
    parts: dict[str, float] = field(default_factory=dict)
    variants: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "pass": self.passed,
        }
        if self.skipped_reason is not None:
            out["skipped_reason"] = self.skipped_reason
        if self.parts:
            out["parts"] = dict(self.parts)
        if self.variants:
            out["variants"] = dict(self.variants)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


class Geometry:
    """Short names for the canonical building blocks at one point."""

    def __init__(self, ctx: FPContext):
        self.ctx = ctx
        self.n = ctx.n
        can = torsion_set(ctx, K.CANONICAL)
        self.T, self.C, self.R, self.P, self.S = can.T, can.C, can.R, can.P, can.S
        self.Gamma = ctx.canonical_gamma
        self.A = ctx.contortion.A
        self.B = ctx.contortion.B
        self.N = ctx.barthel
        self.y = ctx.y

    def hc(self, x: JetArray, variance: str, kind: ConnectionKind = K.CANONICAL) -> JetArray:
        return h_cov(self.ctx, x, variance, self.ctx.connection(kind))

    def vc(self, x: JetArray, variance: str, kind: ConnectionKind = K.CANONICAL) -> JetArray:
        return v_cov(self.ctx, x, variance, self.ctx.connection(kind))

    def tors(self, kind):
        return torsion_set(self.ctx, kind)

    def curv(self, kind):
        return curvature_set(self.ctx, kind)

    def zero(self, shape) -> np.ndarray:
        return np.zeros(shape)


def E(spec: str, *ops) -> JetArray:
    return jets.einsum(spec, *ops)


# ---------------------------------------------------------------------------
# identity definitions
# ---------------------------------------------------------------------------

def _dual_torsions(G: Geometry) -> list[Pair]:
    d = G.tors(K.DUAL)
    return [
        ("T", d.T.value, -G.T.value),
        ("C", d.C.value, G.C.value.swapaxes(1, 2)),
        ("R", d.R.value, G.R.value),
        ("P", d.P.value, G.P.value.swapaxes(1, 2)),
        ("S", d.S.value, -G.S.value),
    ]


def dual_hv_printed(G: Geometry, P: JetArray | None = None) -> JetArray:
    """The printed dual hv-curvature expression, indexed by its labels ``[a, n, m, s]``:
    ``S^a_nm|s + T^a_sn||m - S^e_mn T^a_se + S^a_me T^e_sn + T^a_en C^e_sm + P^e_sm S^a_en``.
    ``P`` defaults to the canonical (v)hv-torsion."""
    T, S, C = G.T, G.S, G.C
    P = G.P if P is None else P
    return (
        G.hc(S, "ull")
        + E("asnm->anms", G.vc(T, "ull"))
        - E("emn,ase->anms", S, T)
        + E("ame,esn->anms", S, T)
        + E("aen,esm->anms", T, C)
        + E("esm,aen->anms", P, S)
    )


def dual_hv_rhs(G: Geometry) -> JetArray:
    """Dual hv-curvature ``P~[a, n, s, m]`` (h-derivative slot ``s``, v-derivative
    slot ``m``): the printed expression plus ``S^a_ne T^e_ms``."""
    return E("anms->ansm", dual_hv_printed(G)) + E("ane,ems->ansm", G.S, G.T)


def _dual_curvatures(G: Geometry) -> list[Pair]:
    T, C, R, S = G.T, G.C, G.R, G.S
    d = G.curv(K.DUAL)
    # R~^a_msn = T^a_sn|m + C^a_em R^e_sn + C^a_se R^e_nm + C^a_ne R^e_ms
    t_h = G.hc(T, "ull")  # [a, s, n, m]
    r_rhs = (
        E("asnm->amsn", t_h)
        + E("aem,esn->amsn", C, R)
        + E("ase,enm->amsn", C, R)
        + E("ane,ems->amsn", C, R)
    )
    # S~^a_msn = S^a_sn||m
    s_rhs = E("asnm->amsn", G.vc(S, "ull"))
    return [
        ("R", d.R.value, r_rhs.value),
        ("S", d.S.value, s_rhs.value),
        ("P", d.P.value, dual_hv_rhs(G).value),
    ]


def _dual_curvature_variants(G: Geometry) -> dict[str, float]:
    d = G.curv(K.DUAL).P.value
    printed = dual_hv_printed(G)
    slots = E("anms->ansm", printed).value
    return {
        "P printed, label order": scaled_residual(d, printed.value),
        "P printed, slot order": scaled_residual(d, slots),
        "P printed, slot order, opposite sign": scaled_residual(d, -slots),
    }


def _cartan_torsions(G: Geometry) -> list[Pair]:
    c = G.tors(K.CARTAN_MIRON)
    shape = c.T.shape
    return [
        ("T", c.T.value, G.zero(shape)),
        ("S", c.S.value, G.zero(shape)),
        ("C", c.C.value, (G.C - G.B).value),
        ("R", c.R.value, G.R.value),
        ("P", c.P.value, (G.P + G.A).value),
    ]


def _cartan_r(G: Geometry) -> JetArray:
    """``alt_(s,n){A^a_ms|n + A^e_mn A^a_es} + A^a_me T^e_sn + B^a_me R^e_sn``."""
    A, B, T, R = G.A, G.B, G.T, G.R
    inner = G.hc(A, "ull") + E("emn,aes->amsn", A, A)  # indexed [a, m, s, n]
    return (
        E("amsn->amns", inner - inner.swapaxes(2, 3))
        + E("ame,esn->amns", A, T)
        + E("ame,esn->amns", B, R)
    )


def _cartan_p(G: Geometry, printed: bool = False) -> JetArray:
    """``B^a_ms|n - A^a_mn||s - A^a_me C^e_ns - B^e_ms A^a_en + B^a_es A^e_mn
    - B^a_me P^e_sn``.  The printed form adds ``T^e_sn (C - B)^a_me`` and
    contracts the last term as ``P^e_ns``."""
    A, B, T, C, P = G.A, G.B, G.T, G.C, G.P
    out = (
        E("amsn->amns", G.hc(B, "ull"))
        - G.vc(A, "ull")
        - E("ame,ens->amns", A, C)
        - E("ems,aen->amns", B, A)
        + E("aes,emn->amns", B, A)
    )
    if printed:
        return out + E("esn,ame->amns", T, C - B) - E("ame,ens->amns", B, P)
    return out - E("ame,esn->amns", B, P)


def _cartan_s(G: Geometry, printed: bool = False) -> JetArray:
    """``-alt_(n,s){B^a_mn||s + B^e_ms B^a_en} - B^a_me S^e_ns``; the printed
    form has the opposite overall sign."""
    B, S = G.B, G.S
    out = alternate(G.vc(B, "ull") + E("ems,aen->amns", B, B)) + E("ame,ens->amns", B, S)
    return out if printed else -out


def _cartan_curvatures(G: Geometry) -> list[Pair]:
    c = G.curv(K.CARTAN_MIRON)
    return [
        ("R", c.R.value, _cartan_r(G).value),
        ("P", c.P.value, _cartan_p(G).value),
        ("S", c.S.value, _cartan_s(G).value),
    ]


def _cartan_curvature_variants(G: Geometry) -> dict[str, float]:
    c = G.curv(K.CARTAN_MIRON)
    return {
        "P printed": scaled_residual(c.P.value, _cartan_p(G, printed=True).value),
        "S printed": scaled_residual(c.S.value, _cartan_s(G, printed=True).value),
    }


def _berwald_torsions(G: Geometry) -> list[Pair]:
    b = G.tors(K.BERWALD)
    z = G.zero(b.T.shape)
    return [("T", b.T.value, z), ("C", b.C.value, z), ("R", b.R.value, G.R.value),
            ("P", b.P.value, z), ("S", b.S.value, z)]


def _berwald_curvatures(G: Geometry) -> list[Pair]:
    T, C, R, P = G.T, G.C, G.R, G.P
    b = G.curv(K.BERWALD)
    p_h = G.hc(P, "ull")  # [a, m, n, s] = P^a_mn|s
    r_rhs = alternate(p_h + E("emn,aes->amns", P, P)) + E("ame,ens->amns", P, T) - E("ame,ens->amns", C, R)
    # P-bar^a_nms = d/dy^s P^a_nm + d/dy^s Gamma^a_nm
    p_rhs = G.ctx.dy(P) + G.ctx.dy(G.Gamma)
    return [
        ("R", b.R.value, r_rhs.value),
        ("S", b.S.value, G.zero(b.S.shape)),
        ("P", b.P.value, p_rhs.value),
    ]


def _contortion_torsion(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    A, B = ctx.lower(G.A), ctx.lower(G.B)
    T, s = ctx.lower(G.T), ctx.lower(G.S)

    def combo(t):
        return 0.5 * (t + E("snm->mns", t) + E("nsm->mns", t))

    return [("A", A.value, combo(T).value), ("B", B.value, combo(s).value)]


def _shared_r(G: Geometry) -> list[Pair]:
    R = G.R.value
    return [(k.value, G.tors(k).R.value, R) for k in ALL_KINDS]


def _canonical_flat(G: Geometry) -> list[Pair]:
    c = G.curv(K.CANONICAL)
    return [(name, j.value, G.zero(j.shape)) for name, j in c.items()]


def canonical_p(G: Geometry, M: JetArray) -> JetArray:
    """``y^b [C_|b - B_|b - A^a_eb M^e_mn + A^e_mb M^a_en + A^e_nb M^a_me] - A``."""
    A = G.A
    bracket = (
        G.hc(G.C, "ull")
        - G.hc(G.B, "ull")
        - E("aeb,emn->amnb", A, M)
        + E("emb,aen->amnb", A, M)
        + E("enb,ame->amnb", A, M)
    )
    return E("amnb,b->amn", bracket, G.y) - A


def _canonical_torsions(G: Geometry) -> list[Pair]:
    C, Gm = G.C, G.Gamma
    return [
        ("T", G.T.value, (Gm - Gm.swapaxes(1, 2)).value),
        ("C", G.C.value, E("ia,imn->amn", G.ctx.lam, G.ctx.dy(G.ctx.cof)).value),
        ("P", G.P.value, canonical_p(G, G.C - G.B).value),
        ("S", G.S.value, (C - C.swapaxes(1, 2)).value),
    ]


def _canonical_torsion_variants(G: Geometry) -> dict[str, float]:
    return {"P printed (C + B)": scaled_residual(G.P.value, canonical_p(G, G.C + G.B).value)}


def _connection_expressions(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    return [
        ("Cartan F", ctx.delta_christoffel.value, (G.Gamma - G.A).value),
        ("Cartan C", ctx.dot_christoffel.value, (G.C - G.B).value),
        ("G", ctx.berwald_coeffs.value, (G.Gamma + G.P).value),
        ("Gamma~", ctx.connection(K.DUAL).F.value, G.Gamma.value.swapaxes(1, 2)),
        ("C~", ctx.connection(K.DUAL).C.value, G.C.value.swapaxes(1, 2)),
    ]


def _interchange(G: Geometry) -> list[Pair]:
    """``X_°|b = X_|b - X^e_mn A^a_eb + X^a_en A^e_mb + X^a_me A^e_nb`` for
    several (1,2) fields."""
    A = G.A
    out = []
    fields = {"C": G.C, "T": G.T, "P": G.P, "S": G.S, "B": G.B}
    for label, X in fields.items():
        lhs = G.hc(X, "ull", K.CARTAN_MIRON)
        rhs = (
            G.hc(X, "ull")
            - E("emn,aeb->amnb", X, A)
            + E("aen,emb->amnb", X, A)
            + E("ame,enb->amnb", X, A)
        )
        out.append((label, lhs.value, rhs.value))
    return out


def _cartan_axioms(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    conn = ctx.connection(K.CARTAN_MIRON)
    F, C = conn.F, conn.C
    n = G.n
    return [
        ("C1", G.N.value, E("abm,m->ab", F, G.y).value),
        ("C2", G.hc(ctx.g, "ll", K.CARTAN_MIRON).value, np.zeros((n, n, n))),
        ("C3", G.vc(ctx.g, "ll", K.CARTAN_MIRON).value, np.zeros((n, n, n))),
        ("C4", F.value, F.value.swapaxes(1, 2)),
        ("C5", C.value, C.value.swapaxes(1, 2)),
    ]


def _berwald_axioms(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    conn = ctx.connection(K.BERWALD)
    F = conn.F
    n = G.n
    # F = sqrt(L): delta F = delta L / (2F)
    dL = ctx.delta(ctx.lagrangian).value
    f = math.sqrt(ctx.lagrangian.value)
    return [
        ("B1", G.N.value, E("abm,m->ab", F, G.y).value),
        ("B2", dL / (2 * f), np.zeros(n)),
        ("B3", F.value, F.value.swapaxes(1, 2)),
        ("B4", conn.C.value, np.zeros((n, n, n))),
        ("B5", F.value, ctx.dy(G.N).value.swapaxes(1, 2)),
    ]


def _ap_condition(G: Geometry) -> list[Pair]:
    lam = G.ctx.lam
    z = np.zeros(lam.shape + (G.n,))
    return [("h", G.hc(lam, "mu").value, z), ("v", G.vc(lam, "mu").value, z)]


def _miron_coframe(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    conn = ctx.connection(K.CARTAN_MIRON)
    h = h_cov(ctx, ctx.cof, "ml", conn)
    v = v_cov(ctx, ctx.cof, "ml", conn)
    lam = ctx.lam
    a_route = E("ia,imn->amn", lam, h)
    b_route = E("ia,imn->amn", lam, v)
    return [
        ("A", a_route.value, G.A.value),
        ("B", b_route.value, G.B.value),
        ("Gamma", (ctx.delta_christoffel + a_route).value, G.Gamma.value),
        ("C", (ctx.dot_christoffel + b_route).value, G.C.value),
    ]


def _barthel_routes(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    h, _ = (h_cov(ctx, ctx.cof, "ml", ctx.connection(K.CARTAN_MIRON)), None)
    blocks = E("b,ia,ibm->am", G.y, ctx.lam, ctx.delta(ctx.cof) - h)
    return [
        ("Cartan F route", G.N.value, E("b,abm->am", G.y, ctx.delta_christoffel).value),
        ("Gamma - A route", G.N.value, E("b,abm->am", G.y, G.Gamma - G.A).value),
        ("building blocks", G.N.value, blocks.value),
    ]


def _metric_coincidence(G: Geometry) -> list[Pair]:
    ctx = G.ctx
    hess = ctx.dy(ctx.dy(ctx.lagrangian)) * 0.5
    foot = E("im,m->i", ctx.cof, G.y)
    return [
        ("hessian", ctx.g.value, hess.value),
        ("square sum", np.array(ctx.lagrangian.value), np.array(float(np.sum(foot.value ** 2)))),
    ]


def _cartan_tensor(G: Geometry) -> list[Pair]:
    c = G.ctx.cartan_tensor
    v = c.value
    n = G.n
    return [
        ("symmetric 01", v, v.swapaxes(0, 1)),
        ("symmetric 12", v, v.swapaxes(1, 2)),
        ("y-contraction", E("bmn,b->mn", c, G.y).value, np.zeros((n, n))),
        ("raised", G.ctx.dot_christoffel.value, E("ab,bmn->amn", G.ctx.ginv, c).value),
    ]


def _table_1(G: Geometry) -> list[Pair]:
    out = []
    for label, lhs, rhs in _cartan_torsions(G) + _dual_torsions(G) + _berwald_torsions(G):
        out.append((label, lhs, rhs))
    c = G.curv(K.CANONICAL)
    out += [(f"canonical {nm}", j.value, G.zero(j.shape)) for nm, j in c.items()]
    b = G.curv(K.BERWALD)
    out.append(("berwald S", b.S.value, G.zero(b.S.shape)))
    return out


@dataclass(frozen=True)
class Identity:
    name: str
    description: str
    evaluate: Callable[[Geometry], list[Pair]]
    tolerance: float = DEFAULT_TOL
    finsler_only: bool = True
    # residuals of alternative readings, reported but not used for pass/fail
    variants: Callable[[Geometry], dict[str, float]] | None = None


REGISTRY: dict[str, Identity] = {}


def register(identity: Identity) -> Identity:
    if identity.name in REGISTRY:
        raise ValueError(f"duplicate identity {identity.name}")
    REGISTRY[identity.name] = identity
    return identity


for _ident in (
    Identity("metric-coincidence", "g equals half the y-Hessian of F^2; F^2 = sum_i (lam_i_m y^m)^2",
             _metric_coincidence, 1e-8),
    Identity("cartan-tensor", "Cartan tensor totally symmetric, y-orthogonal, raises to the dot Christoffel symbols",
             _cartan_tensor, 1e-9),
    Identity("cartan-axioms", "C1-C5 for the Cartan/Miron connection", _cartan_axioms, 1e-8),
    Identity("berwald-axioms", "B1-B5 for the Berwald connection", _berwald_axioms, 1e-8),
    Identity("ap-condition", "canonical h- and v-derivatives of the frame vanish", _ap_condition, 1e-9,
             finsler_only=False),
    Identity("barthel-routes", "Barthel N from the spray equals y^b Gamma°^a_bm and the building-block form",
             _barthel_routes, 1e-8),
    Identity("shared-R", "(v)h-torsion identical for all four connections", _shared_r, 1e-9,
             finsler_only=False),
    Identity("canonical-flat", "h-, hv- and v-curvatures of the canonical connection vanish",
             _canonical_flat, 1e-8, finsler_only=False),
    Identity("canonical-torsions", "canonical torsions in terms of the connection and contortions",
             _canonical_torsions, variants=_canonical_torsion_variants),
    Identity("connection-expressions", "Cartan, Berwald and dual connections from the canonical one",
             _connection_expressions),
    Identity("miron-coframe", "Miron derivatives of the coframe give the contortions", _miron_coframe, 1e-9,
             finsler_only=False),
    Identity("interchange", "Cartan h-derivative of (1,2) tensors via canonical derivative and A",
             _interchange, 1e-8, finsler_only=False),
    Identity("contortion-torsion", "lowered contortions from lowered torsions", _contortion_torsion,
             finsler_only=False),
    Identity("dual-torsions", "torsions of the dual connection", _dual_torsions, finsler_only=False),
    Identity("dual-curvatures", "curvatures of the dual connection", _dual_curvatures,
             variants=_dual_curvature_variants),
    Identity("cartan-torsions", "torsions of the Cartan/Miron connection", _cartan_torsions),
    Identity("cartan-curvatures", "curvatures of the Cartan/Miron connection", _cartan_curvatures,
             variants=_cartan_curvature_variants),
    Identity("berwald-torsions", "torsions of the Berwald connection", _berwald_torsions),
    Identity("berwald-curvatures", "curvatures of the Berwald connection", _berwald_curvatures),
    Identity("table-1", "summary of torsions and curvatures of the four connections", _table_1),
):
    register(_ident)


TABLE_NAMES = ("table-2", "table-3", "table-4")


def identity_names() -> list[str]:
    return list(REGISTRY) + list(TABLE_NAMES)


def evaluate_identity(name: str, ctx: FPContext) -> list[tuple[str, float]]:
    ident = REGISTRY[name]
    G = Geometry(ctx)
    return [(label, scaled_residual(l, r)) for label, l, r in ident.evaluate(G)]


def _structure_ok(frame: Frame, samples: Sequence[EvalPoint]) -> tuple[bool, bool]:
    """(GAP-valid, Finsler-valid) at every sample."""
    report = validate_structure(frame, samples)
    return report.gap_valid, report.finsler_valid


def check_identities(
    frame: Frame,
    names: Sequence[str] | None,
    samples: Sequence[EvalPoint],
    tol: float | None = None,
    natural_chart: bool | None = None,
) -> list[IdentityResidual]:
    """Run several identities over the same samples, sharing one context per
    sample.  ``tol`` overrides every identity's own tolerance."""
    names = identity_names() if names is None else list(names)
    for name in names:
        if name not in REGISTRY and name not in TABLE_NAMES:
            raise FPError(f"unknown identity {name!r}")
    if not samples:
        raise FPError("identity checks need at least one sample")
    gap_ok, finsler_ok = _structure_ok(frame, samples)
    plain = [REGISTRY[n] for n in names if n in REGISTRY]
    tables = [n for n in names if n in TABLE_NAMES]

    results: dict[str, IdentityResidual] = {}
    runnable = []
    for ident in plain:
        t = ident.tolerance if tol is None else tol
        reason = None
        if not gap_ok:
            reason = "frame is not GAP-valid at the samples"
        elif ident.finsler_only and not finsler_ok:
            reason = "frame is not Finsler-valid at the samples"
        if reason:
            results[ident.name] = IdentityResidual(ident.name, math.nan, t, len(samples), False, reason)
        else:
            runnable.append(ident)

    parts = {i.name: {} for i in runnable}
    variants = {i.name: {} for i in runnable}
    if runnable:
        for p in samples:
            G = Geometry(FPContext(frame, p))
            for ident in runnable:
                acc = parts[ident.name]
                for label, l, r in ident.evaluate(G):
                    acc[label] = max(acc.get(label, 0.0), scaled_residual(l, r))
                if ident.variants is not None:
                    vacc = variants[ident.name]
                    for label, v in ident.variants(G).items():
                        vacc[label] = max(vacc.get(label, 0.0), v)
    for ident in runnable:
        t = ident.tolerance if tol is None else tol
        worst = max(parts[ident.name].values(), default=0.0)
        results[ident.name] = IdentityResidual(
            ident.name, worst, t, len(samples), worst <= t,
            parts=parts[ident.name], variants=variants[ident.name],
        )

    if tables:
        from .classify import verify_special_tables

        for name in tables:
            if not gap_ok:
                results[name] = IdentityResidual(name, math.nan, tol or DEFAULT_TOL, len(samples), False,
                                                 "frame is not GAP-valid at the samples")
                continue
            results[name] = verify_special_tables(frame, name, samples, tol=tol, natural_chart=natural_chart)
    return [results[n] for n in names]


def identity_check(
    frame: Frame,
    name: str,
    samples: Sequence[EvalPoint],
    tol: float | None = None,
    natural_chart: bool | None = None,
) -> IdentityResidual:
    """Evaluate one named identity at every sample and return its worst residual."""
    return check_identities(frame, [name], samples, tol, natural_chart)[0]
