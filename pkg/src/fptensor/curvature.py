"""Torsion and curvature tensors of a Finsler connection.

Index layout follows the coefficient arrays: ``T[a, m, n]`` for torsions and
``R[a, m, n, s]`` for curvatures, with the alternation taken over the last
two indices.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import jets
from .connections import ConnectionKind, FPContext
from .covariant import h_cov
from .frame import Tensor, tensor_from_jets
from .jets import JetArray

TORSION_NAMES = ("T", "C", "R", "P", "S")
CURVATURE_NAMES = ("R", "P", "S")


@dataclass(frozen=True)
class TorsionSet:
    kind: ConnectionKind
    T: JetArray  # (h)h
    C: JetArray  # (h)hv
    R: JetArray  # (v)h
    P: JetArray  # (v)hv
    S: JetArray  # (v)v

    def items(self):
        return [(name, getattr(self, name)) for name in TORSION_NAMES]


@dataclass(frozen=True)
class CurvatureSet:
    kind: ConnectionKind
    R: JetArray  # h-curvature
    P: JetArray  # hv-curvature
    S: JetArray  # v-curvature

    def items(self):
        return [(name, getattr(self, name)) for name in CURVATURE_NAMES]


def alternate(t: JetArray) -> JetArray:
    """``t[..., n, s] - t[..., s, n]`` over the last two axes."""
    return t - t.swapaxes(-1, -2)


def vh_torsion(ctx: FPContext) -> JetArray:
    """``R^a_mn = delta_n N^a_m - delta_m N^a_n`` (shared by all connections)."""
    return ctx.cached("vh_torsion", lambda: alternate(ctx.delta(ctx.barthel)))


def torsion_set(ctx: FPContext, kind: ConnectionKind) -> TorsionSet:
    def build():
        conn = ctx.connection(kind)
        return TorsionSet(
            kind,
            T=alternate(conn.F),
            C=conn.C,
            R=vh_torsion(ctx),
            P=ctx.dy(conn.N) - conn.F,
            S=alternate(conn.C),
        )

    return ctx.cached(("torsions", kind), build)


def curvature_set(ctx: FPContext, kind: ConnectionKind) -> CurvatureSet:
    def build():
        conn = ctx.connection(kind)
        F, C = conn.F, conn.C
        tors = torsion_set(ctx, kind)
        # h-curvature: alt_(n,s){delta_s F^a_mn + F^e_mn F^a_es} + C^a_me R^e_ns
        x = ctx.delta(F) + jets.einsum("emn,aes->amns", F, F)
        r = alternate(x) + jets.einsum("ame,ens->amns", C, tors.R)
        # hv-curvature: d/dy^s F^a_mn - C^a_ms|n + C^a_me P^e_sn.  With the
        # (v)hv-torsion P^e_ns = d/dy^s N^e_n - F^e_ns used here, the last term
        # needs P^e_sn; see hv_curvature_literal for the other contraction.
        p = _hv_base(ctx, conn) + jets.einsum("ame,esn->amns", C, tors.P)
        # v-curvature: alt_(n,s){d/dy^s C^a_mn + C^e_mn C^a_es}, the quadratic
        # term mirroring the h-curvature's; see v_curvature_literal
        s = alternate(ctx.dy(C) + jets.einsum("emn,aes->amns", C, C))
        return CurvatureSet(kind, r, p, s)

    return ctx.cached(("curvatures", kind), build)


def _hv_base(ctx: FPContext, conn) -> JetArray:
    ccov = h_cov(ctx, conn.C, "ull", conn)  # [a, m, s, n]
    return ctx.dy(conn.F) - ccov.swapaxes(2, 3)


def hv_curvature_literal(ctx: FPContext, kind: ConnectionKind) -> JetArray:
    """hv-curvature contracted as ``C^a_me P^e_ns``.

    Equals :func:`curvature_set`'s ``P`` minus ``C^a_me T^e_ns``, so the two
    agree for connections without (h)h-torsion.
    """
    conn = ctx.connection(kind)
    tors = torsion_set(ctx, kind)
    return _hv_base(ctx, conn) + jets.einsum("ame,ens->amns", conn.C, tors.P)


def v_curvature_literal(ctx: FPContext, kind: ConnectionKind) -> JetArray:
    """v-curvature with the quadratic term written ``C^e_ms C^a_en``.

    Its alternation has the opposite sign to the one in :func:`curvature_set`,
    so the canonical connection is not v-flat under this form once ``n > 2``.
    """
    C = ctx.connection(kind).C
    return alternate(ctx.dy(C) + jets.einsum("ems,aen->amns", C, C))


def torsions(frame, kind: ConnectionKind, point) -> dict[str, Tensor]:
    ctx = FPContext(frame, point)
    ts = torsion_set(ctx, kind)
    return {name: tensor_from_jets(j, "ull", point, name) for name, j in ts.items()}


def curvatures(frame, kind: ConnectionKind, point) -> dict[str, Tensor]:
    ctx = FPContext(frame, point)
    cs = curvature_set(ctx, kind)
    return {name: tensor_from_jets(j, "ulll", point, name) for name, j in cs.items()}
