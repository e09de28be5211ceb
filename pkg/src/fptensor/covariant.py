"""Horizontal and vertical covariant derivatives of arbitrary valence.

A tensor is passed as a jet array plus a variance string with one letter per
index: ``u`` upper, ``l`` lower, ``m`` mesh (no connection term).  The new
derivative index is appended last.
"""
from __future__ import annotations

from typing import Callable

from . import jets
from .connections import LETTERS, ConnectionKind, ConnectionTriple, FPContext, delta_derivative
from .frame import Frame, Tensor, tensor_from_jets
from .jets import EvalPoint, JetArray

# a tensor field: given a context, return (jets of components, variance)
TensorField = Callable[[FPContext], tuple[JetArray, str]]


def _connection_terms(x: JetArray, variance: str, coeff: JetArray) -> JetArray | None:
    if len(variance) != x.ndim:
        raise ValueError(f"variance {variance!r} does not match rank {x.ndim}")
    idx = LETTERS[: x.ndim]
    d, e = "y", "z"  # derivative index, dummy
    total = None
    for p, v in enumerate(variance):
        if v == "m":
            continue
        src = idx[:p] + e + idx[p + 1:]
        if v == "u":
            term = jets.einsum(f"{src},{idx[p]}{e}{d}->{idx}{d}", x, coeff)
        elif v == "l":
            term = -jets.einsum(f"{src},{e}{idx[p]}{d}->{idx}{d}", x, coeff)
        else:
            raise ValueError(f"unknown variance letter {v!r}")
        total = term if total is None else total + term
    return total


def h_cov(ctx: FPContext, x: JetArray, variance: str, conn: ConnectionTriple) -> JetArray:
    """``X_|nu = delta_nu X + sum(+F per upper index) - sum(F per lower index)``."""
    out = delta_derivative(x, conn.N, ctx)
    extra = _connection_terms(x, variance, conn.F)
    return out if extra is None else out + extra


def v_cov(ctx: FPContext, x: JetArray, variance: str, conn: ConnectionTriple) -> JetArray:
    """Same pattern as :func:`h_cov` with ``d/dy^nu`` and the ``C`` coefficients."""
    out = ctx.dy(x)
    extra = _connection_terms(x, variance, conn.C)
    return out if extra is None else out + extra


def h_covariant(field: TensorField, kind: ConnectionKind, ctx: FPContext) -> Tensor:
    x, variance = field(ctx)
    j = h_cov(ctx, x, variance, ctx.connection(kind))
    return tensor_from_jets(j, variance + "l", ctx.point, f"h-derivative ({kind.value})")


def v_covariant(field: TensorField, kind: ConnectionKind, ctx: FPContext) -> Tensor:
    x, variance = field(ctx)
    j = v_cov(ctx, x, variance, ctx.connection(kind))
    return tensor_from_jets(j, variance + "l", ctx.point, f"v-derivative ({kind.value})")


def miron_covariant_of_coframe(ctx: FPContext) -> tuple[JetArray, JetArray]:
    """``(lam_i_m °|n, lam_i_m °||n)`` under the Cartan/Miron connection."""
    conn = ctx.connection(ConnectionKind.CARTAN_MIRON)
    return h_cov(ctx, ctx.cof, "ml", conn), v_cov(ctx, ctx.cof, "ml", conn)


# ready-made fields
def frame_field(ctx: FPContext):
    return ctx.lam, "mu"


def coframe_field(ctx: FPContext):
    return ctx.cof, "ml"


def metric_field(ctx: FPContext):
    return ctx.g, "ll"


def lagrangian_field(ctx: FPContext):
    return ctx.lagrangian, ""


def at_point(frame: Frame, point: EvalPoint, field: TensorField, kind: ConnectionKind, vertical=False) -> Tensor:
    ctx = FPContext(frame, point)
    return (v_covariant if vertical else h_covariant)(field, kind, ctx)
