"""Connection objects of an FP-space at one point.

Everything is computed in jet arithmetic from the frame jets, so derivatives
of derived objects (needed by torsions and curvatures) are exact.  The order
of each object drops with every derivative taken:

========================  =============================  =========
object                    formula                        jet order
========================  =============================  =========
lam, cof, g, g^-1         frame / inverse / products     K
formal Christoffel        1/2 g^-1 (dg + dg - dg)        K - 1
spray G^a                 1/2 gamma y y                  K - 1
Barthel N^a_b             dG^a / dy^b                    K - 2
Berwald G^a_sb            dN^a_s / dy^b                  K - 3
Miron Gamma°              1/2 g^-1 (dg + dg - dg), delta K - 2
dot Christoffel C°        1/2 g^-1 (dg + dg - dg), d/dy  K - 1
canonical Gamma, C        lam^a delta_n cof_m, d/dy      K - 2, K - 1
========================  =============================  =========

Connection coefficient arrays are stored as ``F[alpha, mu, nu]``; the last
index is the one the covariant derivative runs along.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .errors import FPError
from .frame import Frame, FrameJets, Tensor, frame_jets, tensor_from_jets
from .jets import EvalPoint, JetArray

LETTERS = "abcdefghijklmnopqrstuvw"


class ConnectionKind(enum.Enum):
    CARTAN_MIRON = "cartan"
    CANONICAL = "canonical"
    DUAL = "dual"
    BERWALD = "berwald"

    @classmethod
    def parse(cls, text: str) -> "ConnectionKind":
        key = text.strip().lower().replace("_", "-")
        aliases = {"cartan": "cartan", "miron": "cartan", "cartan-miron": "cartan"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise FPError(f"unknown connection kind {text!r}")


ALL_KINDS = tuple(ConnectionKind)


@dataclass(frozen=True)
class ConnectionTriple:
    """Coefficients ``(F^a_mn, N^a_m, C^a_mn)`` as jets."""

    kind: ConnectionKind
    F: JetArray
    N: JetArray
    C: JetArray

    def tensors(self, point: EvalPoint) -> dict[str, Tensor]:
        return {
            "F": tensor_from_jets(self.F, "ull", point, "F", ("alpha", "mu", "nu")),
            "N": tensor_from_jets(self.N, "ul", point, "N", ("alpha", "mu")),
            "C": tensor_from_jets(self.C, "ull", point, "C", ("alpha", "mu", "nu")),
        }


@dataclass(frozen=True)
class ContortionPair:
    A: JetArray
    B: JetArray


def _christoffel(ginv: JetArray, dg: JetArray) -> JetArray:
    """``1/2 g^ae (d_m g_ne + d_n g_me - d_e g_mn)`` with ``dg[a, b, c] = d_c g_ab``."""
    low = (
        jets.einsum("nem->mne", dg)
        + jets.einsum("men->mne", dg)
        - dg
    )
    return jets.einsum("ae,mne->amn", ginv, low) * 0.5


class FPContext:
    """Lazily computed, cached geometry of a frame at one point."""

    def __init__(self, frame: Frame, point: EvalPoint, order: int | None = None):
        self.frame = frame
        self.point = point
        self.n = frame.n
        self.fj: FrameJets = frame_jets(frame, point, order)
        self.order = self.fj.order
        self._xvars = list(range(self.n))
        self._yvars = list(range(self.n, 2 * self.n))
        self._cache: dict = {}

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # frame-level jets ---------------------------------------------------------
    @property
    def lam(self) -> JetArray:
        return self.fj.lam

    @property
    def cof(self) -> JetArray:
        return self.fj.cof

    @property
    def g(self) -> JetArray:
        return self.fj.g

    @property
    def ginv(self) -> JetArray:
        return self.fj.ginv

    @cached_property
    def y(self) -> JetArray:
        return jets.stack(self.fj.seeds[self.n:])

    @cached_property
    def lagrangian(self) -> JetArray:
        return jets.einsum("mn,m,n->", self.g, self.y, self.y)

    # derivative operators -----------------------------------------------------
    def dx(self, j: JetArray) -> JetArray:
        """``d_mu`` appended as the last axis."""
        return j.grad(self._xvars)

    def dy(self, j: JetArray) -> JetArray:
        """``d/dy^mu`` appended as the last axis."""
        return j.grad(self._yvars)

    def delta(self, j: JetArray) -> JetArray:
        """``delta_mu = d_mu - N^a_mu d/dy^a``, appended as the last axis."""
        return delta_derivative(j, self.barthel, self)

    # Finsler objects ----------------------------------------------------------
    @cached_property
    def cartan_tensor(self) -> JetArray:
        """Lowered ``C_bmn = 1/2 d/dy^b g_mn`` stored as ``[b, m, n]``."""
        return jets.einsum("mnb->bmn", self.dy(self.g)) * 0.5

    @cached_property
    def dot_christoffel(self) -> JetArray:
        return _christoffel(self.ginv, self.dy(self.g))

    @cached_property
    def formal_christoffel(self) -> JetArray:
        return _christoffel(self.ginv, self.dx(self.g))

    @cached_property
    def spray(self) -> JetArray:
        return jets.einsum("amn,m,n->a", self.formal_christoffel, self.y, self.y) * 0.5

    @cached_property
    def barthel(self) -> JetArray:
        return self.dy(self.spray)

    @cached_property
    def berwald_coeffs(self) -> JetArray:
        """``G^a_sb = d/dy^b N^a_s`` stored as ``[a, s, b]``."""
        return self.dy(self.barthel)

    @cached_property
    def delta_christoffel(self) -> JetArray:
        return _christoffel(self.ginv, self.delta(self.g))

    # frame connections --------------------------------------------------------
    @cached_property
    def canonical_gamma(self) -> JetArray:
        """``lam_i^a delta_n cof_i_m`` stored as ``[a, m, n]``."""
        return jets.einsum("ia,imn->amn", self.lam, self.delta(self.cof))

    @cached_property
    def canonical_c(self) -> JetArray:
        return jets.einsum("ia,imn->amn", self.lam, self.dy(self.cof))

    def connection(self, kind: ConnectionKind) -> ConnectionTriple:
        def build():
            N = self.barthel
            if kind is ConnectionKind.CARTAN_MIRON:
                return ConnectionTriple(kind, self.delta_christoffel, N, self.dot_christoffel)
            if kind is ConnectionKind.CANONICAL:
                return ConnectionTriple(kind, self.canonical_gamma, N, self.canonical_c)
            if kind is ConnectionKind.DUAL:
                return ConnectionTriple(
                    kind,
                    self.canonical_gamma.swapaxes(1, 2),
                    N,
                    self.canonical_c.swapaxes(1, 2),
                )
            if kind is ConnectionKind.BERWALD:
                G = self.berwald_coeffs
                return ConnectionTriple(kind, G, N, JetArray.zeros(G.shape, G.nvars, G.order))
            raise FPError(f"unknown connection kind {kind!r}")

        return self.cached(("connection", kind), build)

    @cached_property
    def contortion(self) -> ContortionPair:
        return ContortionPair(
            self.canonical_gamma - self.delta_christoffel,
            self.canonical_c - self.dot_christoffel,
        )

    def lower(self, t: JetArray) -> JetArray:
        """``t_mns = g_em t^e_ns`` for a (1,2) array."""
        return jets.einsum("em,ens->mns", self.g, t)


def delta_derivative(j: JetArray, N: JetArray, ctx: FPContext) -> JetArray:
    """``delta_mu f = d_mu f - N^a_mu d/dy^a f`` for every component of ``j``."""
    dxj = ctx.dx(j)
    dyj = ctx.dy(j)
    k = j.ndim
    idx = LETTERS[:k]
    correction = jets.einsum(f"{idx}x,xz->{idx}z", dyj, N)
    return dxj - correction


# ---------------------------------------------------------------------------
# public per-point helpers returning Tensors
# ---------------------------------------------------------------------------

def context(frame: Frame, point: EvalPoint, order: int | None = None) -> FPContext:
    return FPContext(frame, point, order)


def cartan_tensor(frame: Frame, point: EvalPoint) -> Tensor:
    ctx = context(frame, point)
    return tensor_from_jets(ctx.cartan_tensor, "lll", point, "cartan_tensor", ("beta", "mu", "nu"))


def formal_christoffel(frame: Frame, point: EvalPoint) -> Tensor:
    ctx = context(frame, point)
    return tensor_from_jets(ctx.formal_christoffel, "ull", point, "gamma", ("alpha", "mu", "nu"))


def spray(frame: Frame, point: EvalPoint) -> Tensor:
    ctx = context(frame, point)
    return tensor_from_jets(ctx.spray, "u", point, "G", ("alpha",))


def barthel(frame: Frame, point: EvalPoint) -> Tensor:
    ctx = context(frame, point)
    return tensor_from_jets(ctx.barthel, "ul", point, "N", ("alpha", "beta"))


def berwald_coeffs(frame: Frame, point: EvalPoint) -> Tensor:
    ctx = context(frame, point)
    return tensor_from_jets(ctx.berwald_coeffs, "ull", point, "G", ("alpha", "sigma", "beta"))


def connection(frame: Frame, kind: ConnectionKind, point: EvalPoint) -> ConnectionTriple:
    return context(frame, point).connection(kind)


def contortion(frame: Frame, point: EvalPoint) -> ContortionPair:
    return context(frame, point).contortion


def values(j: JetArray) -> np.ndarray:
    return j.value
