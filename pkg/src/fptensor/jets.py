"""Truncated multivariate Taylor arithmetic ("jets") on the slit tangent bundle.

A :class:`JetArray` holds, for every component of a tensor, the Taylor
coefficients of that component in the ``2n`` variables ``(x^1..x^n, y^1..y^n)``
up to a fixed total degree.  Arithmetic on jets is exact to the truncation
order, so derivatives pulled out of a jet are exact up to round-off.

Coefficients are stored raw (``f = sum c_m (z - z0)^m``); :meth:`JetArray.partial`
and :func:`jet_extract` apply the factorial normalisation and return true
partial derivatives.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import FPError, JetOrderError

DEFAULT_MAX_ORDER = 4
ORDER_ENV_VAR = "FP_TENSOR_MAX_ORDER"


def max_order() -> int:
    """Jet-order cap, overridable through ``FP_TENSOR_MAX_ORDER``."""
    raw = os.environ.get(ORDER_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ORDER
    try:
        value = int(raw)
    except ValueError as exc:
        raise JetOrderError(f"{ORDER_ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise JetOrderError(f"{ORDER_ENV_VAR} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class EvalPoint:
    """A point ``(x, y)`` of the slit tangent bundle (``y != 0``)."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != len(y):
            raise FPError(f"x has dimension {len(x)} but y has dimension {len(y)}")
        if len(x) < 2:
            raise FPError(f"dimension must be at least 2, got {len(x)}")
        if not all(math.isfinite(v) for v in x + y):
            raise FPError("point coordinates must be finite")
        if all(v == 0.0 for v in y):
            raise FPError("y must be non-zero (slit tangent bundle)")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.x + self.y)

    def scaled(self, factor: float) -> "EvalPoint":
        return EvalPoint(self.x, tuple(factor * v for v in self.y))

    def __str__(self):
        xs = ", ".join(f"{v:.6g}" for v in self.x)
        ys = ", ".join(f"{v:.6g}" for v in self.y)
        return f"(x=({xs}), y=({ys}))"


class JetBasis:
    """Monomials of total degree <= ``order`` in ``nvars`` variables.

    Monomials are listed degree by degree, so the basis of a lower order is a
    prefix of the basis of any higher order.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = []
        sizes = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
            sizes.append(len(exps))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degrees = self.exps.sum(axis=1)
        self.index = {e: i for i, e in enumerate(exps)}
        self.sizes = tuple(sizes)
        self.size = len(exps)
        self.norm = np.array(
            [math.prod(math.factorial(k) for k in e) for e in exps], dtype=float
        )
        self._deriv: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._mul = None

    def _keys(self, exps: np.ndarray) -> np.ndarray:
        radix = (self.order + 1) ** np.arange(self.nvars, dtype=np.int64)
        return exps @ radix

    def mul_table(self):
        """Pairs ``(i, j)`` whose product lands in monomial ``k``, grouped by ``k``."""
        if self._mul is None:
            deg = self.degrees
            ii, jj = np.nonzero(deg[:, None] + deg[None, :] <= self.order)
            keys = self._keys(self.exps[ii] + self.exps[jj])
            own = self._keys(self.exps)
            lookup = np.argsort(own)
            kk = lookup[np.searchsorted(own[lookup], keys)]
            perm = np.argsort(kk, kind="stable")
            ii, jj, kk = ii[perm], jj[perm], kk[perm]
            starts = np.flatnonzero(np.r_[True, kk[1:] != kk[:-1]])
            self._mul = (ii, jj, starts)
        return self._mul

    def deriv_table(self, var: int):
        """Source indices and factors mapping order ``k`` coefficients to
        the ``d/dz_var`` coefficients of order ``k - 1``."""
        if var not in self._deriv:
            if self.order == 0:
                raise JetOrderError("cannot differentiate an order-0 jet")
            lower = self.sizes[self.order - 1]
            src = np.empty(lower, dtype=np.int64)
            fac = np.empty(lower, dtype=float)
            for i in range(lower):
                e = list(self.exps[i])
                fac[i] = e[var] + 1
                e[var] += 1
                src[i] = self.index[tuple(e)]
            self._deriv[var] = (src, fac)
        return self._deriv[var]


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> JetBasis:
    return JetBasis(nvars, order)


def _const_value(other) -> np.ndarray:
    return np.asarray(other, dtype=float)


class JetArray:
    """An array of jets sharing one basis; coefficients live on the last axis."""

    __slots__ = ("coef", "nvars", "order")
    __array_ufunc__ = None

    def __init__(self, coef: np.ndarray, nvars: int, order: int):
        coef = np.asarray(coef, dtype=float)
        size = basis(nvars, order).size
        if coef.shape[-1:] != (size,):
            raise ValueError(
                f"coefficient axis has length {coef.shape[-1:]}, expected {size}"
            )
        self.coef = coef
        self.nvars = nvars
        self.order = order

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, values, nvars: int, order: int) -> "JetArray":
        values = _const_value(values)
        coef = np.zeros(values.shape + (basis(nvars, order).size,))
        coef[..., 0] = values
        return cls(coef, nvars, order)

    @classmethod
    def zeros(cls, shape, nvars: int, order: int) -> "JetArray":
        return cls(np.zeros(tuple(shape) + (basis(nvars, order).size,)), nvars, order)

    # basic properties ---------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coef.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coef.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0].copy()

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"JetArray(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def __getitem__(self, idx) -> "JetArray":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return JetArray(self.coef[idx + (slice(None),)], self.nvars, self.order)

    def transpose(self, *axes) -> "JetArray":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return JetArray(self.coef.transpose(*axes, self.ndim), self.nvars, self.order)

    def swapaxes(self, a: int, b: int) -> "JetArray":
        a %= self.ndim
        b %= self.ndim
        return JetArray(np.swapaxes(self.coef, a, b), self.nvars, self.order)

    def reshape(self, *shape) -> "JetArray":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return JetArray(self.coef.reshape(*shape, self.coef.shape[-1]), self.nvars, self.order)

    def sum(self, axis=None) -> "JetArray":
        if axis is None:
            axis = tuple(range(self.ndim))
        return JetArray(self.coef.sum(axis=axis), self.nvars, self.order)

    def truncate(self, order: int) -> "JetArray":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        size = basis(self.nvars, self.order).sizes[order]
        return JetArray(self.coef[..., :size], self.nvars, order)

    def copy(self) -> "JetArray":
        return JetArray(self.coef.copy(), self.nvars, self.order)

    # arithmetic -------------------------------------------------------------
    def _align(self, other: "JetArray"):
        if other.nvars != self.nvars:
            raise ValueError(f"jets over {self.nvars} and {other.nvars} variables do not mix")
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order), order

    def __neg__(self):
        return JetArray(-self.coef, self.nvars, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, JetArray):
            a, b, order = self._align(other)
            return JetArray(a.coef + b.coef, self.nvars, order)
        c = _const_value(other)
        shape = np.broadcast_shapes(self.shape, c.shape)
        coef = np.broadcast_to(self.coef, shape + self.coef.shape[-1:]).copy()
        coef[..., 0] += c
        return JetArray(coef, self.nvars, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetArray):
            a, b, order = self._align(other)
            ii, jj, starts = basis(self.nvars, order).mul_table()
            prod = a.coef[..., ii] * b.coef[..., jj]
            return JetArray(np.add.reduceat(prod, starts, axis=-1), self.nvars, order)
        c = _const_value(other)
        return JetArray(self.coef * c[..., None], self.nvars, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, JetArray):
            return self * reciprocal(other)
        return self * (1.0 / _const_value(other))

    def __rtruediv__(self, other):
        return reciprocal(self) * _const_value(other)

    def __pow__(self, exponent):
        if isinstance(exponent, JetArray):
            return exp(exponent * log(self))
        return power(self, float(exponent))

    # differentiation --------------------------------------------------------
    def d(self, var: int) -> "JetArray":
        """Exact partial derivative in variable ``var``; order drops by one."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable {var} out of range for {self.nvars} variables")
        if self.order == 0:
            raise JetOrderError("jet order exhausted: cannot differentiate an order-0 jet")
        src, fac = basis(self.nvars, self.order).deriv_table(var)
        return JetArray(self.coef[..., src] * fac, self.nvars, self.order - 1)

    def grad(self, variables: Sequence[int]) -> "JetArray":
        """Stack of derivatives, appended as a new last tensor axis."""
        parts = [self.d(v).coef for v in variables]
        return JetArray(np.stack(parts, axis=-2), self.nvars, self.order - 1)

    def partial(self, idx: Sequence[int]) -> np.ndarray:
        """Partial derivative values for multi-index ``idx`` (exponent per variable)."""
        idx = tuple(int(k) for k in idx)
        if len(idx) != self.nvars:
            raise ValueError(f"multi-index has {len(idx)} entries, expected {self.nvars}")
        if any(k < 0 for k in idx):
            raise ValueError("multi-index exponents must be non-negative")
        if sum(idx) > self.order:
            raise JetOrderError(
                f"derivative of degree {sum(idx)} exceeds jet order {self.order}"
            )
        b = basis(self.nvars, self.order)
        k = b.index[idx]
        return self.coef[..., k] * b.norm[k]


def as_jet(value, nvars: int, order: int) -> JetArray:
    if isinstance(value, JetArray):
        return value
    return JetArray.constant(value, nvars, order)


def stack(jets: Sequence, axis: int = 0) -> JetArray:
    """Stack jets (or constants, promoted) along a new tensor axis."""
    ref = next((j for j in jets if isinstance(j, JetArray)), None)
    if ref is None:
        raise ValueError("stack needs at least one JetArray")
    order = min(j.order for j in jets if isinstance(j, JetArray))
    parts = [as_jet(j, ref.nvars, order).truncate(order) for j in jets]
    ndim = max(p.ndim for p in parts)
    if axis < 0:
        axis += ndim + 1
    coefs = np.stack([p.coef for p in parts], axis=axis)
    return JetArray(coefs, ref.nvars, order)


def jet_lift(point: EvalPoint, order: int, cap: int | None = None) -> list[JetArray]:
    """Seed jets for the ``2n`` coordinates ``x^1..x^n, y^1..y^n``.

    Each seed has its coordinate as value and a unit first derivative in its
    own variable.
    """
    cap = max_order() if cap is None else cap
    if order < 0:
        raise JetOrderError(f"jet order must be non-negative, got {order}")
    if order > cap:
        raise JetOrderError(f"jet order {order} exceeds configured maximum {cap}")
    coords = point.coords
    nvars = coords.size
    b = basis(nvars, order)
    seeds = []
    for v, c in enumerate(coords):
        coef = np.zeros(b.size)
        coef[0] = c
        if order >= 1:
            e = [0] * nvars
            e[v] = 1
            coef[b.index[tuple(e)]] = 1.0
        seeds.append(JetArray(coef, nvars, order))
    return seeds


def jet_extract(j: JetArray, idx: Sequence[int]) -> float:
    """The partial derivative of a scalar jet for multi-index ``idx``."""
    if j.ndim != 0:
        raise ValueError("jet_extract expects a scalar jet")
    return float(j.partial(idx))


# ---------------------------------------------------------------------------
# univariate functions, applied componentwise through their Taylor series
# ---------------------------------------------------------------------------

def _series(a: JetArray, derivs: Sequence[np.ndarray]) -> JetArray:
    """``f(a)`` given ``derivs[k] = f^(k)(a0)`` for ``k = 0..order``."""
    h = a.copy()
    h.coef[..., 0] = 0.0
    out = JetArray.constant(derivs[0], a.nvars, a.order)
    term = h
    for k in range(1, a.order + 1):
        out = out + term * (derivs[k] / math.factorial(k))
        if k < a.order:
            term = term * h
    return out


def exp(a: JetArray) -> JetArray:
    v = np.exp(a.coef[..., 0])
    return _series(a, [v] * (a.order + 1))


def log(a: JetArray) -> JetArray:
    v = a.coef[..., 0]
    if np.any(v <= 0):
        raise FPError("log of a non-positive value")
    derivs = [np.log(v)]
    for k in range(1, a.order + 1):
        derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / v**k)
    return _series(a, derivs)


def power(a: JetArray, p: float) -> JetArray:
    """``a**p`` for a constant exponent.

    Integer exponents accept any non-zero base (or any base when ``p >= 0``);
    other exponents need a positive base.
    """
    v = a.coef[..., 0]
    is_int = float(p).is_integer()
    if is_int and p >= 0:
        k = int(p)
        out = JetArray.constant(np.ones(a.shape), a.nvars, a.order)
        base = a
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out
    if np.any(v == 0) and (p < 0 or a.order > 0):
        raise FPError("division by zero" if is_int else f"power {p} of zero")
    if not is_int and np.any(v < 0):
        raise FPError(f"non-integer power {p} of a negative value")
    derivs = []
    coeff = 1.0
    for k in range(a.order + 1):
        derivs.append(coeff * np.power(v, p - k))
        coeff *= p - k
    return _series(a, derivs)


def reciprocal(a: JetArray) -> JetArray:
    return power(a, -1.0)


def sqrt(a: JetArray) -> JetArray:
    v = a.coef[..., 0]
    if a.order == 0:
        if np.any(v < 0):
            raise FPError("sqrt of a negative value")
        return JetArray(np.sqrt(a.coef), a.nvars, a.order)
    return power(a, 0.5)


def sin(a: JetArray) -> JetArray:
    v = a.coef[..., 0]
    cycle = [np.sin(v), np.cos(v), -np.sin(v), -np.cos(v)]
    return _series(a, [cycle[k % 4] for k in range(a.order + 1)])


def cos(a: JetArray) -> JetArray:
    v = a.coef[..., 0]
    cycle = [np.cos(v), -np.sin(v), -np.cos(v), np.sin(v)]
    return _series(a, [cycle[k % 4] for k in range(a.order + 1)])


def fabs(a: JetArray) -> JetArray:
    v = a.coef[..., 0]
    if a.order > 0 and np.any(v == 0):
        raise FPError("abs is not differentiable at 0")
    return a * np.sign(v)


# ---------------------------------------------------------------------------
# contractions and matrix functions
# ---------------------------------------------------------------------------

def _free_letter(used: str) -> str:
    for ch in "ZYXWVUTSRQPONMLKJIHGFEDCBA":
        if ch not in used:
            return ch
    raise ValueError("no free einsum letter")


def _einsum2(spec: str, a, b):
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    ja, jb = isinstance(a, JetArray), isinstance(b, JetArray)
    z = _free_letter(spec)
    if ja and jb:
        a, b, order = a._align(b)
        ii, jj, starts = basis(a.nvars, order).mul_table()
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.coef[..., ii], b.coef[..., jj])
        return JetArray(np.add.reduceat(prod, starts, axis=-1), a.nvars, order)
    if ja:
        return JetArray(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.coef, _const_value(b)), a.nvars, a.order)
    if jb:
        return JetArray(np.einsum(f"{sa},{sb}{z}->{out}{z}", _const_value(a), b.coef), b.nvars, b.order)
    return np.einsum(spec, a, b)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` over the tensor axes of jets and constant arrays.

    Only explicit-output form (``"ij,jk->ik"``) is supported.  Operands are
    contracted left to right.
    """
    subscripts = subscripts.replace(" ", "")
    if "->" not in subscripts:
        raise ValueError("einsum needs an explicit output ('->')")
    lhs, out = subscripts.split("->")
    inputs = lhs.split(",")
    if len(inputs) != len(operands):
        raise ValueError("number of subscripts does not match number of operands")
    acc_sub, acc = inputs[0], operands[0]
    for i in range(1, len(operands)):
        rest = "".join(inputs[i + 1:]) + out
        keep = "".join(ch for ch in dict.fromkeys(acc_sub + inputs[i]) if ch in rest)
        acc = _einsum2(f"{acc_sub},{inputs[i]}->{keep}", acc, operands[i])
        acc_sub = keep
    if acc_sub == out:
        return acc
    if isinstance(acc, JetArray):
        z = _free_letter(subscripts)
        return JetArray(np.einsum(f"{acc_sub}{z}->{out}{z}", acc.coef), acc.nvars, acc.order)
    return np.einsum(f"{acc_sub}->{out}", acc)


def inv(a: JetArray) -> JetArray:
    """Inverse of a square jet matrix via the Neumann series about its value.

    ``(A0 + H)^-1 = sum_k (-A0^-1 H)^k A0^-1``; the series is finite because
    ``H`` has no constant term.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"inv needs a square matrix, got shape {a.shape}")
    k0 = np.linalg.inv(a.value)
    h = a - a.value
    x = -einsum("ij,jk->ik", k0, h)
    term = JetArray.constant(k0, a.nvars, a.order)
    out = term
    for _ in range(a.order):
        term = einsum("ij,jk->ik", x, term)
        out = out + term
    return out


def cholesky(a: JetArray) -> JetArray:
    """Lower-triangular ``L`` with ``a = L L^T``, as jets.

    The caller is responsible for checking positive-definiteness of the value.
    """
    n = a.shape[0]
    entries: list[list[JetArray | float]] = [[0.0] * n for _ in range(n)]
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s = s - entries[j][k] * entries[j][k]
        ljj = sqrt(s)
        entries[j][j] = ljj
        inv_ljj = reciprocal(ljj)
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s = s - entries[i][k] * entries[j][k]
            entries[i][j] = s * inv_ljj
    return stack([stack(row) for row in entries])


def compose(f: JetArray, inner: JetArray) -> JetArray:
    """Jet of ``f(inner(u))`` in the variables of ``inner``.

    ``f`` is a jet in ``m`` variables about ``inner.value``; ``inner`` is a
    vector of ``m`` jets.  The result is exact to ``min(f.order, inner.order)``.
    """
    if inner.shape != (f.nvars,):
        raise ValueError(f"inner must be a vector of {f.nvars} jets, got shape {inner.shape}")
    order = min(f.order, inner.order)
    inner = inner.truncate(order)
    f = f.truncate(order)
    deltas = []
    for v in range(f.nvars):
        d = inner[v].copy()
        d.coef[..., 0] = 0.0
        pw = [JetArray.constant(1.0, inner.nvars, order)]
        for _ in range(order):
            pw.append(pw[-1] * d)
        deltas.append(pw)
    b = basis(f.nvars, order)
    out = JetArray.zeros(f.shape, inner.nvars, order)
    for k, e in enumerate(b.exps):
        term = deltas[0][e[0]]
        for v in range(1, f.nvars):
            if e[v]:
                term = term * deltas[v][e[v]]
        out = out + term * f.coef[..., k]
    return out
