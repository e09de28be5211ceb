"""Central finite differences with one Richardson step.

With the default step, the extrapolated estimate is formed on a short ladder
of base steps around it and the one that best agrees with its neighbour on
the ladder is returned; every returned value is still a single Richardson
level.

This is the independent cross-check for the jet engine and is only meant for
tests and diagnostics.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .errors import FPError
from .jets import EvalPoint

EPS = np.finfo(float).eps

# multiples of the default step tried when no step is given
STEP_LADDER = (4.0, 2.0, 1.0, 0.5, 0.25)


def default_step(degree: int, scale: float) -> float:
    # eps**(1/3) for first derivatives.  Higher orders balance the O(h**4)
    # truncation left after Richardson against the eps / h**degree round-off.
    power = 3 if degree <= 1 else degree + 4
    return EPS ** (1.0 / power) * max(1.0, abs(scale))


def _central_weights(k: int) -> list[tuple[float, float]]:
    """(offset in units of h, weight) for the k-th central difference."""
    return [((k / 2.0 - j), (-1) ** j * math.comb(k, j)) for j in range(k + 1)]


def _stencil_estimate(f, z0: np.ndarray, idx: Sequence[int], h: np.ndarray) -> float:
    axes = [(v, k) for v, k in enumerate(idx) if k]
    grids = [_central_weights(k) for _, k in axes]
    total = 0.0
    for combo in itertools.product(*grids):
        z = z0.copy()
        w = 1.0
        for (v, _), (off, wt) in zip(axes, combo):
            z[v] += off * h[v]
            w *= wt
        total += w * f(z)
    denom = math.prod(h[v] ** k for v, k in axes)
    return total / denom


def fd_derivative(
    f: Callable[[np.ndarray, np.ndarray], float],
    point: EvalPoint,
    idx: Sequence[int],
    h: float | None = None,
) -> float:
    """Estimate the partial derivative of ``f(x, y)`` for multi-index ``idx``.

    ``idx`` holds one exponent per variable, x-variables first.  ``h`` is the
    base step; by default it is chosen per variable from the derivative degree
    and the coordinate magnitude.
    """
    n = point.n
    idx = [int(k) for k in idx]
    if len(idx) != 2 * n:
        raise ValueError(f"multi-index has {len(idx)} entries, expected {2 * n}")
    degree = sum(idx)
    if degree > 4:
        raise ValueError("finite-difference oracle supports total degree <= 4")
    if degree == 0:
        return float(f(np.array(point.x), np.array(point.y)))
    if h is not None and h <= 0:
        raise ValueError("step must be positive")
    z0 = point.coords
    if h is None:
        steps = np.array([default_step(degree, c) for c in z0])
    else:
        steps = np.full(z0.size, float(h))

    def g(z):
        return f(z[:n], z[n:])

    def reaches_zero_section(scale):
        reach = np.array([k / 2.0 * scale * steps[v] for v, k in enumerate(idx)])
        return bool(np.all(np.abs(z0[n:]) <= reach[n:]))

    if reaches_zero_section(1.0):
        raise FPError(f"finite-difference stencil at {point} reaches y = 0")
    if h is not None:
        ladder = [1.0]
    else:
        ladder = [s for s in STEP_LADDER if not reaches_zero_section(s)]

    cache: dict[float, float] = {}

    def stencil(scale):
        if scale not in cache:
            cache[scale] = _stencil_estimate(g, z0, idx, steps * scale)
        return cache[scale]

    estimates = [(4.0 * stencil(s / 2.0) - stencil(s)) / 3.0 for s in ladder]
    if len(estimates) == 1:
        return estimates[0]
    gaps = [abs(a - b) for a, b in zip(estimates, estimates[1:])]
    return estimates[int(np.argmin(gaps)) + 1]
