"""A frame that depends on direction over a metric that does not.

The rotated-riemannian frame is diag(exp(x1), 1) rotated by the angle
x1*y1/|y|.  The rotation cancels in g = cof^T cof, so the metric is the
Riemannian diag(exp(-2 x1), 1), but the frame, and with it the canonical
connection, depends on y.  This walk-through shows what that does to the four
connections and their curvatures.

    python demos/02_rotated_frame.py
"""
import numpy as np

from fptensor import ALL_KINDS, ConnectionKind, EvalPoint, FPContext, Frame, load_bundled
from fptensor.curvature import curvature_set, torsion_set

frame = Frame(load_bundled("rotated-riemannian"))
p = EvalPoint((0.4, -0.3), (0.9, 0.5))
q = EvalPoint((0.4, -0.3), (-0.2, 1.3))  # same x, another direction
ctx, ctx2 = FPContext(frame, p), FPContext(frame, q)


def size(j):
    return float(np.max(np.abs(j.value)))


print("metric at two directions over the same x:")
print(np.round(ctx.g.value, 12))
print(np.round(ctx2.g.value, 12))
print(f"Cartan tensor: {size(ctx.cartan_tensor):.1e}   (the metric is Riemannian)")
print(f"frame at the two directions differs by {np.max(np.abs(ctx.lam.value - ctx2.lam.value)):.3f}\n")

print("horizontal and vertical coefficients, largest entry:")
for kind in ALL_KINDS:
    conn = ctx.connection(kind)
    print(f"  {kind.value:<10} F {size(conn.F):.4f}   C {size(conn.C):.4f}")
print(f"  contortions A {size(ctx.contortion.A):.4f}, B {size(ctx.contortion.B):.4f}\n")

print("curvatures (largest entry):")
for kind in ALL_KINDS:
    cs = curvature_set(ctx, kind)
    print(f"  {kind.value:<10} " + "   ".join(f"{nm} {size(j):.2e}" for nm, j in cs.items()))

shared = [torsion_set(ctx, k).R.value for k in ALL_KINDS]
spread = max(float(np.max(np.abs(r - shared[0]))) for r in shared)
print(f"\n(v)h-torsion R is the same for all four connections (spread {spread:.1e})")
canon = curvature_set(ctx, ConnectionKind.CANONICAL)
flat = max(size(j) for _, j in canon.items())
print(f"canonical connection is flat: {flat:.1e}")
