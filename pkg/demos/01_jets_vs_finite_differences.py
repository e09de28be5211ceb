"""Taylor jets against central finite differences.

One expression in (x, y) is evaluated once as a jet of order 4.  Every
partial derivative up to that order is then read off the jet and compared
with the finite-difference oracle, which only ever calls the float evaluator.

    python demos/01_jets_vs_finite_differences.py
"""
from itertools import combinations_with_replacement

import numpy as np

from fptensor import EvalPoint, evaluate, fd_derivative, jet_extract, parse_expression
from fptensor.dsl import as_function

TEXT = "exp(x1) * sin(x2 * y1) / sqrt(y1^2 + y2^2)"
POINT = EvalPoint((0.3, -0.7), (1.1, 0.6))

expr = parse_expression(TEXT, 2)
jet = evaluate(expr, POINT, 4)
f = as_function(expr)
print(f"f = {TEXT}")
print(f"at x = {POINT.x}, y = {POINT.y}: f = {jet_extract(jet, (0, 0, 0, 0)):.15g}\n")

names = ("x1", "x2", "y1", "y2")
worst = 0.0
for degree in (1, 2, 3, 4):
    errs = []
    for combo in combinations_with_replacement(range(4), degree):
        idx = tuple(np.bincount(combo, minlength=4))
        exact = jet_extract(jet, idx)
        approx = fd_derivative(f, POINT, idx)
        errs.append(abs(exact - approx) / (1 + abs(exact)))
    k = int(np.argmax(errs))
    worst = max(worst, errs[k])
    print(f"order {degree}: {len(errs):2d} partials, worst mixed error {errs[k]:.2e}")

# one mixed third derivative spelled out
idx = (1, 0, 2, 0)
label = "d^3 f / dx1 dy1^2"
print(f"\n{label}: jet {jet_extract(jet, idx):.12f}   fd {fd_derivative(f, POINT, idx):.12f}")
print(f"\nall orders agree to {worst:.1e} (acceptance tolerance 1e-5): {'PASS' if worst <= 1e-5 else 'FAIL'}")
