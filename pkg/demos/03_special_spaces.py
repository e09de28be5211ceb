"""Classifying the bundled frames and checking a change of chart.

Each bundled frame is classified as FP-Riemannian, FP-Berwald, FP-Landsberg
and FP-Minkowskian.  Samples come in groups of four directions per base
point so that y-independence can be tested.  The chart check then recomputes
the Barthel connection of the exponential frame after x1 -> x1 + x2^2 and
compares it with the transformation law.

    python demos/03_special_spaces.py
"""
from fptensor import BUNDLED, ChartMap, Frame, chart_transform_check, classification_samples, classify
from fptensor import load_bundled, sample_points
from fptensor.classify import CLASSES

print(f"{'frame':<22}" + "".join(f"{c:<16}" for c in CLASSES) + "metric x-only")
for name in BUNDLED:
    frame = Frame(load_bundled(name))
    c = classify(frame, classification_samples(frame.n, 24, seed=5))
    row = "".join(f"{c.verdict(k):<16}" for k in CLASSES)
    print(f"{name:<22}{row}{c.metric_x_only.verdict}")
    if not c.consistent:
        print("   inclusion lattice violated:", c.inclusions)

frame = Frame(load_bundled("ap-exponential"))
chart = ChartMap(["x1 + x2^2", "x2"], 2)
res = chart_transform_check(frame, chart, sample_points(2, 20, seed=1))
print(f"\nBarthel connection after x1 -> x1 + x2^2: two routes differ by {res.residual:.1e} "
      f"({'PASS' if res.passed else 'FAIL'} at {res.tolerance:g})")
