import json
import math

import numpy as np
import pytest

from fptensor import EvalPoint, FPContext, FPError, Frame, SamplingError, parse_frame_document, sample_points
from fptensor.classify import (
    BERWALD,
    CLASSES,
    FAILS,
    HOLDS,
    LANDSBERG,
    MINKOWSKIAN,
    RIEMANNIAN,
    UNDETERMINED,
    ChartMap,
    barthel_two_routes,
    check_multiplicity,
    chart_transform_check,
    classification_samples,
    classify,
    transform_point,
    verify_special_tables,
)
from fptensor.identities import E, Geometry, K

from conftest import E2, E3, E4, bundled, expected

SAMPLES_2D = classification_samples(2, 24, seed=1)
SAMPLES_3D = classification_samples(3, 16, seed=1)


def verdicts(c):
    return {name: c.verdict(name) for name in CLASSES}


def test_identity_frame_all_hold():
    c = classify(bundled("identity"), SAMPLES_2D)
    assert all(v == HOLDS for v in verdicts(c).values())
    for r in c.records:
        assert all(cond.residual == 0.0 for cond in r.conditions)


def test_e2_riemannian_chain():
    c = classify(bundled(E2), SAMPLES_2D)
    assert c.verdict(RIEMANNIAN) == HOLDS
    assert c.verdict(BERWALD) == HOLDS
    assert c.verdict(LANDSBERG) == HOLDS
    assert c.consistent


def test_e4_frame_level_riemannian_fails():
    c = classify(bundled(E4), SAMPLES_2D)
    assert c.verdict(RIEMANNIAN) == FAILS
    assert c[RIEMANNIAN].conditions[0].residual > 1e-3
    assert c.verdict(LANDSBERG) == HOLDS
    # metric-level x-only-ness is reported on its own and does hold
    assert c.metric_x_only.verdict == HOLDS
    assert expected(E4)["facts"]["metric_x_only"] is True
    assert expected(E4)["facts"]["frame_x_only"] is False
    assert c.consistent


def test_e3_minkowskian():
    c = classify(bundled(E3), SAMPLES_2D)
    assert c.verdict(MINKOWSKIAN) == HOLDS
    assert c.verdict(BERWALD) == HOLDS
    assert c.verdict(LANDSBERG) == HOLDS
    assert c.verdict(RIEMANNIAN) == FAILS
    assert c.natural_chart
    assert any("declared" in n for n in c[MINKOWSKIAN].notes)


def test_generic_frames_fail_the_special_classes():
    c = classify(bundled("conformal-quartic"), SAMPLES_2D)
    assert all(v == FAILS for v in verdicts(c).values())
    c = classify(bundled("twisted-3d"), SAMPLES_3D)
    assert verdicts(c) == {LANDSBERG: HOLDS, BERWALD: FAILS, MINKOWSKIAN: FAILS, RIEMANNIAN: FAILS}


def test_non_finsler_frame_is_undetermined():
    f = Frame(parse_frame_document('n = 2\nframe = [["1 + y1", "0"], ["0", "1"]]\n'))
    c = classify(f, SAMPLES_2D)
    assert all(v == UNDETERMINED for v in verdicts(c).values())


def test_multiplicity_enforced():
    with pytest.raises(SamplingError):
        classify(bundled(E2), sample_points(2, 12))
    with pytest.raises(SamplingError):
        check_multiplicity(sample_points(2, 12, y_per_x=2))
    check_multiplicity(sample_points(2, 12, y_per_x=3))
    with pytest.raises(SamplingError):
        classify(bundled(E2), [])


def test_classification_samples_round_up():
    s = classification_samples(2, 10, seed=0)
    assert len(s) == 12


def test_tolerance_forms():
    f = bundled(E4)
    strict = classify(f, SAMPLES_2D, tolerances=0.0)
    assert strict.verdict(LANDSBERG) == FAILS  # round-off is never exactly zero here
    per_class = classify(f, SAMPLES_2D, tolerances={RIEMANNIAN: 10.0})
    assert per_class.verdict(RIEMANNIAN) == HOLDS
    assert per_class[LANDSBERG].conditions[0].tolerance == 1e-7


def test_serialisation():
    c = classify(bundled(E4), SAMPLES_2D)
    d = json.loads(c.to_json())
    assert [r["class"] for r in d["classes"]] == list(CLASSES)
    rec = d["classes"][0]
    assert set(rec) == {"class", "conditions", "verdict", "notes"}
    assert set(rec["conditions"][0]) == {"name", "residual", "tolerance", "pass"}
    assert d["natural_chart"] == "not declared"
    assert all(d["inclusions"].values())


@pytest.mark.parametrize("name", [E3, E4, "conformal-quartic", "twisted-3d"])
def test_landsberg_residual_is_scale_invariant(name):
    f = bundled(name)
    for p in sample_points(f.n, 3, seed=9):
        vals = []
        for s in (1.0, 2.0):
            G = Geometry(FPContext(f, p.scaled(s)))
            vals.append(E("amns,m->ans", G.curv(K.CARTAN_MIRON).P, G.y).value)
        # weight zero in y: the contracted tensor is unchanged
        assert np.max(np.abs(vals[1] - vals[0])) <= 1e-10 * (1 + np.max(np.abs(vals[0])))
        assert (np.max(np.abs(vals[0])) <= 1e-7) == (np.max(np.abs(vals[1])) <= 1e-7)


@pytest.mark.parametrize("name", ["identity", E2])
def test_riemannian_frames_cartan_equals_berwald(name):
    f = bundled(name)
    for p in sample_points(2, 10, seed=10):
        ctx = FPContext(f, p)
        cartan, berwald = ctx.connection(K.CARTAN_MIRON), ctx.connection(K.BERWALD)
        for a, b in ((cartan.F, berwald.F), (cartan.N, berwald.N), (cartan.C, berwald.C)):
            assert np.max(np.abs(a.value - b.value)) <= 1e-9
        assert np.max(np.abs(ctx.contortion.B.value)) <= 1e-12
        assert np.max(np.abs(ctx.dy(ctx.contortion.A).value)) <= 1e-12


def test_table_4_on_e2():
    r = verify_special_tables(bundled(E2), "table-4", SAMPLES_2D)
    assert r.passed and r.residual <= 1e-8
    assert any("hv" in k or "P" in k for k in r.parts)


def test_table_3_on_e3():
    r = verify_special_tables(bundled(E3), "table-3", SAMPLES_2D)
    assert r.passed, r.parts
    assert any(k.startswith("natural: ") for k in r.parts)
    # the printed Cartan vertical cell is kept as a variant and really misses
    assert r.variants and max(r.variants.values()) > 1e-2


def test_table_3_without_natural_chart_skips_chart_cells():
    r = verify_special_tables(bundled(E3), "table-3", SAMPLES_2D, natural_chart=False)
    assert r.passed
    assert not any(k.startswith("natural: ") for k in r.parts)
    assert any("skipped" in n for n in r.notes)


def test_table_2_on_identity_and_class_names():
    r = verify_special_tables(bundled("identity"), BERWALD, SAMPLES_2D)
    assert r.name == "table-2" and r.passed and r.residual == 0.0


def test_table_hypothesis_not_met():
    r = verify_special_tables(bundled(E4), "table-4", SAMPLES_2D)
    assert r.skipped and r.skipped_reason.startswith("hypothesis not met: FP-Riemannian")
    assert not r.passed and math.isnan(r.residual)


def test_unknown_table():
    with pytest.raises(FPError):
        verify_special_tables(bundled(E2), "table-9", SAMPLES_2D)


# chart changes -----------------------------------------------------------

def test_identity_chart_gives_zero():
    for name in (E2, E4, "twisted-3d"):
        f = bundled(name)
        r = chart_transform_check(f, ChartMap.identity(f.n), sample_points(f.n, 5))
        assert r.residual == 0.0


def test_e2_nonlinear_chart():
    chart = ChartMap(["x1 + x2^2", "x2"], 2)
    r = chart_transform_check(bundled(E2), chart, sample_points(2, 20))
    assert r.passed and r.residual <= 1e-7


def test_e3_linear_chart_is_homogeneous():
    f = bundled(E3)
    chart = ChartMap(["2*x1", "2*x2"], 2)
    for p in sample_points(2, 5):
        new, law = barthel_two_routes(f, chart, p)
        assert np.max(np.abs(new - law)) <= 1e-9
    assert chart_transform_check(f, chart, sample_points(2, 10)).residual <= 1e-9


@pytest.mark.parametrize("name", [E4, "conformal-quartic", "conformal-quartic-3d", "twisted-3d"])
def test_document_charts(name):
    f = bundled(name)
    r = chart_transform_check(f, None, sample_points(f.n, 5, seed=2))
    assert r.passed and r.residual <= 1e-7


def test_inverse_chart_jets():
    chart = ChartMap(["x1 + x2^2", "x2 - 0.3*x1^2"], 2)
    p = EvalPoint((0.2, -0.4), (1.0, 0.5))
    q = transform_point(chart, p)
    from fptensor.jets import jet_lift

    psi = chart.inverse_jets(p.x, jet_lift(q, 3))
    back = chart.image([psi[0], psi[1]])
    seeds = jet_lift(q, 3)
    for i in range(2):
        diff = back[i] - seeds[i]
        assert np.max(np.abs(diff.coef)) <= 1e-12


def test_singular_chart():
    chart = ChartMap(["x1^3", "x2"], 2)
    with pytest.raises(FPError, match="singular"):
        chart_transform_check(bundled(E2), chart, [EvalPoint((0.0, 0.1), (1.0, 1.0))])


def test_chart_validation():
    with pytest.raises(FPError):
        ChartMap(["x1"], 2)
    with pytest.raises(FPError):
        chart_transform_check(bundled(E2), ChartMap.identity(3), sample_points(2, 1))
