import math

import numpy as np
import pytest

from fptensor import EvalPoint, FPError, Frame, parse_frame_document, sample_points
from fptensor.identities import (
    REGISTRY,
    TABLE_NAMES,
    check_identities,
    identity_check,
    identity_names,
    scaled_residual,
)

from conftest import ALL_FRAMES, E3, E4, bundled

FAST = [n for n in REGISTRY]


def test_scaled_residual():
    assert scaled_residual([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert scaled_residual([0.0], [1.0]) == pytest.approx(0.5)
    assert scaled_residual([3.0], [1.0], scale=0.0) == 2.0


def test_names():
    names = identity_names()
    assert names[-3:] == list(TABLE_NAMES)
    for required in ("dual-torsions", "dual-curvatures", "cartan-torsions", "cartan-curvatures",
                     "berwald-curvatures", "contortion-torsion", "shared-R", "canonical-flat"):
        assert required in names


@pytest.mark.parametrize("name", ALL_FRAMES)
def test_registry_passes_on_bundled_frames(name):
    f = bundled(name)
    results = check_identities(f, FAST, sample_points(f.n, 8, seed=21))
    for r in results:
        assert not r.skipped, (r.name, r.skipped_reason)
        assert r.passed, (r.name, r.residual, r.parts)
        assert r.residual <= r.tolerance


def test_shared_r_on_e4():
    r = identity_check(bundled(E4), "shared-R", sample_points(2, 50))
    assert r.passed and r.residual <= 1e-9 and r.samples == 50


def test_canonical_flat_on_e3():
    r = identity_check(bundled(E3), "canonical-flat", sample_points(2, 20))
    assert r.passed and r.residual <= 1e-8


def test_dual_torsions_on_identity_frame():
    r = identity_check(bundled("identity"), "dual-torsions", sample_points(2, 5))
    assert r.residual == 0.0 and r.passed


def test_unknown_identity():
    with pytest.raises(FPError, match="unknown identity"):
        identity_check(bundled(E3), "bianchi", sample_points(2, 2))


def test_needs_samples():
    with pytest.raises(FPError):
        check_identities(bundled(E3), ["shared-R"], [])


def test_tolerance_override():
    r = identity_check(bundled(E4), "shared-R", sample_points(2, 3), tol=0.0)
    assert r.tolerance == 0.0
    assert r.passed == (r.residual == 0.0)


def test_non_finsler_frame_skips_finsler_only_identities():
    f = Frame(parse_frame_document('n = 2\nframe = [["1 + y1", "0"], ["0", "exp(x2)"]]\n'))
    samples = [EvalPoint((0.1, 0.2), (0.7, 0.4)), EvalPoint((0.3, -0.2), (0.5, 0.9))]
    results = {r.name: r for r in check_identities(f, ["cartan-axioms", "ap-condition", "table-2"], samples)}
    assert results["cartan-axioms"].skipped
    assert "Finsler-valid" in results["cartan-axioms"].skipped_reason
    assert not results["cartan-axioms"].passed and math.isnan(results["cartan-axioms"].residual)
    # GAP-level identities still run: the canonical connection is frame-parallel by construction
    assert results["ap-condition"].passed
    assert results["table-2"].skipped


def test_singular_frame_skips_everything():
    f = Frame(parse_frame_document('n = 2\nframe = [["x1", "0"], ["0", "1"]]\n'))
    results = check_identities(f, ["shared-R", "table-4"], [EvalPoint((0.0, 0.0), (1.0, 1.0))])
    assert all(r.skipped and "GAP-valid" in r.skipped_reason for r in results)


def test_variants_keep_printed_forms_observable():
    f = bundled("conformal-quartic-3d")
    samples = sample_points(3, 3, seed=2)
    res = {r.name: r for r in check_identities(f, ["dual-curvatures", "cartan-curvatures",
                                                   "canonical-torsions"], samples)}
    for r in res.values():
        assert r.passed
        assert r.variants
    # the literal readings really are different identities on this frame
    assert max(res["dual-curvatures"].variants.values()) > 1e-3
    assert max(res["cartan-curvatures"].variants.values()) > 1e-3
    assert max(res["canonical-torsions"].variants.values()) > 1e-3


def test_result_serialisation():
    r = identity_check(bundled(E4), "dual-curvatures", sample_points(2, 2))
    d = r.to_dict()
    assert {"name", "residual", "tolerance", "samples", "pass", "parts", "variants"} <= set(d)
    assert "skipped_reason" not in d


def test_residual_is_max_over_samples():
    f = bundled("conformal-quartic")
    samples = sample_points(2, 4, seed=3)
    whole = identity_check(f, "cartan-curvatures", samples).residual
    each = [identity_check(f, "cartan-curvatures", [p]).residual for p in samples]
    assert whole == max(each)
