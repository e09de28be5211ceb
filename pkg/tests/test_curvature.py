import numpy as np
import pytest

from fptensor import ALL_KINDS, ConnectionKind, EvalPoint, FPContext, sample_points
from fptensor import jets as J
from fptensor.curvature import (
    curvature_set,
    curvatures,
    hv_curvature_literal,
    torsion_set,
    torsions,
    v_curvature_literal,
)
from fptensor.identities import scaled_residual

from conftest import E2, E3, E4, bundled, expected

K = ConnectionKind
FINSLER = ["identity", E2, E3, E4, "conformal-quartic", "conformal-quartic-3d", "twisted-3d"]


def zero_rel(j, scale=None):
    v = np.asarray(j.value if hasattr(j, "value") else j)
    return scaled_residual(v, np.zeros_like(v), scale)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_identity_frame_all_zero(kind):
    p = EvalPoint((0.3, -0.1), (1.0, 0.4))
    f = bundled("identity")
    for t in list(torsions(f, kind, p).values()) + list(curvatures(f, kind, p).values()):
        assert np.all(t.components == 0)


@pytest.mark.parametrize("name", FINSLER)
def test_antisymmetries(name):
    f = bundled(name)
    for p in sample_points(f.n, 3, seed=1):
        ctx = FPContext(f, p)
        for kind in ALL_KINDS:
            ts = torsion_set(ctx, kind)
            for j in (ts.T, ts.S, ts.R):
                v = j.value
                assert np.max(np.abs(v + v.swapaxes(1, 2))) <= 1e-12 * (1 + np.max(np.abs(v)))
            cs = curvature_set(ctx, kind)
            for j in (cs.R, cs.S):
                v = j.value
                assert np.max(np.abs(v + v.swapaxes(2, 3))) <= 1e-12 * (1 + np.max(np.abs(v)))


def test_e3_canonical_torsions():
    f = bundled(E3)
    for p in sample_points(2, 5, seed=2):
        ctx = FPContext(f, p, 3)
        ts = torsion_set(ctx, K.CANONICAL)
        assert np.max(np.abs(ts.R.value)) <= 1e-14
        assert np.max(np.abs(ts.P.value + ctx.canonical_gamma.value)) <= 1e-14


def test_e2_canonical_torsions():
    f = bundled(E2)
    for p in sample_points(2, 5, seed=3):
        ts = torsion_set(FPContext(f, p, 3), K.CANONICAL)
        assert np.max(np.abs(ts.T.value)) <= 1e-14
        assert np.max(np.abs(ts.S.value)) <= 1e-14
        # N^1_1 = -y1 and Gamma^1_11 = -1, so P^1_11 = d/dy1 N^1_1 - Gamma^1_11 = 0
        assert np.max(np.abs(ts.P.value)) <= 1e-14


@pytest.mark.parametrize("name", [E2, E3, E4])
def test_canonical_flatness(name):
    f = bundled(name)
    for p in sample_points(2, 10, seed=4):
        cs = curvature_set(FPContext(f, p), K.CANONICAL)
        for _, j in cs.items():
            assert zero_rel(j) <= 1e-8


@pytest.mark.parametrize("name", ["conformal-quartic", "conformal-quartic-3d", "twisted-3d"])
def test_canonical_flatness_generic_frames(name):
    f = bundled(name)
    for p in sample_points(f.n, 5, seed=4):
        cs = curvature_set(FPContext(f, p), K.CANONICAL)
        for _, j in cs.items():
            assert zero_rel(j) <= 1e-8


def test_e2_cartan_h_curvature_vanishes():
    # independent oracle: the symbolic Riemann tensor of diag(exp(-2 x1), 1) is zero
    assert expected(E2)["facts"]["metric_flat"] is True
    f = bundled(E2)
    for p in sample_points(2, 10, seed=5):
        cs = curvature_set(FPContext(f, p), K.CARTAN_MIRON)
        assert zero_rel(cs.R) <= 1e-12


@pytest.mark.parametrize("name", FINSLER)
def test_berwald_torsions_and_v_curvature(name):
    f = bundled(name)
    for p in sample_points(f.n, 3, seed=6):
        ctx = FPContext(f, p)
        ts = torsion_set(ctx, K.BERWALD)
        for j in (ts.T, ts.C, ts.P, ts.S):
            assert zero_rel(j) <= 1e-9
        assert np.array_equal(ts.R.value, torsion_set(ctx, K.CANONICAL).R.value)
        assert zero_rel(curvature_set(ctx, K.BERWALD).S) <= 1e-9


def test_printed_hv_contraction_differs_by_torsion_term():
    # the printed contraction leaves -C^a_me T^e_ns in the canonical hv-curvature
    f = bundled(E4)
    seen = 0.0
    for p in sample_points(2, 5, seed=7):
        ctx = FPContext(f, p)
        ts = torsion_set(ctx, K.CANONICAL)
        literal = hv_curvature_literal(ctx, K.CANONICAL)
        adopted = curvature_set(ctx, K.CANONICAL).P
        gap = J.einsum("ame,ens->amns", ts.C, ts.T)
        assert np.max(np.abs((literal - adopted + gap).value)) <= 1e-12
        seen = max(seen, np.max(np.abs(literal.value)))
    assert seen > 1e-2


def test_printed_v_curvature_agrees_in_two_dimensions_only():
    p2 = sample_points(2, 1, seed=8)[0]
    ctx = FPContext(bundled("conformal-quartic"), p2)
    a = v_curvature_literal(ctx, K.CANONICAL).value
    b = curvature_set(ctx, K.CANONICAL).S.value
    assert np.max(np.abs(a - b)) <= 1e-12
    seen = 0.0
    for p3 in sample_points(3, 5, seed=8):
        ctx = FPContext(bundled("conformal-quartic-3d"), p3)
        seen = max(seen, np.max(np.abs(v_curvature_literal(ctx, K.CANONICAL).value)))
        assert zero_rel(curvature_set(ctx, K.CANONICAL).S) <= 1e-8
    assert seen > 1e-2


def test_tensor_dump_shapes():
    p = sample_points(3, 1)[0]
    t = torsions(bundled("twisted-3d"), K.DUAL, p)
    c = curvatures(bundled("twisted-3d"), K.DUAL, p)
    assert all(v.components.shape == (3, 3, 3) for v in t.values())
    assert all(v.components.shape == (3, 3, 3, 3) for v in c.values())
    d = c["P"].to_dict()
    assert [i["variance"] for i in d["indices"]] == ["upper", "lower", "lower", "lower"]
    assert len(d["components"]) == 81
