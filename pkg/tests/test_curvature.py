import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from almosthermitian import forms as fm
from almosthermitian.curvature import (
    FrameConditionError,
    PositivityError,
    augment_metric,
    augment_report,
    bisectional,
    compare_curvature,
    curvature_from_definition,
    curvature_quasi_formula,
    decompose_product_form,
    max_bisectional,
    product_metric,
    wu_report,
)
from almosthermitian.frames import coordinate_10_frame, gram_matrix, make_normal_frame
from almosthermitian.manifold import TWISTED_TORUS_PROBE, ChartManifold, catalog, get_manifold

CATALOG = catalog()


# -- closed forms on conformal metrics of C --------------------------------------

X, Y = sp.symbols("x y", real=True)


def conformal_curvature(h):
    """R_{1 1bar 1 1bar} = -d_zbar d_z h + |d_z h|^2 / h for g(d_z, d_zbar) = h."""
    dz = lambda f: (sp.diff(f, X) - sp.I * sp.diff(f, Y)) / 2  # noqa: E731
    dzb = lambda f: (sp.diff(f, X) + sp.I * sp.diff(f, Y)) / 2  # noqa: E731
    return -dzb(dz(h)) + dz(h) * dzb(h) / h


def conformal_manifold(text):
    seed = f"2*({text})"
    return ChartManifold.from_strings("conf", 1, ["x", "y"], [["0", "-1"], ["1", "0"]],
                                      [[seed, "0"], ["0", seed]], [[-1, 1], [-1, 1]])


def test_kahler_exp_symbolic_closed_form():
    R = sp.simplify(conformal_curvature(sp.exp(X**2 + Y**2)))
    assert sp.simplify(R + sp.exp(X**2 + Y**2)) == 0


@pytest.mark.parametrize("p, expected", [((0.0, 0.0), -1.0), ((1.0, 0.0), -math.e), ((0.4, -0.9), -math.exp(0.97))])
def test_kahler_exp_both_routes(p, expected):
    g = get_manifold("kahler_exp").metric()
    out = compare_curvature(g, p)
    assert out["definition"].R[0, 0, 0, 0] == pytest.approx(expected, abs=1e-8)
    assert out["quasi"].to_frame(out["definition"].frame).R[0, 0, 0, 0] == pytest.approx(expected, abs=1e-8)
    assert out["normal_deviation"] < 1e-8


@pytest.mark.parametrize("text", ["1 + x^2 + 0.5*sin(y)^2", "exp(x*y) + 0.25*cos(x)", "1/(1 + x^2 + y^2)"])
def test_conformal_metrics_against_sympy(text):
    h = sp.sympify(text.replace("^", "**"), locals={"x": X, "y": Y})
    R = sp.lambdify((X, Y), conformal_curvature(h))
    M = conformal_manifold(text)
    for p in [(0.3, -0.2), (-0.5, 0.7)]:
        out = compare_curvature(M.metric(), p)
        assert out["definition"].R[0, 0, 0, 0] == pytest.approx(complex(R(*p)), abs=1e-9)
        assert out["rel_deviation"] < 1e-9


def test_flat_curvature_vanishes():
    out = compare_curvature(get_manifold("flat_c2").metric(), (0.1, 0.2, 0.3, 0.4))
    assert out["scale"] == 0 and out["abs_deviation"] == 0


@pytest.mark.parametrize("M", CATALOG, ids=lambda m: m.name)
def test_routes_agree(M, rng):
    for p in M.sample_points(rng, 100):
        out = compare_curvature(M.metric(), p)
        assert out["abs_deviation"] <= 1e-6 * max(out["scale"], 1e-3)
        assert out["normal_deviation"] <= 1e-8
        assert out["mixed_residual"] < 1e-9
        assert out["hermitian_residual"] < 1e-8


def test_twisted_torus_curvature_is_nontrivial():
    out = compare_curvature(get_manifold("twisted_torus").metric(), TWISTED_TORUS_PROBE)
    assert out["scale"] > 5e-3
    assert out["rel_deviation"] < 1e-9


def test_frame_condition_rejects_plain_frames():
    M = get_manifold("twisted_torus_b")
    frame = coordinate_10_frame(M, TWISTED_TORUS_PROBE)
    with pytest.raises(FrameConditionError):
        curvature_quasi_formula(M.metric(), frame=frame)


def test_definition_route_changes_frame_covariantly():
    M = get_manifold("twisted_torus_b")
    g = M.metric()
    base = coordinate_10_frame(M, TWISTED_TORUS_PROBE)
    other = make_normal_frame(g, base)
    a = curvature_from_definition(g, base).to_frame(other)
    b = curvature_from_definition(g, other)
    assert np.max(np.abs(a.R - b.R)) < 1e-9


vec = st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4)


@given(vec, vec, st.floats(0.1, 3), st.floats(0, 2 * math.pi))
def test_bisectional_scaling_and_symmetry(x, y, s, theta):
    M = get_manifold("twisted_torus")
    R = _cached_twisted()
    Xv = np.array(x[:2]) + 1j * np.array(x[2:])
    Yv = np.array(y[:2]) + 1j * np.array(y[2:])
    if np.linalg.norm(Xv) < 1e-3 or np.linalg.norm(Yv) < 1e-3:
        return
    b = bisectional(R, Xv, Yv)
    scaled = bisectional(R, s * np.exp(1j * theta) * Xv, Yv)
    assert scaled == pytest.approx(s * s * b, abs=1e-9 * max(1, abs(b)) * s * s)
    assert M.n == 2


_CACHE = {}


def _cached_twisted():
    if "R" not in _CACHE:
        M = get_manifold("twisted_torus")
        _CACHE["R"] = curvature_from_definition(M.metric(), coordinate_10_frame(M, TWISTED_TORUS_PROBE))
    return _CACHE["R"]


def test_bisectional_rejects_zero():
    with pytest.raises(ValueError):
        bisectional(_cached_twisted(), np.zeros(2), np.ones(2))


# -- sums of metrics ------------------------------------------------------------


def test_wu_flat_plus_kahler_exp():
    rep = wu_report(get_manifold("flat_c1").metric(), get_manifold("kahler_exp").metric(), 60, 7)
    assert rep.passed(1e-9)
    assert rep.min_margin >= -1e-9
    assert rep.discarded_mismatch() < 1e-9
    assert rep.max_discarded <= 1e-12


def test_wu_twisted_pair():
    rep = wu_report(get_manifold("twisted_torus").metric(), get_manifold("twisted_torus_b").metric(), 20, 3)
    assert rep.passed(1e-9)
    assert rep.discarded_mismatch() < 1e-9


def test_wu_equal_metrics_spot_value_at_origin():
    g = get_manifold("kahler_exp").metric()
    s = g + g
    frame = make_normal_frame(s, coordinate_10_frame(g.manifold, (0.0, 0.0)))
    e = np.array([1.0])
    lhs = bisectional(curvature_quasi_formula(s, frame=frame, normal=True), e, e)
    rhs = 2 * bisectional(curvature_quasi_formula(g, frame=frame), e, e)
    # R^{2g} = 2 R^g componentwise, so the margin is zero; both sides equal -2
    assert lhs == pytest.approx(-2.0, abs=1e-12)
    assert rhs - lhs == pytest.approx(0.0, abs=1e-12)
    rep = wu_report(g, g, 20, 1)
    assert np.max(np.abs(rep.margin)) < 1e-9


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.integers(0, 1000))
def test_wu_convex_cone(s, t, seed):
    gA = s * get_manifold("flat_c1").metric()
    gB = t * get_manifold("kahler_exp").metric()
    rep = wu_report(gA, gB, 3, seed)
    assert rep.min_margin >= -1e-9 * max(1.0, float(np.max(np.abs(rep.rhs))))


@given(st.floats(0.1, 5), st.floats(0.1, 5))
def test_nonpositive_curvature_is_a_cone(s, t):
    gA, gB = get_manifold("flat_c1").metric(), get_manifold("kahler_exp").metric()
    assert max_bisectional(gA, 3, 0) <= 1e-9 and max_bisectional(gB, 3, 0) <= 1e-9
    assert max_bisectional(s * gA + t * gB, 5, 1) <= 1e-9


def test_wu_rejects_different_structures():
    with pytest.raises(ValueError):
        wu_report(get_manifold("flat_c1").metric(), get_manifold("twisted_torus").metric(), 1, 0)


# -- rank-one augmentation ----------------------------------------------------------


def test_augment_doubles_flat_metric():
    M = get_manifold("flat_c1")
    h = augment_metric(M.metric(), fm.dz(M) * 1.0, [(0.1, 0.2)])
    G = gram_matrix(h.jet((0.1, 0.2), 0), coordinate_10_frame(M, (0.1, 0.2), 0)).value
    assert G[0, 0] == pytest.approx(1.0)  # g(d_z, d_zbar) = 1/2 plus |dz(d_z)|^2 / 2


def test_augment_inequality():
    M = get_manifold("kahler_exp")
    rep = augment_report(M.metric(), fm.dz(M) * 0.5, 60, 7)
    assert rep.min_margin >= -1e-9


def test_augment_rejects_non_holomorphic():
    M = get_manifold("kahler_exp")
    zbar_dz = fm.dz(M) * fm.function(M, "x1", "-y1")
    zbar_dz.bidegree = (1, 0)
    with pytest.raises(ValueError):
        augment_metric(M.metric(), zbar_dz, [(0.3, 0.4)])
    with pytest.raises(ValueError):
        augment_metric(M.metric(), fm.dzbar(M), [(0.3, 0.4)])


# -- product metrics -----------------------------------------------------------


def _torus_product(a):
    T = get_manifold("flat_torus")
    return product_metric(T.metric(), T.metric(), a, [fm.dz(T)], [fm.dz(T)])


def test_product_positivity_threshold():
    h = _torus_product(0.3)
    assert np.linalg.eigvalsh(h.at((1.0, 2.0, 3.0, 4.0))).min() == pytest.approx(0.4)
    assert h.parameter_count == 2
    with pytest.raises(PositivityError) as err:
        _torus_product(2.0)
    assert err.value.value == pytest.approx(-3.0)


def test_product_of_flat_tori_is_flat():
    assert abs(max_bisectional(_torus_product(0.3), 5, 0)) < 1e-12


def test_product_decomposition_roundtrip():
    h = _torus_product(0.3 - 0.1j)
    T = get_manifold("flat_torus")
    pts = [(1.0, 2.0, 3.0, 4.0), (0.5, 0.1, 2.0, 5.0)]
    dec = decompose_product_form(h.rho, [fm.dz(T)], [fm.dz(T)], pts, conjugate=True)
    assert dec.representable
    assert dec.a[0, 0] == pytest.approx(0.3 - 0.1j, abs=1e-12)
    # dx1 ^ dx2 alone is not of the form i a dz1 ^ dzbar2
    P = h.manifold
    bad = fm.wedge(fm.coordinate_form(P, [1, 0, 0, 0]), fm.coordinate_form(P, [0, 0, 1, 0]))
    assert not decompose_product_form(bad, [fm.dz(T)], [fm.dz(T)], pts, conjugate=True).representable


def test_product_shape_mismatch():
    T = get_manifold("flat_torus")
    with pytest.raises(ValueError):
        product_metric(T.metric(), T.metric(), [[0.1, 0.2]], [fm.dz(T)], [fm.dz(T)])
