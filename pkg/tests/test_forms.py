import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from almosthermitian import forms as fm
from almosthermitian.connection import random_vector_field
from almosthermitian.frames import coordinate_10_frame, projector_10
from almosthermitian.jets import Jet
from almosthermitian.manifold import TWISTED_TORUS_PROBE, catalog, get_manifold, product_manifold

CATALOG = catalog()
TWISTED = get_manifold("twisted_torus")


def _dx(M, a):
    w = np.zeros(M.dim)
    w[a] = 1
    return fm.coordinate_form(M, w, name=f"dx{a}")


def test_wedge_convention():
    M = get_manifold("flat_c1")
    w = fm.wedge(_dx(M, 0), _dx(M, 1)).at((0.0, 0.0))
    assert w[0, 1] == 1 and w[1, 0] == -1


def test_dbar_of_zbar_dz():
    M = get_manifold("flat_c1")
    zbar = fm.function(M, "x1", "-y1")
    a = fm.dz(M) * zbar
    a.bidegree = (1, 0)
    d = fm.dbar(a).at((0.3, 0.2))
    assert d[0, 1] == pytest.approx(2j) and d[1, 0] == pytest.approx(-2j)


def test_d_matches_sympy():
    M = get_manifold("flat_c1")
    x, y = sp.symbols("x1 y1", real=True)
    f, g = x**2 * sp.sin(y), sp.exp(x * y)
    a = _dx(M, 0) * fm.function(M, "x1^2*sin(y1)") + _dx(M, 1) * fm.function(M, "exp(x1*y1)")
    expected = sp.diff(g, x) - sp.diff(f, y)
    p = (0.4, -0.3)
    val = fm.exterior_derivative(a).at(p)
    assert val[0, 1] == pytest.approx(float(expected.subs({x: p[0], y: p[1]})), abs=1e-13)


def _rform(seed, degree, bidegree=None, M=TWISTED, p=TWISTED_TORUS_PROBE):
    return fm.random_form(np.random.default_rng(seed), M, p, degree, bidegree)


@given(st.integers(0, 10**6), st.integers(0, 2))
def test_d_squared_vanishes(seed, k):
    a = _rform(seed, k)
    dd = fm.exterior_derivative(fm.exterior_derivative(a)).at(TWISTED_TORUS_PROBE)
    assert np.max(np.abs(dd)) < 1e-10


@given(st.integers(0, 10**6), st.integers(1, 2), st.integers(1, 2))
def test_wedge_graded_commutative(seed, k, l):
    a, b = _rform(seed, k), _rform(seed + 1, l)
    ab = fm.wedge(a, b).at(TWISTED_TORUS_PROBE)
    ba = fm.wedge(b, a).at(TWISTED_TORUS_PROBE)
    assert np.allclose(ab, (-1) ** (k * l) * ba, atol=1e-12)


@given(st.integers(0, 10**6), st.integers(0, 2), st.integers(1, 2))
def test_d_leibniz(seed, k, l):
    a, b = _rform(seed, k), _rform(seed + 1, l)
    p = TWISTED_TORUS_PROBE
    lhs = fm.exterior_derivative(fm.wedge(a, b)).at(p)
    rhs = fm.wedge(fm.exterior_derivative(a), b).at(p) + (-1) ** k * fm.wedge(a, fm.exterior_derivative(b)).at(p)
    assert np.allclose(lhs, rhs, atol=1e-10)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_type_partition(seed, k):
    a = _rform(seed, k).at(TWISTED_TORUS_PROBE)
    J = TWISTED.J_at(TWISTED_TORUS_PROBE)
    parts = [fm.type_project(a, J, r, k - r) for r in range(k + 1)]
    assert np.allclose(sum(parts), a, atol=1e-12)
    for r, part in enumerate(parts):
        assert np.allclose(fm.type_project(part, J, r, k - r), part, atol=1e-12)
        norms = fm.type_norms(part, J)
        assert all(v < 1e-12 for t, v in norms.items() if t != (r, k - r))


@given(st.integers(0, 10**6), st.sampled_from([(1, 0), (0, 1), (1, 1), (2, 0)]))
def test_dbar_is_pure(seed, bd):
    a = _rform(seed, sum(bd), bd)
    J = TWISTED.J_at(TWISTED_TORUS_PROBE)
    out = fm.dbar(a).at(TWISTED_TORUS_PROBE)
    norms = fm.type_norms(out, J)
    target = (bd[0], bd[1] + 1)
    assert all(v < 1e-10 for t, v in norms.items() if t != target)


@pytest.mark.parametrize("M", [m for m in CATALOG if m.n <= 2], ids=lambda m: m.name)
def test_lie_identity(M, rng):
    worst = 0.0
    for p in M.sample_points(rng, 3):
        J = M.structure_jet(p, 3)
        for r in range(M.n + 1):
            X = random_vector_field(rng, tuple(p), 3, M.dim, "10", J)
            alpha = fm.random_form(rng, M, p, r, (r, 0))
            res, lhs, _ = fm.lie_identity_residual(M, X, alpha, p)
            worst = max(worst, res / max(1.0, float(np.max(np.abs(lhs)))))
    assert worst < 1e-8


@given(st.integers(0, 10**6), st.integers(0, 2))
def test_cartan_formula(seed, k):
    rng = np.random.default_rng(seed)
    V = random_vector_field(rng, TWISTED_TORUS_PROBE, 3, 4)
    a = _rform(seed, k).jet(TWISTED_TORUS_PROBE, 3)
    lhs = fm.lie_derivative(V, a)
    rhs = fm.cartan_lie_derivative(V, a)
    assert np.allclose(lhs.coeffs, rhs.truncate(lhs.order).coeffs, atol=1e-10)


def test_interior_antiderivation(rng):
    p = TWISTED_TORUS_PROBE
    a, b = _rform(1, 1).at(p), _rform(2, 1).at(p)
    X = rng.normal(size=4) + 1j * rng.normal(size=4)
    ab = fm._wedge_arrays(a, b, 1, 1)
    assert np.allclose(fm.interior(X, ab), fm.interior(X, a) * b - a * fm.interior(X, b))
    with pytest.raises(ValueError):
        fm.interior(X, np.array(1.0))


# -- holomorphy ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["flat_c1", "kahler_exp", "flat_torus"])
def test_dz_is_holomorphic(name):
    M = get_manifold(name)
    res = fm.is_holomorphic_at(fm.dz(M) * 0.5, (0.3, 0.4))
    assert res.holomorphic and res.residual < 1e-12 and res.agreement < 1e-12


def test_dz_is_holomorphic_on_flat_c2():
    M = get_manifold("flat_c2")
    for k in (1, 2):
        res = fm.is_holomorphic_at(fm.dz(M, k), (0.1, 0.2, 0.3, 0.4))
        assert res.residual < 1e-10


def test_holomorphic_function_coefficient():
    M = get_manifold("flat_c1")
    z2 = fm.function(M, "x1^2 - y1^2", "2*x1*y1")
    res = fm.is_holomorphic_at(fm.dz(M) * z2, (0.3, 0.4))
    assert res.holomorphic
    zbar = fm.function(M, "x1", "-y1")
    res = fm.is_holomorphic_at(fm.dz(M) * zbar, (0.3, 0.4))
    assert not res.holomorphic
    assert res.residual == pytest.approx(1.0)
    assert res.agreement < 1e-12


def test_holomorphy_routes_agree_on_twisted_torus(rng):
    for r in (1, 2):
        for _ in range(5):
            alpha = fm.random_form(rng, TWISTED, TWISTED_TORUS_PROBE, r, (r, 0))
            res = fm.is_holomorphic_at(alpha, TWISTED_TORUS_PROBE)
            assert res.agreement < 1e-8 * max(1.0, res.residual)


def test_holomorphy_needs_r0_type():
    M = get_manifold("flat_c1")
    with pytest.raises(ValueError):
        fm.is_holomorphic_at(fm.dzbar(M), (0.0, 0.0))
    with pytest.raises(ValueError):
        fm.dbar(fm.coordinate_form(M, [1, 0]))


# -- fundamental form and pullbacks -------------------------------------------------


@pytest.mark.parametrize("M", CATALOG, ids=lambda m: m.name)
def test_fundamental_form_roundtrip(M, rng):
    p = M.sample_points(rng, 1)[0]
    g = M.metric()
    w = fm.fundamental_form(g).jet(p, 1)
    assert np.allclose(w.value, -w.value.T)
    assert fm.type_norms(w.value, M.J_at(p))[(1, 1)] > 0
    assert all(v < 1e-12 for t, v in fm.type_norms(w.value, M.J_at(p)).items() if t != (1, 1))
    back, rt = fm.metric_from_form(w, M.structure_jet(p, 1))
    assert rt < 1e-12
    assert np.allclose(back.coeffs, g.jet(p, 1).coeffs, atol=1e-12)


def test_pullback_of_dz():
    T = get_manifold("flat_torus")
    P = product_manifold(T, T)
    pulled = fm.pullback(fm.dz(T), P, 2).at((0.1, 0.2, 0.3, 0.4))
    assert np.allclose(pulled, fm.dz(P, 2).at((0.1, 0.2, 0.3, 0.4)))
    f = fm.function(T, "sin(x1)")
    q = fm.pullback(f, P, 2).jet((0.1, 0.2, 0.3, 0.4), 1)
    assert q.value == pytest.approx(np.sin(0.3))
    assert q.partial((0, 0, 1, 0)) == pytest.approx(np.cos(0.3))
    assert q.partial((1, 0, 0, 0)) == 0


def test_form_arithmetic_guards():
    M = get_manifold("flat_c1")
    a = fm.dz(M)
    with pytest.raises(ValueError):
        a + fm.wedge(a, fm.dzbar(M))
    with pytest.raises(TypeError):
        a * fm.dzbar(M)
    with pytest.raises(ValueError):
        fm.FormField(M, 1, lambda p, k: Jet.zeros((2,), p, k), (1, 1))
    with pytest.raises(ValueError):
        fm.coordinate_form(M, [1, 2, 3])
    P = projector_10(M.J_at((0, 0)))
    assert np.allclose(a.at((0, 0)) @ P.conj(), 0)  # dz kills (0,1)-vectors
    assert coordinate_10_frame(M, (0.0, 0.0)).n == 1
