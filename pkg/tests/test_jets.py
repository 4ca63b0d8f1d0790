"""Jet arithmetic against finite differences, closed forms and algebraic laws."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from almosthermitian import jets as jt
from almosthermitian.expr import parse_expression
from almosthermitian.jets import Jet, JetError
from almosthermitian.manifold import catalog

FD_STEP = 1e-4


def coeff_dict(j):
    sp = j.space
    return {tuple(sp.indices[k]): j.coeffs[k] for k in range(sp.size) if abs(j.coeffs[k]) > 0}


def test_space_sizes():
    for nvars, order in [(2, 3), (4, 3), (8, 3), (3, 0)]:
        assert jt.jet_space(nvars, order).size == math.comb(nvars + order, order)


def test_product_of_linear_factors():
    x1, x2 = Jet.variables((0.0, 0.0), 2)
    prod = (x1 + 1) * (x2 + 1)
    assert coeff_dict(prod) == {(0, 0): 1, (1, 0): 1, (0, 1): 1, (1, 1): 1}


def test_reciprocal_is_inverse():
    x = Jet.variables((0.3, -0.2, 0.5), 3)
    j = (x[0] * x[1] + x[2].exp() + 2.0) * (1 + 0.5j)
    one = j * j.reciprocal()
    assert np.allclose(one.coeffs, Jet.constant(1.0, j.point, 3).coeffs, atol=1e-14)


def test_truncation_matches_full_product():
    # degree <= K part of the full convolution: compare against order-6 product
    p = (0.1, 0.2)
    lo = Jet.variables(p, 3)
    hi = Jet.variables(p, 6)
    a_lo, a_hi = (lo[0] + 2 * lo[1] ** 2).exp(), (hi[0] + 2 * hi[1] ** 2).exp()
    b_lo, b_hi = lo[0].sin() + lo[1], hi[0].sin() + hi[1]
    assert np.allclose((a_lo * b_lo).coeffs, (a_hi * b_hi).truncate(3).coeffs, atol=1e-13)


def _fd_hessian(f, p, h=FD_STEP):
    m = len(p)
    H = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            ea, eb = np.eye(m)[a] * h, np.eye(m)[b] * h
            H[a, b] = (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (4 * h * h)
    return H


def test_exp_jet_second_partials_match_finite_differences():
    p = np.array([0.3, 0.4])
    x1, x2 = Jet.variables(p, 3)
    j = (x1**2 + x2**2).exp()
    H = _fd_hessian(lambda q: math.exp(q[0] ** 2 + q[1] ** 2), p)
    for a in range(2):
        for b in range(2):
            idx = [0, 0]
            idx[a] += 1
            idx[b] += 1
            assert abs(j.partial(idx) - H[a, b]) < 1e-6


def test_partial_examples():
    x1, x2 = Jet.variables((0.0, 0.0), 3)
    assert (x1**2).partial((2, 0)) == 2
    c = Jet.constant(4.2, (0.0, 0.0), 3)
    for idx in [(1, 0), (0, 1), (1, 1), (3, 0)]:
        assert c.partial(idx) == 0
    assert abs(x1.exp().partial((3, 0)) - 1) < 1e-15
    with pytest.raises(JetError):
        x1.partial((2, 2))


def test_apply_vector_field_examples():
    x1, x2 = Jet.variables((0.0, 0.0), 3)
    d_x1 = Jet.constant(np.array([1.0, 0.0]), (0.0, 0.0), 3)
    out = jt.apply_vector_field(d_x1, x1**2)
    assert out.order == 2
    assert np.allclose(out.coeffs, (2 * x1).truncate(2).coeffs)

    y1, y2 = Jet.variables((1.0, 1.0), 2)
    field = jt.stack([y1 * 0.0, y1])  # x1 d/dx2
    out = jt.apply_vector_field(field, y2)
    assert out.value == pytest.approx(1.0)

    with pytest.raises(JetError):
        jt.apply_vector_field(d_x1.truncate(0), x1.truncate(0))


def test_binary_ops_reject_mismatch():
    a = Jet.variable(0, (0.0, 0.0), 3)
    with pytest.raises(JetError):
        a * Jet.variable(0, (0.0, 0.0), 2)
    with pytest.raises(JetError):
        a + Jet.variable(0, (0.1, 0.0), 3)
    with pytest.raises(JetError):
        jt.jet_mul(a, Jet.variable(0, (0.0, 0.0), 2))


def test_matrix_inverse():
    p = (0.2, -0.1)
    x, y = Jet.variables(p, 3)
    m = jt.stack([jt.stack([x.exp() + 2, y * x]), jt.stack([y.sin(), 3 + x * y])])
    mi = jt.inv(m)
    eye = jt.einsum("ij,jk->ik", m, mi)
    assert np.allclose(eye.coeffs[..., 0], np.eye(2), atol=1e-14)
    assert np.allclose(eye.coeffs[..., 1:], 0, atol=1e-13)
    with pytest.raises(np.linalg.LinAlgError):
        jt.inv(Jet.constant(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]]), p, 3), max_cond=1e8)


def test_evaluation_is_taylor_polynomial():
    p = (0.5, 0.25)
    x, y = Jet.variables(p, 3)
    j = x * x * y + 3 * y
    assert j((0.7, 0.1)) == pytest.approx(0.7 * 0.7 * 0.1 + 0.3)


def test_embed_places_variables():
    x = Jet.variables((0.3,), 2)[0]
    e = jt.embed(x**2, (9.0, 0.3, 1.0), 1)
    assert e.partial((0, 2, 0)) == pytest.approx(2.0)
    assert e.value == pytest.approx(0.09)
    with pytest.raises(JetError):
        jt.embed(x, (0.0, 0.0), 0)


# -- catalog expressions against chained finite differences ------------------


def _catalog_expressions():
    seen = {}
    for M in catalog():
        for mat in (M.J_entries, M.g0_entries):
            for row in mat:
                for e in row:
                    if e.variables():
                        seen.setdefault((str(e), M.coordinates), (e, M))
    return list(seen.values())


def test_catalog_partials_match_finite_differences():
    """Order-1 partials against central differences of the float evaluation,
    order-k partials against central differences of jet order-(k-1) partials
    at shifted base points; step 1e-4, relative error 1e-5."""
    rng = np.random.default_rng(11)
    exprs = _catalog_expressions()
    assert len(exprs) >= 5
    worst = 0.0
    for k in range(100):
        e, M = exprs[k % len(exprs)]
        p = M.sample_points(rng, 1)[0]
        m = M.dim

        def jet_at(q, order=3):
            env = dict(zip(M.coordinates, Jet.variables(q, order)))
            return e.evaluate(env)

        def value(q):
            return e.evaluate(dict(zip(M.coordinates, q)))

        j = jet_at(p)
        sp = j.space
        for slot in range(1, sp.size):
            alpha = sp.indices[slot]
            a = int(np.flatnonzero(alpha)[0])
            lower = alpha.copy()
            lower[a] -= 1
            h = np.eye(m)[a] * FD_STEP
            if lower.sum() == 0:
                fd = (value(p + h) - value(p - h)) / (2 * FD_STEP)
            else:
                fd = (jet_at(p + h, 2).partial(lower) - jet_at(p - h, 2).partial(lower)) / (2 * FD_STEP)
            exact = j.partial(alpha)
            err = abs(exact - fd) / max(1.0, abs(exact))
            worst = max(worst, err)
    assert worst < 1e-5


# -- algebraic properties -------------------------------------------------------

coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@st.composite
def jets(draw, nvars=3, order=3):
    size = jt.jet_space(nvars, order).size
    re = draw(st.lists(coef, min_size=size, max_size=size))
    im = draw(st.lists(coef, min_size=size, max_size=size))
    return Jet(np.array(re) + 1j * np.array(im), (0.1, 0.2, 0.3), order)


@given(jets(), jets())
def test_mul_commutes(a, b):
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-12)


@given(jets(), jets(), jets())
def test_mul_associates(a, b, c):
    assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-10)


@given(jets(), jets(), st.lists(coef, min_size=3, max_size=3))
def test_leibniz(a, b, v):
    field = Jet.constant(np.array(v), a.point, a.order)
    lhs = jt.apply_vector_field(field, a * b)
    rhs = jt.apply_vector_field(field, a) * b.truncate(2) + a.truncate(2) * jt.apply_vector_field(field, b)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-10)


@given(jets(), st.integers(0, 2), st.integers(0, 2))
def test_partials_commute(a, u, v):
    assert np.allclose(a.derivative(u).derivative(v).coeffs, a.derivative(v).derivative(u).coeffs)


@given(jets())
def test_constant_term_of_composition_matches_float(a):
    val = complex(a.value)
    assert abs(a.exp().value - np.exp(val)) < 1e-9 * max(1, abs(np.exp(val)))
    assert abs(a.sin().value - np.sin(val)) < 1e-9 * max(1, abs(np.sin(val)))


def test_expression_jet_constant_term_is_float_value():
    e = parse_expression("sqrt(2 + sin(x)^2) / (1 + exp(-y))", ["x", "y"])
    p = (0.3, 1.7)
    env = dict(zip("xy", Jet.variables(p, 3)))
    assert e.evaluate(env).value == pytest.approx(e.evaluate({"x": p[0], "y": p[1]}), abs=1e-15)
