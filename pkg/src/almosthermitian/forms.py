"""
Differential forms on a chart, with jet coefficients.

A k-form is stored as the full antisymmetric array of its components
against the complexified coordinate coframe ``dx^a``::

    alpha(v_1, ..., v_k) = alpha[a_1, ..., a_k] v_1^{a_1} ... v_k^{a_k}

so ``(dx^1 ^ dx^2)[0, 1] = 1``.  Type decompositions use the pointwise
(or jet-wise) projector ``P = (I - iJ)/2`` slot by slot; special frames
only appear inside the holomorphy criteria.
"""

import itertools
import math

import numpy as np

from . import jets as jt
from .expr import parse_expression
from .frames import coordinate_10_frame, make_pseudo_holomorphic_frame, projector_10
from .jets import Jet

__all__ = [
    "FormField",
    "HolomorphyResult",
    "coordinate_form",
    "dz",
    "dzbar",
    "function",
    "random_form",
    "wedge",
    "exterior_derivative",
    "type_project",
    "type_norms",
    "dbar",
    "interior",
    "lie_derivative",
    "cartan_lie_derivative",
    "lie_identity_residual",
    "is_holomorphic_at",
    "fundamental_form",
    "metric_from_form",
    "pullback",
]

_LETTERS = "abcdefghijklmnop"


class FormField:
    """A k-form field on a chart.

    Parameters
    ----------
    manifold : ChartManifold
    degree : int
    components : callable
        ``components(p, order)`` returns a :class:`Jet` of shape
        ``(2n,) * degree`` (antisymmetric in its axes).
    bidegree : tuple of int, optional
        Declared type ``(r, s)``; ``None`` for forms of mixed type.
    """

    def __init__(self, manifold, degree, components, bidegree=None, name="form"):
        if bidegree is not None and sum(bidegree) != degree:
            raise ValueError(f"bidegree {bidegree} does not add up to degree {degree}")
        self.manifold = manifold
        self.degree = degree
        self._components = components
        self.bidegree = None if bidegree is None else tuple(bidegree)
        self.name = name

    def jet(self, p, order):
        out = self._components(jt._as_point(p), order)
        m = self.manifold.dim
        if out.shape != (m,) * self.degree:
            raise ValueError(f"{self.name}: components have shape {out.shape}, expected {(m,) * self.degree}")
        return out

    def at(self, p):
        return self.jet(p, 0).value

    def _like(self, components, name, bidegree="same"):
        bd = self.bidegree if bidegree == "same" else bidegree
        return FormField(self.manifold, self.degree, components, bd, name)

    def __add__(self, other):
        if other.degree != self.degree or other.manifold is not self.manifold and other.manifold != self.manifold:
            raise ValueError("can only add forms of equal degree on the same chart")
        bd = self.bidegree if self.bidegree == other.bidegree else None
        return self._like(lambda p, k: self.jet(p, k) + other.jet(p, k), f"({self.name} + {other.name})", bd)

    def __neg__(self):
        return self._like(lambda p, k: -self.jet(p, k), f"-{self.name}")

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, FormField):
            if c.degree != 0:
                raise TypeError("use wedge() for products of positive-degree forms")
            return self._like(lambda p, k: self.jet(p, k) * c.jet(p, k), f"{c.name}*{self.name}")
        c = complex(c)
        label = f"{c.real:g}" if c.imag == 0 else f"({c:g})"
        return self._like(lambda p, k: self.jet(p, k) * c, f"{label}*{self.name}")

    __rmul__ = __mul__

    def conj(self):
        bd = None if self.bidegree is None else self.bidegree[::-1]
        return self._like(lambda p, k: self.jet(p, k).conj(), f"conj({self.name})", bd)

    def __repr__(self):
        t = "" if self.bidegree is None else f" of type {self.bidegree}"
        return f"<{self.degree}-form {self.name}{t} on {self.manifold.name}>"


def _constant_jet(value, p, order):
    return Jet.constant(np.asarray(value, dtype=complex), p, order)


def coordinate_form(manifold, weights, bidegree=None, name="form"):
    """Constant-coefficient 1-form ``sum_a weights[a] dx^a``."""
    w = np.asarray(weights, dtype=complex)
    if w.shape != (manifold.dim,):
        raise ValueError(f"need {manifold.dim} weights, got shape {w.shape}")
    return FormField(manifold, 1, lambda p, k: _constant_jet(w, p, k), bidegree, name)


def _pair_index(manifold, k):
    if not 1 <= k <= manifold.n:
        raise ValueError(f"complex coordinate index {k} out of range 1..{manifold.n}")
    return 2 * (k - 1)


def dz(manifold, k=1):
    """``dz_k = dx_k + i dy_k`` with coordinates ordered ``(x1, y1, x2, y2, ...)``.

    This is a (1,0)-form only where ``J`` is standard on that pair.
    """
    w = np.zeros(manifold.dim, dtype=complex)
    a = _pair_index(manifold, k)
    w[a], w[a + 1] = 1, 1j
    return coordinate_form(manifold, w, (1, 0), f"dz{k}")


def dzbar(manifold, k=1):
    return dz(manifold, k).conj()


def function(manifold, re, im="0", name=None):
    """Complex function ``re + i im`` from expression strings, as a 0-form."""
    parts = [parse_expression(e, manifold.coordinates) for e in (re, im)]

    def comp(p, k):
        env = dict(zip(manifold.coordinates, Jet.variables(p, k)))
        vals = [e.evaluate(env) for e in parts]
        vals = [v if isinstance(v, Jet) else Jet.constant(v, p, k) for v in vals]
        return vals[0] + vals[1] * 1j

    return FormField(manifold, 0, comp, (0, 0), name or f"({re}) + i({im})")


def _antisymmetrize(a, k):
    """Antisymmetrize the first ``k`` axes of an array (no normalization)."""
    out = np.zeros_like(a)
    for perm in itertools.permutations(range(k)):
        sign = _sign(perm)
        out = out + sign * np.transpose(a, perm + tuple(range(k, a.ndim)))
    return out


def _sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def random_form(rng, manifold, p, degree, bidegree=None, order=3, poly_degree=2):
    """Random polynomial k-form around ``p``, projected to ``bidegree`` jet-wise.

    The returned field only evaluates at ``p`` (at orders ``<= order``).
    """
    m = manifold.dim
    p = jt._as_point(p)
    space = jt.jet_space(m, order)
    c = np.zeros((m,) * degree + (space.size,), dtype=complex)
    live = space.degrees <= poly_degree
    shape = (m,) * degree + (int(live.sum()),)
    c[..., live] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    c = _antisymmetrize(c, degree) / math.factorial(degree)
    a = Jet(c, p, order)
    if bidegree is not None:
        a = type_project(a, manifold.structure_jet(p, order), *bidegree)

    def comp(q, k):
        if q != p:
            raise ValueError(f"random form is only expanded at {p}")
        return a.truncate(k)

    return FormField(manifold, degree, comp, bidegree, "random")


# -- algebra -----------------------------------------------------------------


def _wedge_arrays(a, b, ka, kb):
    """Wedge of component arrays/jets (first ka resp. kb axes are form slots)."""
    if ka == 0 or kb == 0:
        return a * b
    la, lb = _LETTERS[:ka], _LETTERS[ka : ka + kb]
    if isinstance(a, Jet) or isinstance(b, Jet):
        if isinstance(a, Jet) and isinstance(b, Jet):
            a, b = jt.common(a, b)
        outer = jt.einsum(f"{la},{lb}->{la}{lb}", a, b)
        coeffs = _antisymmetrize(outer.coeffs, ka + kb)
        return Jet(coeffs / (math.factorial(ka) * math.factorial(kb)), outer.point, outer.order)
    outer = np.einsum(f"{la},{lb}->{la}{lb}", a, b)
    return _antisymmetrize(outer, ka + kb) / (math.factorial(ka) * math.factorial(kb))


def wedge(alpha, beta):
    """``alpha ^ beta`` with the determinant convention ``(dx ^ dy)(d_x, d_y) = 1``."""
    if alpha.manifold != beta.manifold:
        raise ValueError("forms live on different charts")
    bd = None
    if alpha.bidegree is not None and beta.bidegree is not None:
        bd = (alpha.bidegree[0] + beta.bidegree[0], alpha.bidegree[1] + beta.bidegree[1])
    return FormField(
        alpha.manifold,
        alpha.degree + beta.degree,
        lambda p, k: _wedge_arrays(alpha.jet(p, k), beta.jet(p, k), alpha.degree, beta.degree),
        bd,
        f"{alpha.name}^{beta.name}",
    )


def _d(a, k):
    """Exterior derivative of a component jet of degree ``k``; order drops by one."""
    D = np.moveaxis(a.gradient().coeffs, k, 0)  # D[a0, a1..ak, :] = d_{a0} alpha_{a1..ak}
    out = np.zeros_like(D)
    for j in range(k + 1):
        out = out + (-1) ** j * np.moveaxis(D, 0, j)
    return Jet(out, a.point, a.order - 1)


def exterior_derivative(alpha):
    """``d alpha`` as a form field (type left undeclared)."""
    k = alpha.degree
    return FormField(alpha.manifold, k + 1, lambda p, K: _d(alpha.jet(p, K + 1), k), None, f"d{alpha.name}")


def _slot_contract(a, Q, j, k):
    """Replace slot ``j`` of ``a`` by ``Q^T`` applied to it: ``a[..b..] Q[b, c]``."""
    letters = _LETTERS[:k]
    src = letters[:j] + "z" + letters[j + 1 :]
    sub = f"{src},z{letters[j]}->{letters}"
    if isinstance(a, Jet) or isinstance(Q, Jet):
        if isinstance(a, Jet) and isinstance(Q, Jet):
            a, Q = jt.common(a, Q)
        return jt.einsum(sub, a, Q)
    return np.einsum(sub, a, Q)


def type_project(a, J, r, s):
    """``(r, s)``-component of a k-form's components (array or jet).

    ``J`` is the structure at ``p`` (array) or a structure jet.
    """
    k = r + s
    degree = a.ndim if not isinstance(a, Jet) else len(a.shape)
    if degree != k:
        raise ValueError(f"form of degree {degree} has no ({r},{s}) component")
    if k == 0:
        return a
    if isinstance(J, Jet) and isinstance(a, Jet):
        J = J.truncate(min(J.order, a.order))
        a = a.truncate(J.order)
    P = projector_10(J)
    Pbar = P.conj() if isinstance(P, Jet) else np.conj(P)
    total = None
    for S in itertools.combinations(range(k), r):
        term = a
        for j in range(k):
            term = _slot_contract(term, P if j in S else Pbar, j, k)
        total = term if total is None else total + term
    return total


def type_norms(a, J):
    """Max-abs of every ``(r, s)`` component of a component array at a point."""
    k = a.ndim
    return {(r, k - r): float(np.max(np.abs(type_project(a, J, r, k - r))) if k else abs(a)) for r in range(k + 1)}


def dbar(alpha):
    """``dbar alpha = (d alpha)^(r, s+1)`` for a form of declared type ``(r, s)``."""
    if alpha.bidegree is None:
        raise ValueError("dbar needs a form of declared type (r, s)")
    r, s = alpha.bidegree
    d = exterior_derivative(alpha)
    man = alpha.manifold

    def comp(p, k):
        return type_project(d.jet(p, k), man.structure_jet(p, k), r, s + 1)

    return FormField(man, alpha.degree + 1, comp, (r, s + 1), f"dbar({alpha.name})")


def interior(X, a):
    """``i_X a``: contract the first slot of the component array/jet ``a``."""
    k = len(a.shape)
    if k == 0:
        raise ValueError("interior product of a 0-form")
    rest = _LETTERS[1:k]
    if isinstance(X, Jet) and isinstance(a, Jet):
        X, a = jt.common(X, a)
    if isinstance(X, Jet) or isinstance(a, Jet):
        return jt.einsum(f"a,a{rest}->{rest}", X, a)
    return np.einsum(f"a,a{rest}->{rest}", X, a)


def lie_derivative(V, a):
    """``L_V a`` from the coordinate formula; jets in, jet of order ``-1`` out.

    ``(L_V a)_{a_1..a_k} = V^b d_b a_{a_1..a_k} + sum_j a_{a_1..b..a_k} d_{a_j} V^b``
    """
    k = len(a.shape)
    V, a = jt.common(V, a)
    if k == 0:
        return jt.apply_vector_field(V, a)
    grad_a = a.gradient()  # [..., b]
    V1 = V.truncate(grad_a.order)
    letters = _LETTERS[:k]
    out = jt.einsum(f"{letters}z,z->{letters}", grad_a, V1)
    dV = V.gradient()  # [b, c] = d_c V^b
    a1 = a.truncate(dV.order)
    for j in range(k):
        src = letters[:j] + "z" + letters[j + 1 :]
        out = out + jt.einsum(f"{src},z{letters[j]}->{letters}", a1, dV)
    return out


def cartan_lie_derivative(V, a):
    """``L_V a = i_V da + d(i_V a)`` on component jets."""
    k = len(a.shape)
    V, a = jt.common(V, a)
    da = _d(a, k)
    first = interior(V.truncate(da.order), da)
    if k == 0:
        return first
    second = _d(interior(V, a), k - 1)
    return first + second


def lie_identity_residual(manifold, X, alpha, p):
    """``|(L_{conj X} alpha)^(r,0) - i_{conj X} dbar alpha|`` at ``p``.

    ``X`` is a (1,0) vector-field jet and ``alpha`` an ``(r, 0)`` form field.
    The Lie derivative uses the coordinate formula; returns both sides too.
    """
    r = alpha.degree
    K = X.order
    a = alpha.jet(p, K)
    Xb = X.conj()
    J0 = manifold.J_at(p)
    lhs = type_project(lie_derivative(Xb, a).value, J0, r, 0)
    d = _d(a, r).value
    rhs = interior(Xb.value, type_project(d, J0, r, 1))
    return float(np.max(np.abs(lhs - rhs))) if r else float(abs(lhs - rhs)), lhs, rhs


class HolomorphyResult:
    """Outcome of :func:`is_holomorphic_at`.

    Attributes
    ----------
    holomorphic : bool
    residual : float
        Largest ``|conj(e_k)(alpha(e_I))(p)|``.
    coefficient_route, dbar_route : ndarray
        ``[k, I]`` arrays from the two criteria (``I`` runs over increasing
        index tuples).
    agreement : float
        Max deviation between the two routes.
    """

    def __init__(self, holomorphic, residual, coefficient_route, dbar_route, agreement, tol):
        self.holomorphic = holomorphic
        self.residual = residual
        self.coefficient_route = coefficient_route
        self.dbar_route = dbar_route
        self.agreement = agreement
        self.tol = tol

    def __bool__(self):
        return bool(self.holomorphic)

    def __repr__(self):
        return f"HolomorphyResult(holomorphic={self.holomorphic}, residual={self.residual:.3g}, agreement={self.agreement:.3g})"


def is_holomorphic_at(alpha, p, tol=1e-8, order=3, frame=None):
    """Test an ``(r, 0)``-form for holomorphy at ``p`` by two routes.

    The coefficient route expands ``alpha`` in the coframe dual to a pseudo
    holomorphic frame ``e`` at ``p`` and differentiates the coefficients
    along ``conj(e_k)``; the other evaluates ``dbar alpha(conj e_k, e_I)``.
    """
    if alpha.bidegree is not None and alpha.bidegree[1] != 0:
        raise ValueError(f"holomorphy is defined for (r, 0)-forms, got type {alpha.bidegree}")
    r = alpha.degree
    man = alpha.manifold
    p = jt._as_point(p)
    if frame is None:
        frame = make_pseudo_holomorphic_frame(coordinate_10_frame(man, p, order))
    E = frame.vectors
    tuples = list(itertools.combinations(range(frame.n), r))
    a = alpha.jet(p, E.order)
    # coefficient route
    coef = []
    for I in tuples:
        c = a
        for i in I:
            c = interior(E[i], c)
        coef.append(c)
    route1 = np.zeros((frame.n, len(tuples)), dtype=complex)
    for q, c in enumerate(coef):
        route1[:, q] = jt.apply_vector_field(E.conj().truncate(c.order - 1), c[None]).value
    # dbar route
    J0 = man.J_at(p)
    db = type_project(_d(a, r).value, J0, r, 1)
    E0 = E.value
    route2 = np.zeros_like(route1)
    for k in range(frame.n):
        ik = interior(E0[k].conj(), db)
        for q, I in enumerate(tuples):
            v = ik
            for i in I:
                v = interior(E0[i], v)
            route2[k, q] = v
    residual = float(np.max(np.abs(route1))) if route1.size else 0.0
    agreement = float(np.max(np.abs(route1 - route2))) if route1.size else 0.0
    return HolomorphyResult(residual < tol, residual, route1, route2, agreement, tol)


# -- fundamental forms ---------------------------------------------------------


def fundamental_form(metric):
    """``omega(X, Y) = g(JX, Y)``, components ``J^T g``; type (1,1)."""
    man = metric.manifold

    def comp(p, k):
        return jt.einsum("ca,cb->ab", man.structure_jet(p, k), metric.jet(p, k))

    return FormField(man, 2, comp, (1, 1), f"omega({metric.name})")


def metric_from_form(omega_jet, J_jet):
    """Invert ``omega = J^T g``: ``g = omega J``.  Returns ``(g, roundtrip)``.

    ``roundtrip`` is the max deviation of ``J^T (omega J)`` from ``omega`` at
    the base point, which vanishes iff ``omega`` is J-invariant.
    """
    omega_jet, J_jet = jt.common(omega_jet, J_jet)
    g = jt.einsum("ac,cb->ab", omega_jet, J_jet)
    back = np.einsum("ca,cb->ab", J_jet.value, g.value)
    return g, float(np.max(np.abs(back - omega_jet.value)))


def _embed_slots(a, degree, total_dim, offset, point):
    """Pull back component jet ``a`` of a factor to the product chart."""
    e = jt.embed(a, point, offset)
    m = a.shape[0] if degree else 0
    coeffs = np.zeros((total_dim,) * degree + (e.space.size,), dtype=complex)
    sl = tuple(slice(offset, offset + m) for _ in range(degree))
    coeffs[sl] = e.coeffs
    return Jet(coeffs, point, a.order)


def pullback(alpha, product, offset):
    """Pull ``alpha`` back along the projection onto a factor of ``product``.

    The factor's coordinates are ``offset .. offset + 2m - 1`` of the
    product chart.
    """
    m = alpha.manifold.dim

    def comp(p, k):
        return _embed_slots(alpha.jet(p[offset : offset + m], k), alpha.degree, product.dim, offset, p)

    return FormField(product, alpha.degree, comp, alpha.bidegree, f"pr*{alpha.name}")
