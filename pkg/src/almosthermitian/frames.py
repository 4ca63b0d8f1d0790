"""
Complexified tangent calculus and special (1,0)-frames at a point.

Vector fields are jets whose last axis holds the ``2n`` complex components
in the real coordinate basis ``d/dx_a``.  A frame of ``n`` fields is a jet
of shape ``(n, 2n)`` whose row ``i`` is ``e_i``.

Frame constructions follow one pattern: a new frame ``e_i = f_ij v_j`` is
built from a base frame ``v`` with polynomial transition functions
``f_ij`` whose value, first derivatives and (for quasi holomorphic frames)
second derivatives at the base point are prescribed along the directions
``v_k`` and ``conj(v_k)``.  These directional conditions are converted to
coordinate derivatives by small linear solves.  Every construction checks
its defining property afterwards.
"""

from dataclasses import dataclass, field

import numpy as np

from . import jets as jt
from .jets import Jet

__all__ = [
    "DegenerateFrameError",
    "ConsistencyError",
    "projector_10",
    "projection_10",
    "projection_01",
    "lie_bracket",
    "FrameJet",
    "StructureFunctions",
    "coordinate_10_frame",
    "frame_from_vectors",
    "structure_functions",
    "gram_matrix",
    "pseudo_residual",
    "quasi_residual",
    "metric_gradient_residual",
    "make_pseudo_holomorphic_frame",
    "make_quasi_holomorphic_frame",
    "make_normal_frame",
]

PSEUDO_TOL = 1e-9
QUASI_TOL = 1e-8
NORMAL_TOL = 1e-8
MAX_FRAME_COND = 1e6
MAX_SOLVE_COND = 1e8


class DegenerateFrameError(ValueError):
    """A frame (or a directional-derivative system built from it) is singular."""


class ConsistencyError(RuntimeError):
    """A construction failed its own postcondition check."""


def projector_10(J):
    """``P = (I - iJ)/2`` for a structure jet or array."""
    m = J.shape[-1]
    return (np.eye(m) - 1j * J) * 0.5 if not isinstance(J, Jet) else (J * -1j + np.eye(m)) * 0.5


def projection_10(J, v):
    """(1,0)-part of ``v`` (components on the last axis)."""
    P = projector_10(J)
    if isinstance(P, Jet) or isinstance(v, Jet):
        if isinstance(P, Jet) and isinstance(v, Jet):
            P, v = jt.common(P, v)
        return jt.einsum("ab,...b->...a", P, v)
    return np.einsum("ab,...b->...a", P, v)


def projection_01(J, v):
    """(0,1)-part of ``v``."""
    if isinstance(J, Jet):
        return projection_10(-J, v)
    return projection_10(-np.asarray(J), v)


def lie_bracket(X, Y):
    """``[X, Y]^a = X(Y^a) - Y(X^a)``; the order drops by one.

    Leading axes of ``X`` and ``Y`` broadcast, so all pairwise brackets of
    two frames come out of a single call.
    """
    if X.order < 1 or Y.order < 1:
        raise jt.JetError("Lie bracket of order-0 field jets")
    X, Y = jt.common(X, Y)
    return jt.apply_vector_field(X[..., None, :], Y) - jt.apply_vector_field(Y[..., None, :], X)


@dataclass(frozen=True, eq=False)
class FrameJet:
    """``n`` (1,0)-vector fields expanded at a point.

    Attributes
    ----------
    vectors : Jet, shape (n, 2n)
        Row ``i`` is ``e_i``.
    J : Jet, shape (2n, 2n)
        Structure jet the frame is of type (1,0) for.
    kind : str
        ``coordinate``, ``pseudo``, ``quasi``, ``pseudo-normal``,
        ``quasi-normal`` or ``custom``.
    transition : Jet or None
        ``f`` with ``e_i = f_ij v_j`` relative to ``base``.
    residuals : dict
        Postcondition residuals recorded at construction.
    """

    vectors: Jet
    J: Jet
    kind: str = "custom"
    transition: Jet = None
    base: "FrameJet" = None
    columns: tuple = ()
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.J.order != self.vectors.order:
            object.__setattr__(self, "J", self.J.truncate(self.vectors.order))
        object.__setattr__(self, "_coframe", None)

    @property
    def point(self):
        return self.vectors.point

    @property
    def order(self):
        return self.vectors.order

    @property
    def n(self):
        return self.vectors.shape[0]

    def at(self):
        """Frame vectors at the base point, shape ``(n, 2n)``."""
        return self.vectors.value

    def full(self):
        """Rows ``e_1..e_n, conj(e_1)..conj(e_n)``, shape ``(2n, 2n)``."""
        return jt.stack(list(self.vectors) + list(self.vectors.conj()))

    def condition(self):
        return float(np.linalg.cond(self.full().value))

    def coframe(self):
        """``inv(full())``: column ``I`` holds the dual covector of row ``I``."""
        if self._coframe is None:
            try:
                cf = jt.inv(self.full(), max_cond=MAX_SOLVE_COND)
            except np.linalg.LinAlgError as exc:
                raise DegenerateFrameError(f"frame matrix is singular: {exc}") from exc
            object.__setattr__(self, "_coframe", cf)
        return self._coframe

    def coefficients(self, v):
        """Components of ``v`` in ``(e, conj e)``; last axis has length ``2n``.

        ``v`` may be a jet or a plain array (evaluated at the base point).
        """
        cf = self.coframe()
        if isinstance(v, Jet):
            v, cf = jt.common(v, cf)
            return jt.einsum("...a,aI->...I", v, cf)
        return np.einsum("...a,aI->...I", np.asarray(v), cf.value)

    def transition_to(self, other):
        """``T`` with ``self.e_i = T_im other.e_m`` at the base point."""
        return other.coefficients(self.at())[:, : other.n]

    def with_residuals(self, **res):
        out = FrameJet(self.vectors, self.J, self.kind, self.transition, self.base, self.columns,
                       {**self.residuals, **res})
        object.__setattr__(out, "_coframe", self._coframe)
        return out


def frame_from_vectors(vectors, J, kind="custom"):
    """Wrap explicit (1,0) field jets as a frame; checks the type at ``p``."""
    J = J.truncate(vectors.order)
    P = projector_10(J.value)
    v = vectors.value
    res = float(np.max(np.abs(np.einsum("ab,ib->ia", P, v) - v)))
    if res > 1e-10:
        raise ValueError(f"frame vectors are not of type (1,0) (residual {res:.3g})")
    return FrameJet(vectors, J, kind)


def coordinate_10_frame(manifold, p, order=3):
    """(1,0)-projections of ``n`` coordinate fields, chosen greedily.

    Columns are picked one at a time to maximize the smallest singular
    value of the frame matrix at ``p``.
    """
    J = manifold.structure_jet(p, order)
    P = projector_10(J)
    candidates = P.T  # row a = P d/dx_a
    values = candidates.value
    chosen = []
    for _ in range(manifold.n):
        best, best_s = None, -1.0
        for a in range(values.shape[0]):
            if a in chosen:
                continue
            s = np.linalg.svd(values[chosen + [a]].T, compute_uv=False).min()
            if s > best_s + 1e-14:
                best, best_s = a, s
        chosen.append(best)
    mat = values[chosen]
    sv = np.linalg.svd(mat.T, compute_uv=False)
    cond = np.inf if sv.min() == 0 else sv.max() / sv.min()
    if not cond <= MAX_FRAME_COND:
        raise DegenerateFrameError(f"coordinate (1,0)-frame has condition number {cond:.3g} at {tuple(p)}")
    vectors = jt.stack([candidates[a] for a in chosen])
    return FrameJet(vectors, J, "coordinate", columns=tuple(chosen), residuals={"condition": float(cond)})


@dataclass(frozen=True, eq=False)
class StructureFunctions:
    """``c[i, j, k] = c_{i jbar}^k`` with ``[conj e_j, e_i]^(1,0) = c_{i jbar}^k e_k``."""

    c: Jet
    brackets: Jet
    frame: FrameJet

    def reconstruction_residual(self):
        """``|[conj e_j, e_i]^(1,0) - c^k e_k|`` at the base point."""
        P = projector_10(self.frame.J.value)
        direct = np.einsum("ab,ijb->ija", P, self.brackets.value)
        rebuilt = np.einsum("ijk,ka->ija", self.c.value, self.frame.at())
        return float(np.max(np.abs(direct - rebuilt)))


def structure_functions(frame):
    if frame.order < 2:
        raise jt.JetError("structure functions need frame jets of order >= 2")
    E = frame.vectors
    brackets = lie_bracket(E.conj()[None, :, :], E[:, None, :])  # [i, j] = [conj e_j, e_i]
    c = frame.coefficients(brackets)[..., : frame.n]
    return StructureFunctions(c, brackets, frame)


def gram_matrix(metric_jet, frame):
    """``G[i, j] = g(e_i, conj e_j)`` as jets."""
    E = frame.vectors
    g, E = jt.common(metric_jet, E)
    return jt.einsum("ia,ja->ij", E, jt.einsum("ab,jb->ja", g, E.conj()))


def pseudo_residual(frame):
    """``max_ij |[conj e_j, e_i]^(1,0)(p)|`` (Euclidean norm of components)."""
    E = frame.vectors
    B = lie_bracket(E.conj()[None, :, :], E[:, None, :]).value
    P = projector_10(frame.J.value)
    return float(np.max(np.linalg.norm(np.einsum("ab,ijb->ija", P, B), axis=-1)))


def quasi_residual(frame):
    """``max_ijk |[e_k, [conj e_j, e_i]]^(1,0)(p)|``."""
    if frame.order < 2:
        raise jt.JetError("nested brackets need frame jets of order >= 2")
    E = frame.vectors
    inner = lie_bracket(E.conj()[None, :, :], E[:, None, :])  # [i, j]
    outer = lie_bracket(E.truncate(inner.order)[None, None, :, :], inner[:, :, None, :])  # [i, j, k]
    P = projector_10(frame.J.value)
    return float(np.max(np.linalg.norm(np.einsum("ab,ijkb->ijka", P, outer.value), axis=-1)))


def metric_gradient_residual(metric, frame):
    """Largest first coordinate partial of ``g(e_i, conj e_j)`` at ``p``."""
    G = gram_matrix(metric.jet(frame.point, frame.order), frame)
    return float(np.max(np.abs(G.gradient().value)))


def _direction_matrix(frame):
    V = frame.at()
    M = np.vstack([V, V.conj()])
    cond = np.linalg.cond(M)
    if not cond <= MAX_SOLVE_COND:
        raise DegenerateFrameError(f"direction-conversion system is singular (cond {cond:.3g})")
    return M


def _first_order(frame, hol, anti):
    """Coordinate gradients of ``f_ij`` from ``v_k f_ij = hol[i,j,k]``, ``conj(v_k) f_ij = anti[i,j,k]``."""
    M = _direction_matrix(frame)
    rhs = np.concatenate([hol, anti], axis=-1)  # (n, n, 2n)
    return np.linalg.solve(M, rhs.reshape(-1, M.shape[0]).T).T.reshape(rhs.shape)


def _second_order(frame, grad, targets):
    """Coordinate Hessians of ``f_ij`` from directional second derivatives.

    ``targets`` maps a pair of direction labels ``((kind_u, l), (kind_w, k))``
    to an ``(n, n)`` array of prescribed values of ``u(w(f_ij))(p)``; kinds
    are ``"v"`` or ``"vbar"``.
    """
    V = frame.at()
    dV = frame.vectors.gradient().value  # [k, a, b] = d_b v_k^a
    m = V.shape[1]
    vec = {"v": V, "vbar": V.conj()}
    dvec = {"v": dV, "vbar": dV.conj()}
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    rows, rhs = [], []
    for ((ku, l), (kw, k)), target in targets.items():
        u = vec[ku][l]
        w = vec[kw][k]
        row = np.array([u[a] * w[a] if a == b else u[a] * w[b] + u[b] * w[a] for a, b in pairs])
        # u(w^a) grad_a term from differentiating the direction field
        uw = dvec[kw][k] @ u
        rows.append(row)
        rhs.append(target - np.einsum("a,ija->ij", uw, grad))
    A = np.array(rows)
    if A.shape[0] != A.shape[1]:
        raise ConsistencyError(f"second-order system is {A.shape[0]}x{A.shape[1]}, expected square")
    cond = np.linalg.cond(A)
    if not cond <= MAX_SOLVE_COND:
        raise DegenerateFrameError(f"second-order direction system is singular (cond {cond:.3g})")
    B = np.array(rhs).reshape(len(rows), -1)
    sol = np.linalg.solve(A, B)
    resid = np.max(np.abs(A @ sol - B)) if B.size else 0.0
    if resid > 1e-8 * max(1.0, np.max(np.abs(B), initial=0.0)):
        raise ConsistencyError(f"second-order system inconsistent (residual {resid:.3g})")
    n = grad.shape[0]
    H = np.zeros((n, n, m, m), dtype=complex)
    for q, (a, b) in enumerate(pairs):
        vals = sol[q].reshape(n, n)
        H[:, :, a, b] = vals
        H[:, :, b, a] = vals
    return H


def _transform(base, f, kind, **residuals):
    vectors = jt.einsum("ij,ja->ia", f, base.vectors)
    return FrameJet(vectors, base.J, kind, transition=f, base=base, residuals=residuals)


def make_pseudo_holomorphic_frame(base, p=None, holomorphic_derivatives=None, tol=PSEUDO_TOL):
    """Frame pseudo holomorphic at the base point.

    ``e_i = f_ij v_j`` with ``f(p) = I``, ``conj(v_k)(f_ij)(p) = -c_{i kbar}^j(p)``
    and ``v_k(f_ij)(p)`` equal to ``holomorphic_derivatives[i, j, k]``
    (zero by default).
    """
    _check_point(base, p)
    n = base.n
    c = structure_functions(base).c.value
    anti = -np.transpose(c, (0, 2, 1))  # [i, j, k] = -c[i, k, j]
    hol = np.zeros_like(anti) if holomorphic_derivatives is None else np.asarray(holomorphic_derivatives)
    grad = _first_order(base, hol, anti)
    f = Jet.polynomial(base.point, base.order, np.eye(n), grad)
    frame = _transform(base, f, "pseudo")
    res = pseudo_residual(frame)
    if res > tol:
        raise ConsistencyError(f"pseudo holomorphic frame check failed: residual {res:.3g}")
    return frame.with_residuals(pseudo=res)


def make_quasi_holomorphic_frame(base, p=None, holomorphic_derivatives=None, tol=QUASI_TOL):
    """Frame quasi holomorphic at the base point.

    The base is first made pseudo holomorphic if it is not.  Then
    ``e_i = f_ij v_j`` with ``f(p) = I``, ``conj(v_k) f = 0``,
    ``v_k f_ij = holomorphic_derivatives[i, j, k]`` (default 0) and second
    derivatives ``v_l conj(v_k) f_ij = -v_l(c_{i kbar}^j)``,
    ``v_l v_k f = 0``, ``conj(v_l) conj(v_k) f = 0`` (``l <= k``).
    """
    _check_point(base, p)
    if base.order < 3:
        raise jt.JetError("quasi holomorphic frames need jets of order >= 3")
    if pseudo_residual(base) > PSEUDO_TOL:
        base = make_pseudo_holomorphic_frame(base)
    n = base.n
    c = structure_functions(base).c
    # vl_c[i, k, j, l] = v_l(c_{i kbar}^j)(p)
    vl_c = np.einsum("ikja,la->ikjl", c.gradient().value, base.at())
    zeros = np.zeros((n, n, n), dtype=complex)
    hol = zeros if holomorphic_derivatives is None else np.asarray(holomorphic_derivatives)
    grad = _first_order(base, hol, zeros)
    targets = {}
    for l in range(n):
        for k in range(n):
            targets[(("v", l), ("vbar", k))] = -vl_c[:, k, :, l]
    for l in range(n):
        for k in range(l, n):
            targets[(("v", l), ("v", k))] = np.zeros((n, n))
            targets[(("vbar", l), ("vbar", k))] = np.zeros((n, n))
    H = _second_order(base, grad, targets)
    f = Jet.polynomial(base.point, base.order, np.eye(n), grad, H)
    frame = _transform(base, f, "quasi")
    pres = pseudo_residual(frame)
    qres = quasi_residual(frame)
    if pres > tol or qres > tol:
        raise ConsistencyError(f"quasi holomorphic frame check failed: pseudo {pres:.3g}, nested {qres:.3g}")
    return frame.with_residuals(pseudo=pres, quasi=qres)


def make_normal_frame(metric, base, p=None, kind="quasi", tol=NORMAL_TOL):
    """Pseudo or quasi holomorphic frame with ``d g(e_i, conj e_j)(p) = 0``.

    The free holomorphic derivatives of the transition functions are set
    to ``v_k(f_ij)(p) = -Gamma_{ik}^j(p)``, Christoffel symbols of the
    canonical connection of ``metric`` in the (pseudo holomorphic) base.
    """
    from .connection import canonical_connection

    _check_point(base, p)
    if kind == "pseudo":
        gamma = canonical_connection(metric, base).gamma_hol.value
        frame = make_pseudo_holomorphic_frame(base, holomorphic_derivatives=-np.transpose(gamma, (0, 2, 1)))
        label = "pseudo-normal"
    elif kind == "quasi":
        if pseudo_residual(base) > PSEUDO_TOL:
            base = make_pseudo_holomorphic_frame(base)
        gamma = canonical_connection(metric, base).gamma_hol.value
        frame = make_quasi_holomorphic_frame(base, holomorphic_derivatives=-np.transpose(gamma, (0, 2, 1)))
        label = "quasi-normal"
    else:
        raise ValueError(f"kind must be 'pseudo' or 'quasi', got {kind!r}")
    dg = metric_gradient_residual(metric, frame)
    if dg > tol:
        raise ConsistencyError(f"normal frame check failed: |dg| = {dg:.3g}")
    out = FrameJet(frame.vectors, frame.J, label, frame.transition, frame.base, residuals=dict(frame.residuals))
    return out.with_residuals(metric_gradient=dg)


def _check_point(frame, p):
    if p is not None and not np.allclose(np.asarray(p, dtype=float), frame.point, rtol=0, atol=0):
        raise ValueError(f"frame is expanded at {frame.point}, not at {tuple(p)}")
