"""
The canonical connection of an almost Hermitian manifold.

In a (1,0)-frame ``e_1..e_n`` the connection is determined by two sets of
coefficients::

    nabla_{conj e_j} e_i = [conj e_j, e_i]^(1,0) = c_{i jbar}^k e_k
    nabla_{e_j} e_i      = Gamma_{ij}^k e_k

and extended to (0,1)-fields by conjugation.  Metric compatibility in a
general frame gives::

    e_j(g_{i mubar}) = Gamma_{ij}^lam g_{lam mubar} + conj(c_{mu jbar}^nu) g_{i nubar}

which is solved against the Gram matrix ``g_{lam mubar}``.  The
correction term vanishes at ``p`` when the frame is pseudo holomorphic
there.  :func:`connection_by_axioms_oracle` rebuilds the same connection
from the defining axioms in real coordinates, without any frame.
"""

from dataclasses import dataclass, field

import numpy as np

from . import jets as jt
from .frames import (
    FrameJet,
    coordinate_10_frame,
    gram_matrix,
    lie_bracket,
    projector_10,
    structure_functions,
)
from .jets import Jet

__all__ = [
    "MetricDegeneracyError",
    "UniquenessError",
    "ChristoffelAtPoint",
    "TorsionValue",
    "AxiomsReport",
    "canonical_connection",
    "covariant_derivative",
    "torsion",
    "real_christoffel",
    "verify_axioms",
    "connection_by_axioms_oracle",
    "random_vector_field",
]

MAX_GRAM_COND = 1e8


class MetricDegeneracyError(ValueError):
    """The frame Gram matrix ``g(e_i, conj e_j)`` is (numerically) singular."""


class UniquenessError(RuntimeError):
    """The axioms system is rank deficient or disagrees with the frame formula."""


@dataclass(frozen=True, eq=False)
class ChristoffelAtPoint:
    """Canonical-connection coefficients in a frame, as jets.

    Attributes
    ----------
    gamma_hol : Jet, shape (n, n, n)
        ``[i, j, k] = Gamma_{ij}^k``, coefficient of ``e_k`` in ``nabla_{e_j} e_i``.
    gamma_anti : Jet, shape (n, n, n)
        ``[i, j, k]``: coefficient of ``e_k`` in ``nabla_{conj e_j} e_i``.
    omega : Jet, shape (2n, 2n, 2n)
        Full connection matrix in the frame ``F = (e, conj e)``:
        ``nabla_{F_A} F_I = omega[A, I, M] F_M``.
    gram : Jet, shape (n, n)
        ``g(e_i, conj e_j)``.
    metric_jet : Jet, shape (2n, 2n)
    """

    frame: FrameJet
    metric_jet: Jet
    gram: Jet
    gamma_hol: Jet
    gamma_anti: Jet
    omega: Jet
    structure: object = field(repr=False, default=None)

    @property
    def point(self):
        return self.frame.point

    @property
    def n(self):
        return self.frame.n

    def anti_bracket_residual(self):
        """``gamma_anti`` against the frame coefficients of ``[conj e_j, e_i]^(1,0)``."""
        P = projector_10(self.frame.J.value)
        direct = np.einsum("ab,ijb->ija", P, self.structure.brackets.value)
        rebuilt = np.einsum("ijk,ka->ija", self.gamma_anti.value, self.frame.at())
        return float(np.max(np.abs(direct - rebuilt)))


def _full_omega(gamma_hol, gamma_anti):
    n = gamma_hol.shape[0]
    N = gamma_hol.space.size
    om = np.zeros((2 * n, 2 * n, 2 * n, N), dtype=complex)
    # directions e_a: omega[a, i, m] = Gamma_{i a}^m
    om[:n, :n, :n] = np.transpose(gamma_hol.coeffs, (1, 0, 2, 3))
    # directions conj e_l: omega[n + l, i, m] = c_{i lbar}^m
    om[n:, :n, :n] = np.transpose(gamma_anti.coeffs, (1, 0, 2, 3))
    # conj fields: nabla_{F_A} conj e_i = conj(nabla_{conj F_A} e_i)
    swap = np.r_[n : 2 * n, 0:n]
    om[:, n:, n:] = om[swap][:, :n, :n].conj()
    return Jet(om, gamma_hol.point, gamma_hol.order)


def canonical_connection(metric, frame, p=None, order=None):
    """Christoffel jets of the canonical connection in ``frame``.

    Parameters
    ----------
    metric : MetricField
    frame : FrameJet
        Any (1,0)-frame; its order ``K >= 2`` fixes the output order ``K - 1``.
    """
    if p is not None and tuple(map(float, p)) != frame.point:
        raise ValueError("frame and point disagree")
    if frame.order < 2:
        raise jt.JetError("canonical connection needs frame jets of order >= 2")
    K = frame.order if order is None else order
    g = metric.jet(frame.point, K)
    G = gram_matrix(g, frame)
    sf = structure_functions(frame)
    c = sf.c  # [i, j, k] = c_{i jbar}^k, order K - 1
    E = frame.vectors
    # dG[i, mu, j] = e_j(G[i, mu])
    dG = jt.apply_vector_field(E[None, None, :, :], G[:, :, None])
    G1 = G.truncate(K - 1)
    corr = jt.einsum("mjv,iv->ijm", c.conj(), G1)
    rhs = dG.swapaxes(1, 2) - corr
    try:
        Ginv = jt.inv(G1, max_cond=MAX_GRAM_COND)
    except np.linalg.LinAlgError as exc:
        raise MetricDegeneracyError(f"Gram matrix is degenerate at {frame.point}: {exc}") from exc
    gamma = jt.einsum("ijm,ml->ijl", rhs, Ginv)
    return ChristoffelAtPoint(frame, g, G, gamma, c, _full_omega(gamma, c), sf)


def _as_field(X, like):
    if isinstance(X, Jet):
        return X
    X = np.asarray(X, dtype=complex)
    if X.shape[-1] != like.shape[-1]:
        raise jt.JetError(f"direction has {X.shape[-1]} components, expected {like.shape[-1]}")
    return Jet.constant(X, like.point, like.order)


def covariant_derivative(chr, X, Y):
    """``nabla_X Y`` in coordinate components, as a jet of order ``K - 1``.

    ``X`` is a complex vector (array) or vector-field jet with ``2n``
    components; ``Y`` is a vector-field jet of order ``>= 1``.
    """
    frame = chr.frame
    m = 2 * frame.n
    if Y.shape[-1] != m:
        raise jt.JetError(f"field has {Y.shape[-1]} components, expected {m}")
    X = _as_field(X, Y)
    if X.shape[-1] != m:
        raise jt.JetError(f"direction has {X.shape[-1]} components, expected {m}")
    y = frame.coefficients(Y)
    dy = jt.apply_vector_field(X.truncate(min(X.order, y.order))[..., None, :], y)  # X(y^I)
    k = min(dy.order, chr.omega.order)
    x = frame.coefficients(X).truncate(k)
    coeff = dy.truncate(k) + _contract(x, y.truncate(k), chr.omega.truncate(k))
    F = frame.full().truncate(coeff.order)
    return jt.einsum("...I,Ia->...a", coeff, F)


def _contract(x, y, om):
    # sum_{A,J} x^A y^J omega[A, J, I]
    xy = jt.einsum("...A,...J->...AJ", x, y)
    return jt.einsum("...AJ,AJI->...I", xy, om)


@dataclass(frozen=True)
class TorsionValue:
    """``tau(X, Y)`` at a point with its type decomposition."""

    vector: np.ndarray
    part_10: np.ndarray
    part_01: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def torsion(chr, X, Y, p=None):
    """``tau(X, Y) = nabla_X Y - nabla_Y X - [X, Y]`` at the base point."""
    X, Y = jt.common(X, Y)
    tau = covariant_derivative(chr, X, Y).value - covariant_derivative(chr, Y, X).value - lie_bracket(X, Y).value
    P = projector_10(chr.frame.J.value)
    p10 = np.einsum("ab,...b->...a", P, tau)
    return TorsionValue(tau, p10, tau - p10)


def real_christoffel(chr):
    """``C[a, b, c]``: coefficient of ``d_c`` in ``nabla_{d_a} d_b`` at ``p``.

    Converts the frame coefficients to the real coordinate frame; the
    imaginary part must vanish and is dropped.
    """
    frame = chr.frame
    cf = frame.coframe()  # [b, I]: d_b = cf[b, I] F_I
    F = frame.full()
    dcf = cf.gradient().value  # [b, I, a] = d_a cf[b, I]
    cf0 = cf.value
    om = chr.omega.value
    # nabla_{d_a} d_b = d_a(cf[b, I]) F_I + cf[b, I] cf[a, A] omega[A, I, M] F_M
    coeff = np.transpose(dcf, (2, 0, 1)) + np.einsum("bI,aA,AIM->abM", cf0, cf0, om)
    C = np.einsum("abM,Mc->abc", coeff, F.value)
    return C


def random_vector_field(rng, point, order, m, kind=None, J=None, degree=2):
    """Random complex polynomial vector field jet of the given degree.

    ``kind`` may be ``"10"`` or ``"01"`` to project with ``J`` jet-wise.
    """
    val = rng.normal(size=m) + 1j * rng.normal(size=m)
    grad = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)) if degree >= 1 else None
    hess = rng.normal(size=(m, m, m)) + 1j * rng.normal(size=(m, m, m)) if degree >= 2 else None
    V = Jet.polynomial(point, order, val, grad, hess)
    if kind is None:
        return V
    P = projector_10(J.truncate(order)) if kind == "10" else projector_10(-J.truncate(order))
    return jt.einsum("ab,b->a", P, V)


@dataclass
class AxiomsReport:
    """Max residuals of the canonical-connection axioms at sampled points."""

    metric: float = 0.0
    complex_structure: float = 0.0
    torsion_11: float = 0.0
    anti_bracket: float = 0.0
    samples: int = 0

    @property
    def max_residual(self):
        return max(self.metric, self.complex_structure, self.torsion_11, self.anti_bracket)

    def merge(self, other):
        return AxiomsReport(
            max(self.metric, other.metric),
            max(self.complex_structure, other.complex_structure),
            max(self.torsion_11, other.torsion_11),
            max(self.anti_bracket, other.anti_bracket),
            self.samples + other.samples,
        )


def verify_axioms(manifold, p, metric=None, rng=None, trials=3, order=3):
    """Residuals of ``nabla g = 0``, ``nabla J = 0`` and ``tau^(1,1) = 0`` at ``p``.

    Each is tested on ``trials`` random polynomial fields: metric
    compatibility as ``X g(Y,Z) - g(nabla_X Y, Z) - g(Y, nabla_X Z)``,
    ``nabla J = 0`` as type preservation of (1,0)- and (0,1)-fields, and the
    torsion on (1,0) x (0,1) pairs.  Also checks
    ``nabla_{conj X} Y = [conj X, Y]^(1,0)`` for (1,0)-fields.
    """
    metric = manifold.metric() if metric is None else metric
    rng = np.random.default_rng(0) if rng is None else rng
    frame = coordinate_10_frame(manifold, p, order)
    chr = canonical_connection(metric, frame)
    m = manifold.dim
    J = frame.J
    P = projector_10(J.value)
    g = metric.jet(p, order)
    rep = AxiomsReport(samples=1)
    scale = lambda *vs: max(1.0, *(float(np.max(np.abs(v))) for v in vs))  # noqa: E731
    for _ in range(trials):
        X = random_vector_field(rng, p, order, m)
        Y = random_vector_field(rng, p, order, m)
        Z = random_vector_field(rng, p, order, m)
        gYZ = jt.einsum("a,a->", Y, jt.einsum("ab,b->a", g, Z))
        lhs = jt.apply_vector_field(X, gYZ).value
        nXY = covariant_derivative(chr, X, Y).value
        nXZ = covariant_derivative(chr, X, Z).value
        g0 = g.value
        rhs = nXY @ g0 @ Z.value + Y.value @ g0 @ nXZ
        rep.metric = max(rep.metric, abs(lhs - rhs) / scale(lhs, rhs))

        for kind, Q in (("10", np.eye(m) - P), ("01", P)):
            W = random_vector_field(rng, p, order, m, kind, J)
            nW = covariant_derivative(chr, X, W).value
            rep.complex_structure = max(rep.complex_structure, float(np.max(np.abs(Q @ nW))) / scale(nW))

        A = random_vector_field(rng, p, order, m, "10", J)
        B = random_vector_field(rng, p, order, m, "01", J)
        tau = torsion(chr, A, B)
        rep.torsion_11 = max(rep.torsion_11, tau.norm / scale(tau.vector))

        X10 = random_vector_field(rng, p, order, m, "10", J)
        Y10 = random_vector_field(rng, p, order, m, "10", J)
        lhs = covariant_derivative(chr, X10.conj(), Y10).value
        rhs = P @ lie_bracket(X10.conj(), Y10).value
        rep.anti_bracket = max(rep.anti_bracket, float(np.max(np.abs(lhs - rhs))) / scale(lhs, rhs))
    return rep


def _axioms_system(manifold, metric, p):
    """Linear system ``A x = b`` for real Christoffels ``x[a, b, c]`` at ``p``."""
    m = manifold.dim
    Jj = manifold.structure_jet(p, 1)
    gj = metric.jet(p, 1)
    J = Jj.value.real
    dJ = Jj.gradient().value.real  # [c, b, a] = d_a J^c_b
    g = gj.value.real
    dg = gj.gradient().value.real  # [b, c, a] = d_a g_bc

    def equations(x):
        x = x.reshape(m, m, m)
        # d_a g_bc - x[a,b,d] g_dc - x[a,c,d] g_bd
        eq_g = np.transpose(dg, (2, 0, 1)) - np.einsum("abd,dc->abc", x, g) - np.einsum("acd,bd->abc", x, g)
        iu = np.triu_indices(m)
        eq_g = eq_g[:, iu[0], iu[1]]
        # (nabla_a J)^c_b = d_a J^c_b + x[a,d,c] J^d_b - J^c_d x[a,b,d]
        eq_J = np.transpose(dJ, (2, 0, 1)) + np.einsum("adc,db->acb", x, J) - np.einsum("cd,abd->acb", J, x)
        # torsion T[a,b,c] = x[a,b,c] - x[b,a,c]; (1,1)-part zero <=> T(J.,J.) = -T
        T = x - np.transpose(x, (1, 0, 2))
        eq_T = np.einsum("da,eb,dec->abc", J, J, T) + T
        return np.concatenate([eq_g.ravel(), eq_J.ravel(), eq_T.ravel()])

    b = -equations(np.zeros(m**3))
    cols = [equations(e) + b for e in np.eye(m**3)]
    A = np.array(cols).T
    return A, b


def connection_by_axioms_oracle(manifold, p, metric=None, order=3, tol=1e-8):
    """Solve the axioms for the real Christoffels and compare with the frame route.

    Returns
    -------
    dict with ``christoffel`` (the axioms solution ``C[a, b, c]``),
    ``rank``, ``unknowns``, ``residual`` (least-squares) and ``mismatch``
    (max deviation from :func:`real_christoffel` of the frame construction).
    """
    metric = manifold.metric() if metric is None else metric
    m = manifold.dim
    A, b = _axioms_system(manifold, metric, p)
    rank = int(np.linalg.matrix_rank(A))
    if rank < m**3:
        raise UniquenessError(f"axioms system has rank {rank} < {m**3} unknowns at {tuple(p)}")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ x - b)))
    C_axioms = x.reshape(m, m, m)
    chr = canonical_connection(metric, coordinate_10_frame(manifold, p, order))
    C_frame = real_christoffel(chr)
    imag = float(np.max(np.abs(C_frame.imag)))
    mismatch = float(np.max(np.abs(C_frame.real - C_axioms)))
    if resid > tol or mismatch > tol or imag > tol:
        raise UniquenessError(
            f"axioms solution disagrees with the canonical connection at {tuple(p)}: "
            f"residual {resid:.3g}, mismatch {mismatch:.3g}, imaginary part {imag:.3g}"
        )
    return {
        "christoffel": C_axioms,
        "rank": rank,
        "unknowns": m**3,
        "residual": resid,
        "mismatch": mismatch,
        "imaginary": imag,
    }
