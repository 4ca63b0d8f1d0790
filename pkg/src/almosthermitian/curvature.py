"""
Curvature of the canonical connection.

Two independent routes produce ``R_{i jbar k lbar} = R(e_i, conj e_j, e_k, conj e_l)``
with ``R(X, Y, Z, W) = g(nabla_Z nabla_W X - nabla_W nabla_Z X - nabla_[Z,W] X, Y)``:

* :func:`curvature_from_definition` differentiates the connection matrix
  of an arbitrary frame;
* :func:`curvature_quasi_formula` builds a quasi holomorphic frame at ``p``
  and only differentiates the frame Gram matrix ``g_{i jbar}``::

      R_{i jbar k lbar}(p) = -conj(e_l) e_k g_{i jbar} + g^{mubar lam} e_k(g_{i mubar}) conj(e_l)(g_{lam jbar})

  (the second term drops in a normal frame).

The module also holds the sampling reports for the curvature inequalities
(sum of metrics, rank-one augmentation) and the product-metric
construction from a fundamental form.
"""

from dataclasses import dataclass, field

import numpy as np

from . import forms as fm
from . import jets as jt
from .connection import MAX_GRAM_COND, MetricDegeneracyError, canonical_connection
from .frames import (
    FrameJet,
    coordinate_10_frame,
    gram_matrix,
    lie_bracket,
    make_normal_frame,
    make_quasi_holomorphic_frame,
)
from .manifold import MetricField, ValidationError, product_manifold
from .rng import stream

__all__ = [
    "FrameConditionError",
    "PositivityError",
    "CurvatureComponents",
    "curvature_from_definition",
    "curvature_quasi_formula",
    "compare_curvature",
    "bisectional",
    "random_unit_vectors",
    "InequalityReport",
    "wu_report",
    "AugmentedMetric",
    "augment_metric",
    "augment_report",
    "max_bisectional",
    "ProductMetric",
    "product_rho",
    "product_metric",
    "DecompositionResult",
    "decompose_product_form",
]

MIXED_TOL = 1e-8
REALITY_TOL = 1e-8


class FrameConditionError(RuntimeError):
    """``nabla_{e_k} nabla_{conj e_j} e_i (p)`` does not vanish in a quasi holomorphic frame."""


class PositivityError(ValidationError):
    """An assembled metric is not positive definite."""


@dataclass
class CurvatureComponents:
    """(1,1)-part of the curvature in a frame at a point.

    Attributes
    ----------
    R : ndarray, shape (n, n, n, n)
        ``R[i, j, k, l] = R_{i jbar k lbar}``.
    frame : FrameJet
    full : ndarray or None
        ``full[I, J, A, B] = R(F_I, F_J, F_A, F_B)`` over ``F = (e, conj e)``,
        when computed from the definition.
    info : dict
        Route-specific diagnostics.
    """

    R: np.ndarray
    frame: FrameJet
    full: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def point(self):
        return self.frame.point

    @property
    def n(self):
        return self.R.shape[0]

    def to_frame(self, other):
        """Components in another (1,0)-frame at the same point."""
        if other.point != self.point:
            raise ValueError("frames are expanded at different points")
        S = other.transition_to(self.frame)  # other.e_a = S[a, m] self.e_m
        Sb = S.conj()
        R = np.einsum("ai,bj,ck,dl,ijkl->abcd", S, Sb, S, Sb, self.R)
        return CurvatureComponents(R, other, None, {"converted_from": self.frame.kind})

    def hermitian_residual(self):
        """``max |R_{i jbar k lbar} - conj(R_{j ibar l kbar})|``."""
        return float(np.max(np.abs(self.R - np.transpose(self.R, (1, 0, 3, 2)).conj())))

    def part_20_norm(self):
        """Largest ``|R(e_i, conj e_j, e_k, e_l)|``; only defined-route results carry it."""
        if self.full is None:
            return None
        n = self.n
        return float(np.max(np.abs(self.full[:n, n:, :n, :n])))

    def bisectional(self, X, Y):
        return bisectional(self, X, Y)


def _definition_tensors(metric, frame):
    chr = canonical_connection(metric, frame)
    n = frame.n
    m = 2 * n
    F = frame.full()
    om = chr.omega  # [A, I, M]
    k = min(om.order, 1)
    om1 = om.truncate(k)
    F1 = F.truncate(k)
    # dom[A, B, I, S] = F_A(omega[B, I, S])
    dom = jt.apply_vector_field(F1[:, None, None, None, :], om1[None]).value
    w = frame.coefficients(lie_bracket(F[:, None, :], F[None, :, :])).value  # [A, B, C]
    o = om.value
    Rop = (
        dom
        - np.transpose(dom, (1, 0, 2, 3))
        + np.einsum("BIM,AMS->ABIS", o, o)
        - np.einsum("AIM,BMS->ABIS", o, o)
        - np.einsum("ABC,CIS->ABIS", w, o)
    )
    g = chr.metric_jet.value
    F0 = F.value
    Gfull = F0 @ g @ F0.T  # [S, J] = g(F_S, F_J)
    full = np.einsum("ABIS,SJ->IJAB", Rop, Gfull)
    R = full[:n, n:m, :n, n:m]
    return R, full, chr


def curvature_from_definition(metric, frame):
    """``R_{i jbar k lbar}`` from ``R(X,Y,Z,W) = g(nabla_Z nabla_W X - ..., Y)`` in ``frame``.

    Needs frame jets of order >= 3 (two derivatives of the metric and one
    of the connection).
    """
    if frame.order < 3:
        raise jt.JetError("curvature from the definition needs frame jets of order >= 3")
    R, full, chr = _definition_tensors(metric, frame)
    return CurvatureComponents(R, frame, full, {"route": "definition"})


def _mixed_derivative_residual(chr):
    # nabla_{e_k}(A[i,j,m] e_m) = (e_k A[i,j,m] + A[i,j,s] Gamma[s,k,m]) e_m
    A = chr.gamma_anti
    E = chr.frame.vectors.truncate(A.order - 1)
    eA = jt.apply_vector_field(E[None, None, :, None, :], A[:, :, None, :]).value  # [i, j, k, m]
    L = eA + np.einsum("ijs,skm->ijkm", A.value, chr.gamma_hol.value)
    return float(np.max(np.abs(L)))


def _gram_terms(metric, frame):
    K = frame.order
    G = gram_matrix(metric.jet(frame.point, K), frame)
    E = frame.vectors
    dG = jt.apply_vector_field(E[None, None, :, :], G[:, :, None])  # [i, mu, k] = e_k G
    Eb = E.conj().truncate(dG.order - 1)
    ddG = jt.apply_vector_field(Eb[None, None, None, :, :], dG[:, :, :, None]).value  # [i, j, k, l]
    dbG = jt.apply_vector_field(E.conj()[None, None, :, :], G[:, :, None]).value  # [lam, j, l]
    G0 = G.value
    if np.linalg.cond(G0) > MAX_GRAM_COND:
        raise MetricDegeneracyError(f"Gram matrix is degenerate at {frame.point}")
    return G0, dG.value, ddG, dbG


def curvature_quasi_formula(metric, manifold=None, p=None, normal=False, frame=None, order=3, check_frame=True):
    """``R_{i jbar k lbar}(p)`` from the Gram matrix in a quasi holomorphic frame.

    Parameters
    ----------
    metric : MetricField
    manifold, p :
        Where to build the frame (``manifold`` defaults to the metric's).
    normal : bool
        Use a quasi holomorphic normal frame and only the second-derivative
        term.
    frame : FrameJet, optional
        A ready quasi holomorphic (normal, if ``normal``) frame at ``p``.
    check_frame : bool
        Raise :class:`FrameConditionError` unless
        ``nabla_{e_k} nabla_{conj e_j} e_i (p)`` vanishes.

    Returns
    -------
    CurvatureComponents
        In the quasi frame; see :meth:`CurvatureComponents.to_frame`.
    """
    if frame is None:
        manifold = metric.manifold if manifold is None else manifold
        base = coordinate_10_frame(manifold, p, order)
        if normal:
            frame = make_normal_frame(metric, base, kind="quasi")
        else:
            frame = make_quasi_holomorphic_frame(base)
    G0, dG, ddG, dbG = _gram_terms(metric, frame)
    R = -ddG
    second = np.einsum("imk,ml,ljn->ijkn", dG, np.linalg.inv(G0), dbG)
    if not normal:
        R = R + second
    info = {
        "route": "quasi-normal" if normal else "quasi",
        "first_derivative_term": float(np.max(np.abs(second))),
    }
    if check_frame:
        res = _mixed_derivative_residual(canonical_connection(metric, frame))
        info["mixed_residual"] = res
        if res > MIXED_TOL:
            raise FrameConditionError(f"nabla_ek nabla_conj(ej) ei(p) = {res:.3g} in a {frame.kind} frame at {frame.point}")
    return CurvatureComponents(R, frame, None, info)


def compare_curvature(metric, p, order=3):
    """Both routes in the coordinate (1,0)-frame at ``p``.

    Returns a dict with the two tensors, the absolute and relative
    deviations, the normal-mode deviation and the mixed second-derivative residual.
    """
    base = coordinate_10_frame(metric.manifold, p, order)
    Rd = curvature_from_definition(metric, base)
    Rq = curvature_quasi_formula(metric, frame=make_quasi_holomorphic_frame(base))
    Rn = curvature_quasi_formula(metric, frame=make_normal_frame(metric, base, kind="quasi"), normal=True)
    Rq_base = Rq.to_frame(base)
    Rn_base = Rn.to_frame(base)
    scale = float(np.max(np.abs(Rd.R)))
    dev = float(np.max(np.abs(Rq_base.R - Rd.R)))
    return {
        "definition": Rd,
        "quasi": Rq,
        "normal": Rn,
        "scale": scale,
        "abs_deviation": dev,
        "rel_deviation": dev / scale if scale > 0 else 0.0,
        "normal_deviation": float(np.max(np.abs(Rn_base.R - Rd.R))),
        "mixed_residual": max(Rq.info["mixed_residual"], Rn.info["mixed_residual"]),
        "hermitian_residual": Rd.hermitian_residual(),
        "part_20": Rd.part_20_norm(),
    }


def bisectional(Rc, X, Y):
    """``R(X, conj X, Y, conj Y)`` for (1,0) vectors given in ``Rc``'s frame."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    if not np.any(X) or not np.any(Y):
        raise ValueError("bisectional curvature needs nonzero vectors")
    val = np.einsum("i,j,k,l,ijkl->", X, X.conj(), Y, Y.conj(), Rc.R)
    scale = max(1.0, float(np.max(np.abs(Rc.R)))) * float(np.vdot(X, X).real * np.vdot(Y, Y).real)
    if abs(val.imag) > REALITY_TOL * scale:
        raise ValidationError(f"bisectional curvature has imaginary part {val.imag:.3g}", Rc.point)
    return float(val.real)


def random_unit_vectors(rng, G, count=2):
    """Complex-Gaussian frame coordinates normalized to ``X^T G conj(X) = 1``."""
    n = G.shape[0]
    out = []
    for _ in range(count):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        out.append(v / np.sqrt((v @ G @ v.conj()).real))
    return out


# -- inequality sampling -----------------------------------------------------


@dataclass
class InequalityReport:
    """Per-sample comparison ``lhs <= rhs``; ``margin = rhs - lhs``.

    ``discarded`` holds, when meaningful, the nonpositive term the
    inequality drops (``margin == -discarded`` up to rounding).
    """

    name: str
    manifold: str
    metrics: tuple
    seed: int
    points: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    discarded: np.ndarray = None

    @property
    def samples(self):
        return len(self.lhs)

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def min_margin(self):
        return float(np.min(self.margin)) if self.samples else float("inf")

    @property
    def max_discarded(self):
        return None if self.discarded is None else float(np.max(self.discarded))

    def discarded_mismatch(self):
        """``max |margin + discarded|``."""
        if self.discarded is None:
            return None
        return float(np.max(np.abs(self.margin + self.discarded)))

    def passed(self, tol=1e-9):
        ok = self.min_margin >= -tol
        if self.discarded is not None:
            ok = ok and self.max_discarded <= tol
        return bool(ok)

    def summary(self):
        out = {
            "name": self.name,
            "manifold": self.manifold,
            "metrics": list(self.metrics),
            "seed": self.seed,
            "samples": self.samples,
            "min_margin": self.min_margin,
        }
        if self.discarded is not None:
            out["max_discarded"] = self.max_discarded
            out["discarded_mismatch"] = self.discarded_mismatch()
        return out


def _pair_quadratic(dG, Ginv, X, Y):
    # u[mu] = X^i Y^k e_k(g_{i mubar});  term = u^T Ginv conj(u)
    u = np.einsum("i,k,imk->m", X, Y, dG)
    return float((u @ Ginv @ u.conj()).real)


def wu_report(gA, gB, samples, seed, name="wu", order=3):
    """Sample ``R^{A+B}(X,Xb,Y,Yb) <= R^A(X,Xb,Y,Yb) + R^B(X,Xb,Y,Yb)``.

    Every sample draws a point and two unit (for ``A + B``) (1,0)-vectors
    from its own stream.  All three curvatures are evaluated with the
    two-term formula in a quasi holomorphic normal frame of ``A + B``; in
    that frame the margin equals ``g^{mubar lam} u_mu conj(u_lam)`` summed
    over ``A`` and ``B``, which is recorded (with a minus sign) as the
    discarded term.
    """
    gS = gA + gB
    man = gS.manifold
    pts, lhs, rhs, disc = [], [], [], []
    for s in range(samples):
        rng = stream(seed, "wu", s)
        p = man.sample_points(rng, 1)[0]
        frame = make_normal_frame(gS, coordinate_10_frame(man, p, order), kind="quasi")
        X, Y = random_unit_vectors(rng, gram_matrix(gS.jet(frame.point, 0), frame).value)
        val = {}
        dterm = 0.0
        for key, g in (("S", gS), ("A", gA), ("B", gB)):
            G0, dG, ddG, dbG = _gram_terms(g, frame)
            Ginv = np.linalg.inv(G0)
            R = -ddG + np.einsum("imk,ml,ljn->ijkn", dG, Ginv, dbG)
            val[key] = bisectional(CurvatureComponents(R, frame), X, Y)
            if key != "S":
                dterm -= _pair_quadratic(dG, Ginv, X, Y)
        pts.append(p)
        lhs.append(val["S"])
        rhs.append(val["A"] + val["B"])
        disc.append(dterm)
    return InequalityReport(
        name, man.name, (gA.name, gB.name), seed, np.array(pts), np.array(lhs), np.array(rhs), np.array(disc)
    )


def max_bisectional(metric, samples, seed, order=3, label="bisectional"):
    """Largest sampled ``R(X, Xb, Y, Yb)`` over unit (1,0)-vectors."""
    man = metric.manifold
    best = -np.inf
    for s in range(samples):
        rng = stream(seed, label, s)
        p = man.sample_points(rng, 1)[0]
        Rc = curvature_quasi_formula(metric, p=p, order=order, check_frame=False)
        X, Y = random_unit_vectors(rng, gram_matrix(metric.jet(Rc.point, 0), Rc.frame).value)
        best = max(best, bisectional(Rc, X, Y))
    return float(best)


# -- rank-one augmentation -----------------------------------------------------


class AugmentedMetric(MetricField):
    """``h(u, v) = g(u, v) + Re(alpha(u) conj(alpha(v)))`` for a (1,0)-form ``alpha``.

    In a (1,0)-frame this reads ``h_{i jbar} = g_{i jbar} + alpha_i conj(alpha_j) / 2``.
    """

    def __init__(self, g, alpha):
        if alpha.degree != 1:
            raise ValueError("augmentation needs a 1-form")
        self.manifold = g.manifold
        self.base = g
        self.alpha = alpha
        self.name = f"{g.name}+|{alpha.name}|^2"

    def jet(self, p, order):
        a = self.alpha.jet(p, order)
        rank_one = jt.einsum("a,b->ab", a, a.conj())
        return self.base.jet(p, order) + (rank_one + rank_one.conj()) * 0.5


def augment_metric(g, alpha, points=None, tol=1e-8):
    """Check ``alpha`` is holomorphic at ``points`` and return the augmented metric.

    Raises
    ------
    ValueError
        If ``alpha`` fails the holomorphy test at some point.
    """
    if alpha.bidegree is not None and alpha.bidegree != (1, 0):
        raise ValueError(f"augmentation form must be of type (1,0), got {alpha.bidegree}")
    for p in [] if points is None else points:
        res = fm.is_holomorphic_at(alpha, p, tol)
        if not res.holomorphic:
            raise ValueError(f"{alpha.name} is not holomorphic at {tuple(p)} (residual {res.residual:.3g})")
    h = AugmentedMetric(g, alpha)
    for p in [] if points is None else points[:1]:
        lam = np.linalg.eigvalsh(h.at(p)).min()
        if lam <= 0:
            raise PositivityError("augmented metric not positive definite", p, lam)
    return h


def augment_report(g, alpha, samples, seed, order=3, check_holomorphy=True):
    """Sample ``R^h(X,Xb,Y,Yb) <= R^g(X,Xb,Y,Yb)`` for ``h = augment_metric(g, alpha)``.

    Curvatures are evaluated in a quasi holomorphic normal frame of ``h``.
    """
    man = g.manifold
    h = AugmentedMetric(g, alpha)
    pts, lhs, rhs = [], [], []
    for s in range(samples):
        rng = stream(seed, "augment", s)
        p = man.sample_points(rng, 1)[0]
        if check_holomorphy:
            res = fm.is_holomorphic_at(alpha, p)
            if not res.holomorphic:
                raise ValueError(f"{alpha.name} is not holomorphic at {tuple(p)} (residual {res.residual:.3g})")
        frame = make_normal_frame(h, coordinate_10_frame(man, p, order), kind="quasi")
        X, Y = random_unit_vectors(rng, gram_matrix(h.jet(frame.point, 0), frame).value)
        Rh = curvature_quasi_formula(h, frame=frame, normal=True, check_frame=False)
        Rg = curvature_quasi_formula(g, frame=frame, check_frame=False)
        pts.append(p)
        lhs.append(bisectional(Rh, X, Y))
        rhs.append(bisectional(Rg, X, Y))
    return InequalityReport(
        "augment", man.name, (h.name, g.name), seed, np.array(pts), np.array(lhs), np.array(rhs)
    )


# -- product metrics ------------------------------------------------------------


def product_rho(product, a, phi, psi, offset):
    """``rho = i sum_kl a[k, l] phi_k ^ conj(psi_l)`` pulled back to ``product``.

    ``phi`` are forms on the first factor, ``psi`` on the second, whose
    coordinates start at ``offset``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.shape != (len(phi), len(psi)):
        raise ValueError(f"a has shape {a.shape}, expected {(len(phi), len(psi))}")
    P = [fm.pullback(f, product, 0) for f in phi]
    Q = [fm.pullback(f, product, offset).conj() for f in psi]
    rho = None
    for k, f in enumerate(P):
        for l, q in enumerate(Q):
            if a[k, l] == 0:
                continue
            term = fm.wedge(f, q) * (1j * a[k, l])
            rho = term if rho is None else rho + term
    if rho is None:
        m = product.dim
        rho = fm.FormField(product, 2, lambda p, k: jt.Jet.zeros((m, m), p, k), (1, 1), "0")
    rho.bidegree = (1, 1)
    rho.name = "rho"
    return rho


class ProductMetric(MetricField):
    """Metric on ``M x N`` with ``omega_h = pr1* omega_1 + pr2* omega_2 + rho + conj(rho)``.

    ``h = omega_h J``; every evaluation checks positivity and the
    ``omega -> h -> omega`` round trip.
    """

    def __init__(self, h1, h2, a, phi, psi, product=None):
        self.factors = (h1, h2)
        self.manifold = product or product_manifold(h1.manifold, h2.manifold)
        self.offset = h1.manifold.dim
        self.a = np.atleast_2d(np.asarray(a, dtype=complex))
        self.rho = product_rho(self.manifold, self.a, phi, psi, self.offset)
        w1 = fm.pullback(fm.fundamental_form(h1), self.manifold, 0)
        w2 = fm.pullback(fm.fundamental_form(h2), self.manifold, self.offset)
        self.omega = w1 + w2 + self.rho + self.rho.conj()
        self.name = f"product({h1.name}, {h2.name}, a={self.a.tolist()})"

    @property
    def parameter_count(self):
        """Real dimension of the space of ``a`` matrices, ``2 r s``."""
        return 2 * self.a.size

    def jet(self, p, order):
        J = self.manifold.structure_jet(p, order)
        h, roundtrip = fm.metric_from_form(self.omega.jet(p, order), J)
        if roundtrip > 1e-10:
            raise ValidationError(f"omega is not J-invariant (round trip {roundtrip:.3g})", p, roundtrip)
        hv = h.value
        if np.max(np.abs(hv.imag)) > 1e-10 or np.max(np.abs(hv - hv.T)) > 1e-10:
            raise ValidationError("assembled metric is not real symmetric", p)
        lam = float(np.linalg.eigvalsh(hv.real).min())
        if lam <= 0:
            raise PositivityError(f"product metric not positive definite (smallest eigenvalue {lam:.6g})", p, lam)
        return h


def product_metric(h1, h2, a, phi, psi, check_points=None, product=None):
    """Assemble and validate a :class:`ProductMetric`.

    ``check_points`` (default: the product chart's domain centre) are
    evaluated eagerly so that a non-positive result fails here.
    """
    h = ProductMetric(h1, h2, a, phi, psi, product)
    if check_points is None:
        check_points = [np.array([(lo + hi) / 2 for lo, hi in h.manifold.domain])]
    for p in check_points:
        h.jet(p, 0)
    return h


@dataclass
class DecompositionResult:
    a: np.ndarray
    residual: float
    representable: bool
    tol: float


def decompose_product_form(rho, phi, psi, points, offset=None, conjugate=False, tol=1e-9):
    """Least-squares ``a`` with ``rho = sum a[k, l] phi_k ^ psi_l`` at ``points``.

    With ``conjugate=True`` the basis is ``i phi_k ^ conj(psi_l)``, the shape
    of :func:`product_rho`.  A fit residual above ``tol`` is reported as not
    representable rather than raised.
    """
    product = rho.manifold
    offset = phi[0].manifold.dim if offset is None else offset
    P = [fm.pullback(f, product, 0) for f in phi]
    Q = [fm.pullback(f, product, offset) for f in psi]
    if conjugate:
        Q = [q.conj() for q in Q]
    basis = [fm.wedge(f, q) * (1j if conjugate else 1) for f in P for q in Q]
    cols, target = [], []
    for p in points:
        target.append(rho.at(p).ravel())
        cols.append(np.stack([b.at(p).ravel() for b in basis], axis=1))
    A = np.concatenate(cols)
    y = np.concatenate(target)
    x, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ x - y))) if y.size else 0.0
    a = x.reshape(len(phi), len(psi))
    return DecompositionResult(a, resid, resid <= tol, tol)
