"""
Verification checks shared by the command line and the test-suite.

Each ``check_*`` function samples points (or samples) from seeded
per-index streams, evaluates one family of identities and returns a
:class:`~almosthermitian.report.Record`.  Tolerances are the package
defaults multiplied by ``tol_scale``.
"""

import numpy as np

from . import forms as fm
from .connection import UniquenessError, connection_by_axioms_oracle, random_vector_field, verify_axioms
from .curvature import (
    PositivityError,
    augment_report,
    compare_curvature,
    decompose_product_form,
    max_bisectional,
    product_metric,
    wu_report,
)
from .frames import (
    coordinate_10_frame,
    make_normal_frame,
    make_pseudo_holomorphic_frame,
    make_quasi_holomorphic_frame,
    metric_gradient_residual,
    pseudo_residual,
    quasi_residual,
)
from .manifold import catalog, check_acs, j_invariance_residual, nijenhuis_tensor
from .report import Record, timed
from .rng import stream

__all__ = [
    "TOLERANCES",
    "sample_point",
    "check_manifold",
    "check_axioms",
    "check_uniqueness",
    "check_frames",
    "check_curvature",
    "check_wu",
    "check_augment",
    "check_product",
    "check_forms",
    "run_suite",
]

TOLERANCES = {
    "manifold": 1e-10,
    "axioms": 1e-8,
    "uniqueness": 1e-8,
    "pseudo": 1e-9,
    "quasi": 1e-8,
    "normal": 1e-8,
    "curvature_relative": 1e-6,
    "curvature_floor": 1e-9,
    "mixed_derivative": 1e-8,
    "normal_mode": 1e-8,
    "hermitian": 1e-8,
    "margin": 1e-9,
    "decomposition": 1e-9,
    "lie": 1e-8,
    "holomorphy": 1e-10,
}


def sample_point(manifold, seed, label, index):
    rng = stream(seed, label, index)
    return manifold.sample_points(rng, 1)[0], rng


def _standard_pairs(manifold, p):
    J = manifold.J_at(p)
    std = np.zeros_like(J)
    for k in range(manifold.n):
        std[2 * k + 1, 2 * k] = 1
        std[2 * k, 2 * k + 1] = -1
    return bool(np.max(np.abs(J - std)) < 1e-14)


def check_manifold(manifold, points, seed, tol_scale=1.0):
    """``J^2 = -I``, seed positivity, J-invariance; Nijenhuis norm reported."""
    tol = TOLERANCES["manifold"] * tol_scale
    worst = {"acs": 0.0, "j_invariance": 0.0, "nijenhuis": 0.0}
    with timed() as t:
        try:
            for i in range(points):
                p, _ = sample_point(manifold, seed, "manifold", i)
                manifold.validate([p], tol)
                worst["acs"] = max(worst["acs"], check_acs(manifold, p))
                worst["j_invariance"] = max(worst["j_invariance"], j_invariance_residual(manifold, manifold.metric(), p))
                worst["nijenhuis"] = max(worst["nijenhuis"], float(np.linalg.norm(nijenhuis_tensor(manifold, p))))
            err = None
        except ValueError as exc:
            err = str(exc)
    return Record(
        f"manifold/{manifold.name}", points, tol, max(worst["acs"], worst["j_invariance"]),
        elapsed=t(), details=worst, error=err,
    )


def check_axioms(manifold, points, seed, tol_scale=1.0, order=3, metric=None):
    """Canonical-connection axioms at ``points`` sampled points."""
    tol = TOLERANCES["axioms"] * tol_scale
    parts = {"metric": 0.0, "complex_structure": 0.0, "torsion_11": 0.0, "anti_bracket": 0.0}
    with timed() as t:
        for i in range(points):
            p, rng = sample_point(manifold, seed, "axioms", i)
            rep = verify_axioms(manifold, p, metric, rng, order=order)
            for k in parts:
                parts[k] = max(parts[k], getattr(rep, k))
    return Record(f"axioms/{manifold.name}", points, tol, max(parts.values()), elapsed=t(), details=parts)


def check_uniqueness(manifold, points, seed, tol_scale=1.0, order=3):
    """Axioms linear system: full rank and agreement with the frame construction."""
    tol = TOLERANCES["uniqueness"] * tol_scale
    worst, rank, err = 0.0, None, None
    with timed() as t:
        try:
            for i in range(points):
                p, _ = sample_point(manifold, seed, "uniqueness", i)
                out = connection_by_axioms_oracle(manifold, p, order=order, tol=tol)
                worst = max(worst, out["mismatch"], out["residual"], out["imaginary"])
                rank = out["rank"]
        except UniquenessError as exc:
            err = str(exc)
    return Record(
        f"uniqueness/{manifold.name}", points, tol, worst, elapsed=t(),
        details={"rank": rank, "unknowns": manifold.dim**3}, error=err,
    )


def check_frames(manifold, points, seed, tol_scale=1.0, order=3):
    """Pseudo, quasi and normal frame postconditions; one record each."""
    res = {k: 0.0 for k in ("pseudo", "quasi_pseudo", "quasi_nested", "pn_pseudo", "pn_dg", "qn_nested", "qn_dg")}
    cond = 0.0
    metric = manifold.metric()
    with timed() as t:
        for i in range(points):
            p, _ = sample_point(manifold, seed, "frames", i)
            base = coordinate_10_frame(manifold, p, order)
            cond = max(cond, base.condition())
            P = make_pseudo_holomorphic_frame(base)
            Q = make_quasi_holomorphic_frame(base)
            PN = make_normal_frame(metric, base, kind="pseudo")
            QN = make_normal_frame(metric, base, kind="quasi")
            upd = {
                "pseudo": pseudo_residual(P),
                "quasi_pseudo": pseudo_residual(Q),
                "quasi_nested": quasi_residual(Q),
                "pn_pseudo": pseudo_residual(PN),
                "pn_dg": metric_gradient_residual(metric, PN),
                "qn_nested": max(quasi_residual(QN), pseudo_residual(QN)),
                "qn_dg": metric_gradient_residual(metric, QN),
            }
            for k, v in upd.items():
                res[k] = max(res[k], v)
    el = t() / 3
    s = tol_scale
    return [
        Record(f"frames/pseudo/{manifold.name}", points, TOLERANCES["pseudo"] * s, res["pseudo"], elapsed=el,
               details={"max_condition": cond}),
        Record(f"frames/quasi/{manifold.name}", points, TOLERANCES["quasi"] * s,
               max(res["quasi_pseudo"], res["quasi_nested"]), elapsed=el,
               details={"pseudo": res["quasi_pseudo"], "nested": res["quasi_nested"]}),
        Record(f"frames/normal/{manifold.name}", points, TOLERANCES["normal"] * s,
               max(res["pn_pseudo"], res["pn_dg"], res["qn_nested"], res["qn_dg"]), elapsed=el,
               details={"pseudo_normal_dg": res["pn_dg"], "quasi_normal_dg": res["qn_dg"],
                        "quasi_normal_nested": res["qn_nested"]}),
    ]


def check_curvature(manifold, points, seed, tol_scale=1.0, order=3, metric=None):
    """Cross-method curvature agreement plus frame-condition and symmetry checks.

    ``max_residual`` is the worst ``|R_quasi - R_def| / max(|R_def|, 1e-3)``,
    so the relative tolerance ``1e-6`` carries an absolute floor of ``1e-9``.
    """
    metric = manifold.metric() if metric is None else metric
    rel = 0.0
    d = {"mixed_derivative": 0.0, "normal_mode": 0.0, "hermitian": 0.0, "max_abs_R": 0.0, "part_20": 0.0}
    floor = TOLERANCES["curvature_floor"] / TOLERANCES["curvature_relative"]
    err = None
    with timed() as t:
        try:
            for i in range(points):
                p, _ = sample_point(manifold, seed, "curvature", i)
                c = compare_curvature(metric, p, order)
                rel = max(rel, c["abs_deviation"] / max(c["scale"], floor))
                d["mixed_derivative"] = max(d["mixed_derivative"], c["mixed_residual"])
                d["normal_mode"] = max(d["normal_mode"], c["normal_deviation"])
                d["hermitian"] = max(d["hermitian"], c["hermitian_residual"])
                d["max_abs_R"] = max(d["max_abs_R"], c["scale"])
                d["part_20"] = max(d["part_20"], c["part_20"])
        except RuntimeError as exc:
            err = str(exc)
    s = tol_scale
    ok = (
        err is None
        and rel <= TOLERANCES["curvature_relative"] * s
        and d["mixed_derivative"] <= TOLERANCES["mixed_derivative"] * s
        and d["normal_mode"] <= TOLERANCES["normal_mode"] * s
        and d["hermitian"] <= TOLERANCES["hermitian"] * s
    )
    return Record(
        f"curvature/{manifold.name}", points, TOLERANCES["curvature_relative"] * s, rel,
        passed=ok, elapsed=t(), details=d, error=err,
    )


def _inequality_record(name, report, tol, elapsed):
    details = report.summary()
    ok = report.passed(tol)
    return Record(name, report.samples, tol, min_margin=report.min_margin, passed=ok, elapsed=elapsed, details=details)


def check_wu(gA, gB, samples, seed, tol_scale=1.0, order=3):
    """Sum-of-metrics inequality with the discarded-term check."""
    tol = TOLERANCES["margin"] * tol_scale
    with timed() as t:
        rep = wu_report(gA, gB, samples, seed, order=order)
    return _inequality_record(f"wu/{gA.name}+{gB.name}", rep, tol, t())


def check_augment(metric, coefficient, samples, seed, tol_scale=1.0, order=3, k=1):
    """Rank-one augmentation by ``coefficient * dz_k``."""
    tol = TOLERANCES["margin"] * tol_scale
    alpha = fm.dz(metric.manifold, k) * coefficient
    with timed() as t:
        rep = augment_report(metric, alpha, samples, seed, order=order)
    return _inequality_record(f"augment/{metric.name}", rep, tol, t())


def check_product(first, second, a, samples, seed, tol_scale=1.0, order=3):
    """Product metric from ``a``: positivity, sampled curvature sign, decomposition round trip.

    The holomorphic bases are ``dz_1, ..., dz_n`` of each factor, so both
    factors must carry the standard structure.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    phi = [fm.dz(first, k) for k in range(1, first.n + 1)]
    psi = [fm.dz(second, k) for k in range(1, second.n + 1)]
    tol = TOLERANCES["margin"] * tol_scale
    records = []
    with timed() as t:
        pts = []
        for i in range(samples):
            pts.append(sample_point(first, seed, "product-first", i)[0].tolist()
                       + sample_point(second, seed, "product-second", i)[0].tolist())
        try:
            h = product_metric(first.metric(), second.metric(), a, phi, psi, check_points=pts)
        except PositivityError as exc:
            return [Record("product/positivity", samples, 0.0, elapsed=t(), error=str(exc),
                           details={"point": list(exc.point), "smallest_eigenvalue": exc.value})]
        lam = min(float(np.linalg.eigvalsh(h.at(p)).min()) for p in pts)
    records.append(Record("product/positivity", samples, 0.0, min_margin=lam, passed=lam > 0, elapsed=t(),
                          details={"min_eigenvalue": lam, "parameter_count": h.parameter_count}))
    with timed() as t:
        top = max_bisectional(h, samples, seed, order=order, label="product")
    records.append(Record("product/bisectional", samples, tol, min_margin=0.0 - top, elapsed=t(),
                          details={"max_bisectional": top}))
    with timed() as t:
        dec = decompose_product_form(h.rho, phi, psi, pts[: max(1, min(5, samples))], conjugate=True)
        err = float(np.max(np.abs(dec.a - a)))
    records.append(Record("product/decomposition", samples, TOLERANCES["decomposition"] * tol_scale,
                          max(err, dec.residual), elapsed=t(),
                          details={"recovered": dec.a, "fit_residual": dec.residual}))
    return records


def check_forms(manifold, points, seed, tol_scale=1.0, order=3):
    """Lie-derivative identity and holomorphy dual route on random forms.

    At each point a random ``(r, 0)``-form (``r`` cycling through
    ``1 .. n``) is paired with a random (1,0)-field.  When ``J`` is the
    standard structure at every sampled point, ``dz_k`` are checked to be
    holomorphic.
    """
    lie, agree, cartan = 0.0, 0.0, 0.0
    dz_res = 0.0
    standard = True
    J_dim = manifold.dim
    with timed() as t:
        for i in range(points):
            p, rng = sample_point(manifold, seed, "forms", i)
            r = 1 + i % manifold.n
            alpha = fm.random_form(rng, manifold, p, r, (r, 0), order=order)
            X = random_vector_field(rng, p, order, J_dim, "10", manifold.structure_jet(p, order))
            res, _, _ = fm.lie_identity_residual(manifold, X, alpha, p)
            lie = max(lie, res)
            V = random_vector_field(rng, p, order, J_dim)
            A = alpha.jet(p, order)
            cartan = max(cartan, float(np.max(np.abs((fm.lie_derivative(V, A) - fm.cartan_lie_derivative(V, A)).value))))
            h = fm.is_holomorphic_at(alpha, p)
            agree = max(agree, h.agreement)
            if _standard_pairs(manifold, p):
                for k in range(1, manifold.n + 1):
                    dz_res = max(dz_res, fm.is_holomorphic_at(fm.dz(manifold, k), p).residual)
            else:
                standard = False
    s = tol_scale
    out = [
        Record(f"forms/lie/{manifold.name}", points, TOLERANCES["lie"] * s, max(lie, cartan), elapsed=t() / 2,
               details={"lie_identity": lie, "cartan_vs_coordinate": cartan}),
        Record(f"forms/holomorphy/{manifold.name}", points, TOLERANCES["lie"] * s, agree, elapsed=t() / 2,
               details={"route_agreement": agree}),
    ]
    if standard:
        out.append(Record(f"forms/dz/{manifold.name}", points, TOLERANCES["holomorphy"] * s, dz_res))
    return out


def run_suite(report, points, samples, seed, tol_scale=1.0, order=3, manifolds=None):
    """Every check on the whole catalog (or ``manifolds``), appended to ``report``."""
    from .manifold import get_manifold

    mans = catalog() if manifolds is None else manifolds
    for M in mans:
        report.add(check_manifold(M, points, seed, tol_scale))
        report.add(check_axioms(M, points, seed, tol_scale, order))
        report.add(check_uniqueness(M, min(points, 10), seed, tol_scale, order))
        for r in check_frames(M, points, seed, tol_scale, order):
            report.add(r)
        report.add(check_curvature(M, points, seed, tol_scale, order))
        for r in check_forms(M, points, seed, tol_scale, order):
            report.add(r)
    flat, kexp = get_manifold("flat_c1"), get_manifold("kahler_exp")
    tt, ttb = get_manifold("twisted_torus"), get_manifold("twisted_torus_b")
    report.add(check_wu(flat.metric(), kexp.metric(), samples, seed, tol_scale, order))
    report.add(check_wu(tt.metric(), ttb.metric(), samples, seed, tol_scale, order))
    report.add(check_augment(kexp.metric(), 0.5, samples, seed, tol_scale, order))
    torus = get_manifold("flat_torus")
    for r in check_product(torus, torus, [[0.3]], samples, seed, tol_scale, order):
        report.add(r)
    return report
