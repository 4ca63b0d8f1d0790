import json

import numpy as np
import pytest

from almosthermitian.jets import Jet
from almosthermitian.manifold import (
    TWISTED_TORUS_PROBE,
    ChartManifold,
    ConfigError,
    ValidationError,
    catalog,
    check_acs,
    dump_manifold,
    get_manifold,
    j_invariance_residual,
    load_manifold,
    nijenhuis,
    nijenhuis_tensor,
    product_manifold,
    resolve_manifold,
)


@pytest.mark.parametrize("M", catalog(), ids=lambda m: m.name)
def test_catalog_validates(M, rng):
    worst = M.validate(M.sample_points(rng, 200))
    assert worst["acs"] < 1e-12
    assert worst["j_invariance"] < 1e-12
    assert worst["seed_min_eigenvalue"] > 0


def test_catalog_names_and_alias():
    names = {m.name for m in catalog()}
    assert {"flat_c1", "flat_c2", "flat_torus", "kahler_exp", "twisted_torus", "product"} <= names
    assert get_manifold("flat_cn") is get_manifold("flat_c1")
    with pytest.raises(KeyError):
        get_manifold("no_such_manifold")


def test_flat_is_integrable(rng):
    M = get_manifold("flat_c2")
    X = Jet.constant(rng.normal(size=4), (0.1, 0.2, 0.3, 0.4), 2)
    Y = Jet.constant(rng.normal(size=4), (0.1, 0.2, 0.3, 0.4), 2)
    assert np.max(np.abs(nijenhuis(M, X, Y))) == 0.0


def _fd_nijenhuis(M, p, h=1e-6):
    """N(d_a, d_b) from central differences of J; coordinate fields commute."""
    m = M.dim
    p = np.asarray(p, float)
    J = M.J_at(p)
    dJ = np.array([(M.J_at(p + h * e) - M.J_at(p - h * e)) / (2 * h) for e in np.eye(m)])  # [d, c, b]
    N = np.zeros((m, m, m))
    for a in range(m):
        for b in range(m):
            jxjy = J[:, a] @ dJ[:, :, b] - J[:, b] @ dJ[:, :, a]
            N[a, b] = jxjy + J @ dJ[b, :, a] - J @ dJ[a, :, b]
    return N


def test_twisted_torus_nijenhuis_matches_finite_differences():
    M = get_manifold("twisted_torus")
    N = nijenhuis_tensor(M, TWISTED_TORUS_PROBE)
    assert np.max(np.abs(N - _fd_nijenhuis(M, TWISTED_TORUS_PROBE))) < 1e-8
    # frozen from the finite-difference oracle above
    assert np.linalg.norm(N) == pytest.approx(0.7446534966764947, rel=1e-8)


@pytest.mark.parametrize("M", catalog(), ids=lambda m: m.name)
def test_hermitianized_metric_on_random_pairs(M, rng):
    for p in M.sample_points(rng, 3):
        g, J = M.metric().at(p), M.J_at(p)
        X, Y = rng.normal(size=(2, 100, M.dim))
        lhs = np.einsum("ia,ab,ib->i", X @ J.T, g, Y @ J.T)
        rhs = np.einsum("ia,ab,ib->i", X, g, Y)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_kahler_exp_is_integrable():
    M = get_manifold("kahler_exp")
    assert np.max(np.abs(nijenhuis_tensor(M, (0.3, -0.4)))) == 0.0


def test_product_of_twisted_tori_is_not_integrable():
    M = get_manifold("product")
    p = (0.5, 1.0, 2.0, 0.3, 0.5, 1.0, 2.0, 0.3)
    assert np.linalg.norm(nijenhuis_tensor(M, p)) > 0.1


def test_bad_structure_is_rejected():
    M = ChartManifold.from_strings(
        "bad", 1, ["x", "y"], [["0", "-2"], ["1", "0"]], [["1", "0"], ["0", "1"]], [[0, 1], [0, 1]]
    )
    assert check_acs(M, (0.5, 0.5)) == pytest.approx(1.0)
    with pytest.raises(ValidationError) as err:
        M.validate([(0.5, 0.5)])
    assert err.value.point is not None


def test_indefinite_seed_is_rejected():
    M = ChartManifold.from_strings(
        "neg", 1, ["x", "y"], [["0", "-1"], ["1", "0"]], [["1", "0"], ["0", "x - 1"]], [[0, 1], [0, 1]]
    )
    with pytest.raises(ValidationError):
        M.validate([(0.5, 0.5)])


def test_hermitianized_metric_is_j_invariant():
    M = get_manifold("twisted_torus_b")
    g0 = M.seed_metric_jet(TWISTED_TORUS_PROBE, 0).value.real
    J = M.J_at(TWISTED_TORUS_PROBE)
    assert np.max(np.abs(J.T @ g0 @ J - g0)) > 1e-3  # the seed itself is not
    assert j_invariance_residual(M, M.metric(), TWISTED_TORUS_PROBE) < 1e-14


def test_metric_combinations():
    g = get_manifold("kahler_exp").metric()
    p = (0.2, 0.1)
    assert np.allclose((g + g).at(p), 2 * g.at(p))
    assert np.allclose((3 * g).at(p), 3 * g.at(p))
    with pytest.raises(ValidationError):
        (-1) * g
    with pytest.raises(ValidationError):
        g + get_manifold("twisted_torus").metric()


def test_config_roundtrip(tmp_path):
    M = get_manifold("twisted_torus_b")
    path = tmp_path / "m.json"
    dump_manifold(M, path)
    again = load_manifold(path)
    assert again == M
    assert resolve_manifold(str(path)) == M


def test_yaml_config(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text(
        "name: disk\nn: 1\ncoordinates: [u, v]\n"
        "J: [[0, -1], [1, 0]]\ng0: [['1 + u^2', 0], [0, '1 + u^2']]\n"
        "domain: [[-1, 1], [-1, 1]]\n"
    )
    M = load_manifold(path)
    assert M.n == 1
    assert M.metric().at((0.5, 0.0))[0, 0] == pytest.approx(1.25)


@pytest.mark.parametrize(
    "text",
    [
        "name: x\n",
        "- a\n- b\n",
        "name: x\nn: 1\ncoordinates: [u]\nJ: [[0]]\ng0: [[1]]\ndomain: [[0, 1]]\n",
        "name: x\nn: 1\ncoordinates: [u, v]\nJ: [[0, -1], [1, 0]]\ng0: [[1, 0], [0, 1]]\ndomain: [[1, 0], [0, 1]]\n",
        "{unbalanced",
    ],
)
def test_bad_configs(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_manifold(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_manifold(tmp_path / "nope.yaml")


def test_product_manifold_renames_clashing_coordinates():
    T = get_manifold("flat_torus")
    P = product_manifold(T, T)
    assert P.coordinates == ("x1", "y1", "x2", "y2")
    assert P.n == 2
    assert np.allclose(P.J_at((0, 0, 0, 0)), np.kron(np.eye(2), T.J_at((0, 0))))
    K = product_manifold(get_manifold("kahler_exp"), get_manifold("kahler_exp"))
    g = K.metric().at((1.0, 0.0, 0.0, 0.0))
    assert g[0, 0] == pytest.approx(2 * np.e) and g[2, 2] == pytest.approx(2.0)
