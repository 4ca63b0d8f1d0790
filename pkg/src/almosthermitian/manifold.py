"""
Chart-described almost Hermitian manifolds.

A :class:`ChartManifold` is a single chart of real dimension ``2n`` whose
almost complex structure ``J`` and seed metric ``g0`` are matrices of
:mod:`~almosthermitian.expr` expressions in the coordinates.  The metric
actually used everywhere is the J-invariant average of the seed metric
(:func:`hermitianize`).  Metrics are modelled as *metric fields*: objects
with a ``jet(p, order)`` method returning the ``(2n, 2n)`` real-coordinate
metric as a :class:`~almosthermitian.jets.Jet`.  Sums and positive
multiples of metric fields are metric fields again.

The built-in catalog (:func:`catalog`) is a set of test manifolds chosen
for this package; none of them is canonical.
"""

import functools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import jets as jt
from .expr import Expression, Num, ParseError, parse_expression
from .jets import Jet

__all__ = [
    "ValidationError",
    "ConfigError",
    "ChartManifold",
    "MetricField",
    "SeedMetric",
    "SumMetric",
    "ScaledMetric",
    "hermitianize",
    "check_acs",
    "j_invariance_residual",
    "nijenhuis",
    "nijenhuis_tensor",
    "catalog",
    "get_manifold",
    "load_manifold",
    "resolve_manifold",
    "dump_manifold",
    "product_manifold",
    "TWISTED_TORUS_PROBE",
]

#: A point where the twisted torus is visibly non-integrable.
TWISTED_TORUS_PROBE = (0.5, 1.0, 2.0, 0.3)

_EPSILON = 0.3


class ValidationError(ValueError):
    """A manifold or metric violates its invariants at some point."""

    def __init__(self, message, point=None, value=None):
        self.point = None if point is None else tuple(float(x) for x in point)
        self.value = value
        super().__init__(message if point is None else f"{message} at point {self.point}")


class ConfigError(ValueError):
    """Unreadable or malformed manifold config file."""


def _expr_matrix(rows, coordinates, what):
    out = []
    for i, row in enumerate(rows):
        cells = []
        for j, cell in enumerate(row):
            if isinstance(cell, Expression):
                cells.append(cell)
                continue
            try:
                cells.append(parse_expression(cell, coordinates))
            except ParseError as exc:
                raise ConfigError(f"{what}[{i}][{j}]: {exc}") from exc
        out.append(tuple(cells))
    return tuple(out)


@functools.lru_cache(maxsize=4096)
def _matrix_jet(entries, coordinates, point, order):
    xs = Jet.variables(point, order)
    env = dict(zip(coordinates, xs))
    m = len(entries)
    coeffs = np.zeros((m, m, xs[0].space.size), dtype=complex)
    for i, row in enumerate(entries):
        for j, e in enumerate(row):
            if isinstance(e, Num):
                coeffs[i, j, 0] = e.value
                continue
            val = e.evaluate(env)
            if isinstance(val, Jet):
                coeffs[i, j] = val.coeffs
            else:
                coeffs[i, j, 0] = val
    return Jet(coeffs, xs[0].point, order)


@dataclass(frozen=True)
class ChartManifold:
    """An almost complex chart with a seed metric.

    Attributes
    ----------
    name : str
    n : int
        Complex dimension; the chart has ``2n`` real coordinates.
    coordinates : tuple of str
    J_entries, g0_entries : tuple of tuple of Expression
        ``2n x 2n`` matrices in the real coordinate frame.  ``J`` acts on
        column vectors of components.
    domain : tuple of (lo, hi)
        Sampling box.
    """

    name: str
    n: int
    coordinates: tuple
    J_entries: tuple
    g0_entries: tuple
    domain: tuple
    description: str = field(default="", compare=False)

    @classmethod
    def from_strings(cls, name, n, coordinates, J, g0, domain, description=""):
        coordinates = tuple(coordinates)
        m = 2 * n
        if len(coordinates) != m:
            raise ConfigError(f"{name}: need {m} coordinates, got {len(coordinates)}")
        for what, mat in (("J", J), ("g0", g0)):
            if len(mat) != m or any(len(row) != m for row in mat):
                raise ConfigError(f"{name}: {what} must be a {m}x{m} matrix")
        if len(domain) != m or any(len(iv) != 2 or not iv[0] < iv[1] for iv in domain):
            raise ConfigError(f"{name}: domain needs {m} intervals [lo, hi] with lo < hi")
        return cls(
            name=name,
            n=int(n),
            coordinates=coordinates,
            J_entries=_expr_matrix(J, coordinates, "J"),
            g0_entries=_expr_matrix(g0, coordinates, "g0"),
            domain=tuple((float(lo), float(hi)) for lo, hi in domain),
            description=description,
        )

    @property
    def dim(self):
        return 2 * self.n

    def structure_jet(self, p, order):
        """Jet of ``J`` at ``p``, shape ``(2n, 2n)``."""
        return _matrix_jet(self.J_entries, self.coordinates, jt._as_point(p), order)

    def seed_metric_jet(self, p, order):
        return _matrix_jet(self.g0_entries, self.coordinates, jt._as_point(p), order)

    def J_at(self, p):
        return self.structure_jet(p, 0).value.real

    def metric(self):
        """The Hermitianized seed metric as a metric field."""
        return SeedMetric(self, self.g0_entries, name=self.name)

    def sample_points(self, rng, count, margin=0.05):
        """Uniform points in the domain box shrunk by ``margin`` per side."""
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        pad = margin * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim))

    def validate(self, points, tol=1e-10):
        """Check ``J^2 = -I``, positivity of ``g0`` and J-invariance of ``g``.

        Returns the maximal residuals; raises :class:`ValidationError` on
        the first failing point.
        """
        worst = {"acs": 0.0, "seed_min_eigenvalue": math.inf, "j_invariance": 0.0}
        metric = self.metric()
        for p in points:
            r = check_acs(self, p)
            if r > tol:
                raise ValidationError(f"{self.name}: |J^2 + I| = {r:.3g}", p, r)
            g0 = self.seed_metric_jet(p, 0).value.real
            if np.max(np.abs(g0 - g0.T)) > tol:
                raise ValidationError(f"{self.name}: seed metric is not symmetric", p)
            lam = np.linalg.eigvalsh(g0).min()
            if lam <= 0:
                raise ValidationError(f"{self.name}: seed metric not positive definite (eigenvalue {lam:.3g})", p, lam)
            inv = j_invariance_residual(self, metric, p)
            if inv > tol:
                raise ValidationError(f"{self.name}: metric not J-invariant ({inv:.3g})", p, inv)
            worst["acs"] = max(worst["acs"], r)
            worst["seed_min_eigenvalue"] = min(worst["seed_min_eigenvalue"], lam)
            worst["j_invariance"] = max(worst["j_invariance"], inv)
        return worst

    def to_config(self):
        return {
            "name": self.name,
            "n": self.n,
            "coordinates": list(self.coordinates),
            "J": [[str(e) for e in row] for row in self.J_entries],
            "g0": [[str(e) for e in row] for row in self.g0_entries],
            "domain": [list(iv) for iv in self.domain],
        }


# -- metric fields ---------------------------------------------------------


class MetricField:
    """Base class for almost Hermitian metrics on a :class:`ChartManifold`."""

    manifold: ChartManifold
    name: str = "metric"

    def jet(self, p, order):
        raise NotImplementedError

    def at(self, p):
        return self.jet(p, 0).value.real

    def __add__(self, other):
        return SumMetric(self, other)

    def __rmul__(self, s):
        return ScaledMetric(float(s), self)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} on {self.manifold.name}>"


def hermitianize(g0, J):
    """``g = (g0 + J^T g0 J) / 2`` on jets; checks positivity at the base point."""
    g = (g0 + jt.einsum("ca,cb->ab", J, jt.einsum("cd,db->cb", g0, J))) * 0.5
    g0v = g.value.real
    lam = np.linalg.eigvalsh((g0v + g0v.T) / 2).min()
    if lam <= 0:
        raise ValidationError(f"Hermitianized metric not positive definite (eigenvalue {lam:.3g})", g.point, lam)
    return g


class SeedMetric(MetricField):
    """Hermitianization of a matrix of seed-metric expressions."""

    def __init__(self, manifold, g0_entries, name=None):
        self.manifold = manifold
        self.g0_entries = g0_entries
        self.name = name or manifold.name

    def jet(self, p, order):
        g0 = _matrix_jet(self.g0_entries, self.manifold.coordinates, jt._as_point(p), order)
        return hermitianize(g0, self.manifold.structure_jet(p, order))


class SumMetric(MetricField):
    def __init__(self, a, b):
        if a.manifold.J_entries != b.manifold.J_entries or a.manifold.coordinates != b.manifold.coordinates:
            raise ValidationError("metrics live on different almost complex manifolds")
        self.manifold = a.manifold
        self.parts = (a, b)
        self.name = f"({a.name} + {b.name})"

    def jet(self, p, order):
        return self.parts[0].jet(p, order) + self.parts[1].jet(p, order)


class ScaledMetric(MetricField):
    def __init__(self, s, g):
        if s <= 0:
            raise ValidationError(f"metric scale must be positive, got {s}")
        self.manifold = g.manifold
        self.scale = s
        self.base = g
        self.name = f"{s:g}*{g.name}"

    def jet(self, p, order):
        return self.base.jet(p, order) * self.scale


# -- checks ---------------------------------------------------------------


def check_acs(manifold, p):
    """Max-norm of ``J(p)^2 + I``."""
    J = manifold.J_at(p) if isinstance(manifold, ChartManifold) else np.asarray(manifold)
    return float(np.max(np.abs(J @ J + np.eye(J.shape[0]))))


def j_invariance_residual(manifold, metric, p):
    """Max-norm of ``J^T g J - g`` at ``p``."""
    J = manifold.J_at(p)
    g = metric.at(p)
    return float(np.max(np.abs(J.T @ g @ J - g)))


def nijenhuis(manifold, X, Y, p=None):
    """``N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]`` at the base point.

    ``X`` and ``Y`` are real vector-field jets of shape ``(2n,)`` and order
    at least 1.
    """
    from .frames import lie_bracket

    if X.order < 1 or Y.order < 1:
        raise jt.JetError("Nijenhuis tensor needs vector-field jets of order >= 1")
    X, Y = jt.common(X, Y)
    J = manifold.structure_jet(X.point, X.order)
    JX = jt.einsum("ab,b->a", J, X)
    JY = jt.einsum("ab,b->a", J, Y)
    J1 = J.truncate(X.order - 1)
    N = (
        lie_bracket(JX, JY)
        - jt.einsum("ab,b->a", J1, lie_bracket(JX, Y))
        - jt.einsum("ab,b->a", J1, lie_bracket(X, JY))
        - lie_bracket(X, Y)
    )
    return N.value.real


def nijenhuis_tensor(manifold, p, order=1):
    """Components ``N[a, b, :] = N(d_a, d_b)`` for coordinate fields."""
    m = manifold.dim
    out = np.zeros((m, m, m))
    for a in range(m):
        for b in range(a + 1, m):
            ea = Jet.constant(np.eye(m)[a], p, order)
            eb = Jet.constant(np.eye(m)[b], p, order)
            out[a, b] = nijenhuis(manifold, ea, eb)
            out[b, a] = -out[a, b]
    return out


# -- catalog --------------------------------------------------------------


def _standard_J(n):
    J = [["0"] * (2 * n) for _ in range(2 * n)]
    for k in range(n):
        J[2 * k + 1][2 * k] = "1"
        J[2 * k][2 * k + 1] = "-1"
    return J


def _identity(m, scale="1"):
    return [[scale if i == j else "0" for j in range(m)] for i in range(m)]


def _coords(n, start=1):
    out = []
    for k in range(start, start + n):
        out += [f"x{k}", f"y{k}"]
    return out


def _twisted_block(x, eps=_EPSILON):
    # A(theta) J_std A(theta)^T, A rotating the x-directions of the two
    # complex lines into each other by theta = eps*sin(x)
    c = f"cos({eps}*sin({x}))"
    s = f"sin({eps}*sin({x}))"
    return [
        ["0", f"-{c}", "0", s],
        [c, "0", s, "0"],
        ["0", f"-{s}", "0", f"-{c}"],
        [f"-{s}", "0", c, "0"],
    ]


def _block_diag(a, b):
    ma, mb = len(a), len(b)
    out = [row + ["0"] * mb for row in a]
    out += [["0"] * ma + row for row in b]
    return out


_TWO_PI = 2 * math.pi

_TWISTED_SEED_B = [
    ["2 + sin(x2)", "0", "0.3*sin(y2)", "0"],
    ["0", "1 + 0.5*cos(y1)^2", "0", "0.2*cos(x1)"],
    ["0.3*sin(y2)", "0", "1.5", "0"],
    ["0", "0.2*cos(x1)", "0", "1 + 0.25*sin(x1 + y2)^2"],
]


@functools.lru_cache(maxsize=1)
def _catalog():
    box = lambda m, lo, hi: [[lo, hi]] * m  # noqa: E731
    torus = box(4, 0.0, _TWO_PI)
    out = [
        ChartManifold.from_strings(
            "flat_c1", 1, _coords(1), _standard_J(1), _identity(2), box(2, -1.0, 1.0),
            "Flat C with the standard structure and Euclidean metric.",
        ),
        ChartManifold.from_strings(
            "flat_c2", 2, _coords(2), _standard_J(2), _identity(4), box(4, -1.0, 1.0),
            "Flat C^2 with the standard structure and Euclidean metric.",
        ),
        ChartManifold.from_strings(
            "flat_torus", 1, _coords(1), _standard_J(1), _identity(2), box(2, 0.0, _TWO_PI),
            "Flat square torus R^2 / (2 pi Z)^2 with the standard structure.",
        ),
        ChartManifold.from_strings(
            "kahler_exp", 1, _coords(1), _standard_J(1), _identity(2, "2*exp(x1^2 + y1^2)"),
            box(2, -1.5, 1.5),
            "C with g(d/dz, d/dzbar) = exp(|z|^2); Kaehler, curvature -exp(|z|^2).",
        ),
        ChartManifold.from_strings(
            "twisted_torus", 2, _coords(2), _twisted_block("x1"), _identity(4), torus,
            "4-torus, J = A J_std A^T with A mixing the two complex lines by the angle "
            "0.3*sin(x1); non-integrable. Metric: Hermitianized identity.",
        ),
        ChartManifold.from_strings(
            "twisted_torus_b", 2, _coords(2), _twisted_block("x1"), _TWISTED_SEED_B, torus,
            "Same almost complex structure as twisted_torus with a non-constant seed metric.",
        ),
        ChartManifold.from_strings(
            "product", 4, _coords(4),
            _block_diag(_twisted_block("x1"), _twisted_block("x3")),
            _identity(8), box(8, 0.0, _TWO_PI),
            "twisted_torus x twisted_torus (second factor twisted by 0.3*sin(x3)).",
        ),
    ]
    return tuple(out)


_ALIASES = {"flat_cn": "flat_c1"}


def catalog():
    """All built-in test manifolds."""
    return list(_catalog())


def get_manifold(name):
    name = _ALIASES.get(name, name)
    for m in _catalog():
        if m.name == name:
            return m
    known = ", ".join([m.name for m in _catalog()] + list(_ALIASES))
    raise KeyError(f"unknown manifold {name!r}; known: {known}")


def load_manifold(path):
    """Read a manifold config file (YAML or JSON).

    Required keys: ``name``, ``n``, ``coordinates``, ``J``, ``g0``,
    ``domain``.  Matrix cells are expression strings or numbers.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    missing = {"name", "n", "coordinates", "J", "g0", "domain"} - set(data)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    try:
        n = int(data["n"])
        to_str = lambda mat: [[str(c) for c in row] for row in mat]  # noqa: E731
        return ChartManifold.from_strings(
            str(data["name"]), n, [str(c) for c in data["coordinates"]],
            to_str(data["J"]), to_str(data["g0"]), data["domain"],
            str(data.get("description", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def resolve_manifold(spec):
    """Catalog name, or path to a config file."""
    try:
        return get_manifold(spec)
    except KeyError:
        if Path(spec).exists():
            return load_manifold(spec)
        raise


def _rename(expr, mapping):
    text = str(expr)
    return re.sub(r"[A-Za-z_][A-Za-z_0-9]*", lambda m: mapping.get(m.group(0), m.group(0)), text)


def product_manifold(first, second, name=None):
    """Product chart ``first x second`` with block-diagonal ``J`` and seed metric.

    Coordinates are kept when the factors' names are disjoint; otherwise
    they are renamed ``x1, y1, x2, y2, ...`` across both factors.
    """
    coords = list(first.coordinates) + list(second.coordinates)
    maps = ({}, {})
    if len(set(coords)) != len(coords):
        coords = _coords(first.n + second.n)
        maps = (
            dict(zip(first.coordinates, coords[: first.dim])),
            dict(zip(second.coordinates, coords[first.dim :])),
        )

    def mat(f, s, attr):
        a = [[_rename(e, maps[0]) for e in row] for row in getattr(f, attr)]
        b = [[_rename(e, maps[1]) for e in row] for row in getattr(s, attr)]
        return _block_diag(a, b)

    return ChartManifold.from_strings(
        name or f"{first.name}_x_{second.name}",
        first.n + second.n,
        coords,
        mat(first, second, "J_entries"),
        mat(first, second, "g0_entries"),
        list(first.domain) + list(second.domain),
        f"Product of {first.name} and {second.name}.",
    )


def dump_manifold(manifold, path):
    Path(path).write_text(json.dumps(manifold.to_config(), indent=2))
