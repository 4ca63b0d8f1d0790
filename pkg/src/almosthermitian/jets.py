"""
Truncated multivariate Taylor jets with complex coefficients.

A :class:`Jet` carries the Taylor coefficients, up to a fixed total degree
``order``, of one or many complex-valued functions of the ``nvars`` real
chart coordinates around a base point.  Coefficients are stored densely,
in graded-lexicographic multi-index order, on the *last* array axis; every
leading axis is a batch axis with numpy broadcasting semantics.  A jet of
shape ``(n, 2n)`` is therefore a whole frame of vector fields.

Arithmetic is exact truncation: the product of two jets of order ``K`` is
the degree-``<= K`` part of the coefficient convolution.  Differentiation
lowers the order by one.  Binary operations refuse jets with different
orders or base points; use :meth:`Jet.truncate` (or :func:`common`) to
bring operands to a common order explicitly.
"""

import functools
import itertools
import math

import numpy as np

__all__ = [
    "JetError",
    "JetSpace",
    "jet_space",
    "Jet",
    "common",
    "jet_mul",
    "einsum",
    "inv",
    "stack",
    "apply_vector_field",
    "embed",
]


class JetError(ValueError):
    """Usage error in jet arithmetic (order/base-point mismatch, underflow)."""


class JetSpace:
    """Multi-index bookkeeping for jets of a given ``(nvars, order)``.

    Attributes
    ----------
    indices : ndarray, shape (size, nvars)
        Multi-indices in graded-lexicographic order.
    position : dict
        Maps a multi-index tuple to its coefficient slot.
    size : int
        Number of multi-indices of total degree ``<= order``.
    """

    def __init__(self, nvars, order):
        if nvars < 1 or order < 0:
            raise JetError(f"invalid jet space ({nvars=}, {order=})")
        self.nvars = nvars
        self.order = order
        rows = []
        for degree in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), degree):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                rows.append(tuple(alpha))
        self.indices = np.array(rows, dtype=np.int64).reshape(len(rows), nvars)
        self.position = {alpha: k for k, alpha in enumerate(rows)}
        self.size = len(rows)
        self.degrees = self.indices.sum(axis=1)
        self.factorials = np.array(
            [math.prod(math.factorial(a) for a in alpha) for alpha in rows], dtype=float
        )

        # product table, sorted by target slot so np.add.reduceat can scatter
        pa, pb, pc = [], [], []
        for i, alpha in enumerate(rows):
            for j, beta in enumerate(rows):
                if self.degrees[i] + self.degrees[j] <= order:
                    pa.append(i)
                    pb.append(j)
                    pc.append(self.position[tuple(a + b for a, b in zip(alpha, beta))])
        perm = np.argsort(np.array(pc), kind="stable")
        self.pair_a = np.array(pa)[perm]
        self.pair_b = np.array(pb)[perm]
        pc = np.array(pc)[perm]
        self.pair_starts = np.flatnonzero(np.r_[True, pc[1:] != pc[:-1]])

        # derivative tables into the space of order - 1
        if order > 0:
            lower = rows[: math.comb(nvars + order - 1, order - 1)]
            self.deriv_source = np.empty((nvars, len(lower)), dtype=np.int64)
            self.deriv_factor = np.empty((nvars, len(lower)))
            for v in range(nvars):
                for k, beta in enumerate(lower):
                    up = list(beta)
                    up[v] += 1
                    self.deriv_source[v, k] = self.position[tuple(up)]
                    self.deriv_factor[v, k] = up[v]

    def count(self, order):
        """Number of coefficients of total degree ``<= order``."""
        return math.comb(self.nvars + order, order)

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"


@functools.lru_cache(maxsize=None)
def jet_space(nvars, order):
    return JetSpace(nvars, order)


def _as_point(point):
    return tuple(float(x) for x in np.asarray(point, dtype=float).ravel())


class Jet:
    """A (batch of) truncated Taylor expansion(s) at a base point.

    Parameters
    ----------
    coeffs : array_like, shape (..., size)
        Complex Taylor coefficients; the last axis runs over multi-indices
        of the jet space ``(len(point), order)``.
    point : sequence of float
        Base point in chart coordinates.
    order : int
        Truncation degree ``K``.
    """

    __array_priority__ = 1000
    __slots__ = ("coeffs", "point", "order", "space")

    def __init__(self, coeffs, point, order):
        point = point if isinstance(point, tuple) else _as_point(point)
        space = jet_space(len(point), int(order))
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 0 or coeffs.shape[-1] != space.size:
            raise JetError(
                f"coefficient axis has length {coeffs.shape[-1:] or 0}, "
                f"expected {space.size} for {space}"
            )
        self.coeffs = coeffs
        self.point = point
        self.order = int(order)
        self.space = space

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, value, point, order):
        point = _as_point(point)
        value = np.asarray(value, dtype=complex)
        coeffs = np.zeros(value.shape + (jet_space(len(point), order).size,), dtype=complex)
        coeffs[..., 0] = value
        return cls(coeffs, point, order)

    @classmethod
    def zeros(cls, shape, point, order):
        return cls.constant(np.zeros(shape), point, order)

    @classmethod
    def variable(cls, k, point, order):
        """The jet of the ``k``-th coordinate function."""
        point = _as_point(point)
        out = cls.constant(point[k], point, order)
        if order >= 1:
            out.coeffs[1 + k] = 1.0
        return out

    @classmethod
    def variables(cls, point, order):
        point = _as_point(point)
        return [cls.variable(k, point, order) for k in range(len(point))]

    @classmethod
    def polynomial(cls, point, order, value, gradient=None, hessian=None):
        """Jet of ``value + gradient.(x-p) + (x-p).hessian.(x-p)/2``.

        ``value`` has shape ``S``; ``gradient`` shape ``S + (nvars,)``;
        ``hessian`` shape ``S + (nvars, nvars)`` and is symmetrized.
        """
        out = cls.constant(value, point, order)
        m = len(out.point)
        if gradient is not None and order >= 1:
            out.coeffs[..., 1 : 1 + m] = gradient
        if hessian is not None and order >= 2:
            hessian = np.asarray(hessian, dtype=complex)
            for a in range(m):
                for b in range(a, m):
                    alpha = [0] * m
                    alpha[a] += 1
                    alpha[b] += 1
                    pos = out.space.position[tuple(alpha)]
                    if a == b:
                        out.coeffs[..., pos] = hessian[..., a, a] / 2
                    else:
                        out.coeffs[..., pos] = (hessian[..., a, b] + hessian[..., b, a]) / 2
        return out

    def _new(self, coeffs, order=None):
        return Jet(coeffs, self.point, self.order if order is None else order)

    # -- array-like surface ---------------------------------------------

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    @property
    def ndim(self):
        return self.coeffs.ndim - 1

    @property
    def nvars(self):
        return len(self.point)

    @property
    def value(self):
        """Constant term(s): the function value(s) at the base point."""
        return self.coeffs[..., 0]

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis not in idx:
            idx = idx + (Ellipsis,)
        return self._new(self.coeffs[idx + (slice(None),)])

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def _axis(self, axis):
        return axis - 1 if axis < 0 else axis

    def sum(self, axis=None):
        if axis is None:
            return self._new(self.coeffs.reshape(-1, self.space.size).sum(axis=0))
        return self._new(self.coeffs.sum(axis=self._axis(axis)))

    def swapaxes(self, a, b):
        return self._new(np.swapaxes(self.coeffs, self._axis(a), self._axis(b)))

    @property
    def T(self):
        if self.ndim != 2:
            raise JetError("T is defined for 2-d jet arrays")
        return self.swapaxes(0, 1)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._new(self.coeffs.reshape(shape + (self.space.size,)))

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, point={self.point})"

    # -- arithmetic -----------------------------------------------------

    def _check(self, other):
        if other.order != self.order:
            raise JetError(f"jet order mismatch: {self.order} vs {other.order}")
        if other.point != self.point:
            raise JetError("jets are expanded at different base points")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._new(self.coeffs + other.coeffs)
        out = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(
            self.coeffs.shape, np.shape(other) + (1,))), dtype=complex)
        out[..., 0] += other
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return self._new(self.coeffs * np.asarray(other)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other.reciprocal())
        return self._new(self.coeffs / np.asarray(other)[..., None])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise JetError("jets support integer powers only")
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Jet.constant(np.ones(self.shape), self.point, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def conj(self):
        """Complex conjugate; valid coefficient-wise since the variables are real."""
        return self._new(self.coeffs.conj())

    @property
    def real(self):
        return self._new(self.coeffs.real)

    @property
    def imag(self):
        return self._new(self.coeffs.imag)

    # -- elementary functions ---------------------------------------------

    def _compose(self, derivs):
        # derivs[k] = f^{(k)}(value), k = 0..order
        h = self._new(self.coeffs.copy())
        h.coeffs[..., 0] = 0.0
        result = Jet.constant(derivs[0], self.point, self.order)
        power = None
        for k in range(1, self.order + 1):
            power = h if power is None else power * h
            result = result + power * (derivs[k] / math.factorial(k))
        return result

    def reciprocal(self):
        a0 = self.value
        if np.any(a0 == 0):
            raise ZeroDivisionError("jet reciprocal with vanishing constant term")
        derivs = [(-1) ** k * math.factorial(k) * a0 ** (-k - 1) for k in range(self.order + 1)]
        return self._compose(derivs)

    def exp(self):
        e = np.exp(self.value)
        return self._compose([e] * (self.order + 1))

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [s, c, -s, -c]
        return self._compose([cycle[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [c, -s, -c, s]
        return self._compose([cycle[k % 4] for k in range(self.order + 1)])

    def sqrt(self):
        a0 = self.value
        if np.any(a0 == 0):
            raise ZeroDivisionError("sqrt jet at a zero of its argument")
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * np.sqrt(a0) * a0 ** (-k))
            coef *= 0.5 - k
        return self._compose(derivs)

    # -- differentiation --------------------------------------------------

    def truncate(self, order):
        """Drop all coefficients of degree above ``order``."""
        if order > self.order:
            raise JetError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : self.space.count(order)], self.point, order)

    def derivative(self, var):
        """Partial derivative along coordinate ``var``; order drops by one."""
        if self.order < 1:
            raise JetError("order-0 jet carries no derivative information")
        sp = self.space
        c = self.coeffs[..., sp.deriv_source[var]] * sp.deriv_factor[var]
        return Jet(c, self.point, self.order - 1)

    def gradient(self):
        """All first partials; shape ``self.shape + (nvars,)``, order - 1."""
        if self.order < 1:
            raise JetError("order-0 jet carries no derivative information")
        sp = self.space
        c = self.coeffs[..., sp.deriv_source] * sp.deriv_factor
        return Jet(c, self.point, self.order - 1)

    def partial(self, multi_index):
        """Value of the partial derivative ``d^alpha f`` at the base point."""
        alpha = tuple(int(a) for a in multi_index)
        if len(alpha) != self.nvars or min(alpha) < 0:
            raise JetError(f"multi-index {alpha} does not match {self.nvars} variables")
        if sum(alpha) > self.order:
            raise JetError(f"|{alpha}| = {sum(alpha)} exceeds jet order {self.order}")
        k = self.space.position[alpha]
        return self.coeffs[..., k] * self.space.factorials[k]

    def __call__(self, x):
        """Evaluate the Taylor polynomial at the chart point ``x``."""
        dx = np.asarray(x, dtype=float) - np.asarray(self.point)
        monomials = np.prod(dx[None, :] ** self.space.indices, axis=1)
        return self.coeffs @ monomials


def common(*jets):
    """Truncate all jets to their smallest order."""
    k = min(j.order for j in jets)
    return tuple(j.truncate(k) for j in jets)


def jet_mul(a, b):
    """Truncated (broadcasting) product of two jets."""
    a._check(b)
    sp = a.space
    prod = a.coeffs[..., sp.pair_a] * b.coeffs[..., sp.pair_b]
    return a._new(np.add.reduceat(prod, sp.pair_starts, axis=-1))


def einsum(subscripts, a, b):
    """``np.einsum`` over the batch axes of two operands, jets or arrays.

    The subscripts describe batch axes only, e.g. ``"ij,jk->ik"``; the
    coefficient axis is handled internally.  At least one operand must be
    a :class:`Jet`.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a._check(b)
        sp = a.space
        prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.coeffs[..., sp.pair_a], b.coeffs[..., sp.pair_b])
        return a._new(np.add.reduceat(prod, sp.pair_starts, axis=-1))
    if isinstance(a, Jet):
        return a._new(np.einsum(f"{sa}Z,{sb}->{out}Z", a.coeffs, np.asarray(b)))
    if isinstance(b, Jet):
        return b._new(np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a), b.coeffs))
    raise JetError("einsum needs at least one Jet operand")


def inv(m, max_cond=None):
    """Inverse of a (batch of) square jet matrices, shape ``(..., r, r)``.

    Uses the Neumann series around the constant part, which terminates
    after ``order`` terms because the non-constant part is nilpotent.
    """
    m0 = m.value
    if max_cond is not None:
        cond = np.linalg.cond(m0)
        if np.any(cond > max_cond):
            raise np.linalg.LinAlgError(f"matrix condition number {np.max(cond):.3g} exceeds {max_cond:.3g}")
    m0_inv = np.linalg.inv(m0)
    nil = m - m0
    step = -einsum("...ij,...jk->...ik", m0_inv, nil)
    result = Jet.constant(m0_inv, m.point, m.order)
    term = result
    for _ in range(m.order):
        term = einsum("...ij,...jk->...ik", step, term)
        result = result + term
    return result


def stack(jets, axis=0):
    jets = list(jets)
    first = jets[0]
    for j in jets[1:]:
        first._check(j)
    ax = axis - 1 if axis < 0 else axis
    return first._new(np.stack([j.coeffs for j in jets], axis=ax))


def apply_vector_field(field, f):
    """Directional derivative ``sum_a field^a * d_a f``.

    ``field`` holds real-coordinate components on its last axis (length
    ``nvars``); its remaining axes broadcast against ``f.shape``.  The
    field is truncated to ``f.order - 1`` if needed; the result has order
    ``f.order - 1``.
    """
    if f.order < 1:
        raise JetError("cannot differentiate an order-0 jet")
    if field.shape[-1] != f.nvars:
        raise JetError(f"field has {field.shape[-1]} components, expected {f.nvars}")
    if field.order < f.order - 1:
        raise JetError(f"field order {field.order} < required {f.order - 1}")
    grad = f.gradient()
    return (field.truncate(f.order - 1) * grad).sum(axis=-1)


def embed(j, point, offset):
    """Pull ``j`` back along a coordinate projection.

    The result lives on the chart with base ``point``; ``j``'s variables
    become variables ``offset .. offset + j.nvars - 1`` of it and the
    other variables do not appear.
    """
    point = point if isinstance(point, tuple) else _as_point(point)
    if point[offset : offset + j.nvars] != j.point:
        raise JetError("embedded jet base point does not match the target point")
    src = j.space
    dst = jet_space(len(point), j.order)
    slots = np.empty(src.size, dtype=np.int64)
    for k, alpha in enumerate(src.indices):
        full = [0] * len(point)
        full[offset : offset + j.nvars] = alpha
        slots[k] = dst.position[tuple(full)]
    coeffs = np.zeros(j.shape + (dst.size,), dtype=complex)
    coeffs[..., slots] = j.coeffs
    return Jet(coeffs, point, j.order)
