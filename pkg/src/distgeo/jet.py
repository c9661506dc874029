"""Truncated Taylor jets (forward-mode AD up to second order).

A :class:`Jet` carries an array-valued quantity together with its first and
second derivatives along ``k`` seeded directions::

    value   shape S
    first   shape S + (k,)       d/du_a
    second  shape S + (k, k)     d^2/du_a du_b

A jet of order 0 is a plain value, order 1 drops ``second``. Arithmetic
truncates to the lowest order among operands, so quantities that consume a
derivative (``grad``) lower the order by one. With coordinate seeding
(``k = m`` unit directions) this is the same algebra as nested dual numbers
``x + e1 + e2 + e1 e2`` generalised to many directions at once; working on
whole arrays keeps the small tensor algebra vectorised.
"""

import math

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NotSPDError

__all__ = [
    "Jet", "seed", "value_of", "order_of", "grad", "einsum2", "stack",
    "solve_spd", "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh",
    "tanh", "power",
]

_INF = 10**9


def _e1(v):
    return v[..., None] if isinstance(v, np.ndarray) and v.ndim else v


def _e2(v):
    return v[..., None, None] if isinstance(v, np.ndarray) and v.ndim else v


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet:
    __slots__ = ("value", "first", "second")
    # numpy must hand mixed expressions back to Jet's reflected operators
    __array_ufunc__ = None

    def __init__(self, value, first=None, second=None):
        if first is not None:
            vs = np.shape(value)
            if first.shape[:-1] != vs:
                first = np.broadcast_to(first, vs + first.shape[-1:])
            if second is not None and second.shape[:-2] != vs:
                second = np.broadcast_to(second, vs + second.shape[-2:])
        elif second is not None:
            raise ValueError("second derivatives require first derivatives")
        self.value = value
        self.first = first
        self.second = second

    @property
    def order(self):
        if self.first is None:
            return 0
        return 1 if self.second is None else 2

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndirs(self):
        return None if self.first is None else self.first.shape[-1]

    def truncate(self, order):
        if order >= self.order:
            return self
        if order == 0:
            return Jet(self.value)
        return Jet(self.value, self.first)

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.value!r})"

    # -- array plumbing -------------------------------------------------
    def __getitem__(self, idx):
        if self.first is None:
            return Jet(self.value[idx])
        second = None if self.second is None else self.second[idx]
        return Jet(self.value[idx], self.first[idx], second)

    def __len__(self):
        return len(self.value)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def transpose(self, *axes):
        nd = np.ndim(self.value)
        axes = tuple(axes) if axes else tuple(reversed(range(nd)))
        value = np.transpose(self.value, axes)
        if self.first is None:
            return Jet(value)
        first = np.transpose(self.first, axes + (nd,))
        second = None
        if self.second is not None:
            second = np.transpose(self.second, axes + (nd, nd + 1))
        return Jet(value, first, second)

    @property
    def T(self):
        return self.transpose()

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        value = np.reshape(self.value, shape)
        shape = value.shape
        if self.first is None:
            return Jet(value)
        k = self.first.shape[-1]
        first = self.first.reshape(shape + (k,))
        second = None if self.second is None else self.second.reshape(shape + (k, k))
        return Jet(value, first, second)

    def sum(self, axis=0):
        value = np.sum(self.value, axis=axis)
        if self.first is None:
            return Jet(value)
        first = np.sum(self.first, axis=axis)
        second = None if self.second is None else np.sum(self.second, axis=axis)
        return Jet(value, first, second)

    # -- arithmetic -----------------------------------------------------
    def __neg__(self):
        return Jet(-self.value,
                   None if self.first is None else -self.first,
                   None if self.second is None else -self.second)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.first, self.second)
        o = min(self.order, other.order)
        value = self.value + other.value
        if o == 0:
            return Jet(value)
        first = self.first + other.first
        second = self.second + other.second if o == 2 else None
        return Jet(value, first, second)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.value - other, self.first, self.second)
        o = min(self.order, other.order)
        value = self.value - other.value
        if o == 0:
            return Jet(value)
        first = self.first - other.first
        second = self.second - other.second if o == 2 else None
        return Jet(value, first, second)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            value = self.value * other
            if self.first is None:
                return Jet(value)
            first = self.first * _e1(other)
            second = None if self.second is None else self.second * _e2(other)
            return Jet(value, first, second)
        o = min(self.order, other.order)
        a, b = self.value, other.value
        value = a * b
        if o == 0:
            return Jet(value)
        first = _e1(a) * other.first + _e1(b) * self.first
        second = None
        if o == 2:
            second = (_e2(a) * other.second + _e2(b) * self.second
                      + _outer(self.first, other.first)
                      + _outer(other.first, self.first))
        return Jet(value, first, second)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            value = self.value / other
            if self.first is None:
                return Jet(value)
            first = self.first / _e1(other)
            second = None if self.second is None else self.second / _e2(other)
            return Jet(value, first, second)
        o = min(self.order, other.order)
        q = self.value / other.value
        if o == 0:
            return Jet(q)
        b = other.value
        qf = (self.first - _e1(q) * other.first) / _e1(b)
        second = None
        if o == 2:
            second = (self.second - _e2(q) * other.second
                      - _outer(qf, other.first) - _outer(other.first, qf)) / _e2(b)
        return Jet(q, qf, second)

    def __rtruediv__(self, other):
        q = other / self.value
        if self.first is None:
            return Jet(q)
        b = self.value
        qf = -_e1(q) * self.first / _e1(b)
        second = None
        if self.second is not None:
            second = (-_e2(q) * self.second - _outer(qf, self.first)
                      - _outer(self.first, qf)) / _e2(b)
        return Jet(q, qf, second)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __rpow__(self, base):
        return power(base, self)


# -- construction and inspection -----------------------------------------

def seed(p, order=1, directions=None):
    """Coordinate jets for the point ``p``.

    ``directions`` is a (k, m) array of seed vectors; the default seeds the m
    coordinate axes so that ``first[..., i]`` is the partial derivative along
    coordinate i. Order 0 returns plain floats.
    """
    p = [float(c) for c in p]
    m = len(p)
    if order == 0:
        return p
    if directions is None:
        directions = np.eye(m)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    k = directions.shape[0]
    out = []
    for i, c in enumerate(p):
        first = directions[:, i].copy()
        second = np.zeros((k, k)) if order >= 2 else None
        out.append(Jet(c, first, second))
    return out


def value_of(x):
    return x.value if isinstance(x, Jet) else x


def order_of(x):
    return x.order if isinstance(x, Jet) else _INF


def grad(x):
    """Lower a jet by one order, exposing the derivatives as a trailing axis."""
    if not isinstance(x, Jet):
        raise ValueError("cannot differentiate a constant without jet context")
    if x.first is None:
        raise ValueError("jet of order 0 carries no derivatives")
    return Jet(x.first, x.second)


def _as_array(x):
    return x if isinstance(x, np.ndarray) else np.asarray(x, dtype=float)


def einsum2(spec, a, b):
    """Two-operand ``np.einsum`` with the product rule applied to jets.

    The letters ``Y`` and ``Z`` are reserved for derivative axes.
    """
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    av = a.value if ja else _as_array(a)
    bv = b.value if jb else _as_array(b)
    value = np.einsum(spec, av, bv)
    oa = a.order if ja else _INF
    ob = b.order if jb else _INF
    o = min(oa, ob)
    if o == 0 or o == _INF:
        return Jet(value) if o == 0 else value
    first = 0
    if jb:
        first = first + np.einsum(f"{sa},{sb}Y->{out}Y", av, b.first)
    if ja:
        first = first + np.einsum(f"{sa}Y,{sb}->{out}Y", a.first, bv)
    second = None
    if o >= 2:
        second = 0
        if jb:
            second = second + np.einsum(f"{sa},{sb}YZ->{out}YZ", av, b.second)
        if ja:
            second = second + np.einsum(f"{sa}YZ,{sb}->{out}YZ", a.second, bv)
        if ja and jb:
            cross = np.einsum(f"{sa}Y,{sb}Z->{out}YZ", a.first, b.first)
            second = second + cross + np.swapaxes(cross, -1, -2)
    return Jet(value, first, second)


def stack(items):
    """Stack floats, arrays and jets along a new leading axis."""
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return np.stack([_as_array(x) for x in items])
    o = min(j.order for j in jets)
    values = [_as_array(value_of(x)) for x in items]
    value = np.stack(values)
    if o == 0:
        return Jet(value)
    k = jets[0].ndirs
    firsts, seconds = [], []
    for x, v in zip(items, values):
        if isinstance(x, Jet):
            firsts.append(np.broadcast_to(x.first, v.shape + (k,)))
            if o == 2:
                seconds.append(np.broadcast_to(x.second, v.shape + (k, k)))
        else:
            firsts.append(np.zeros(v.shape + (k,)))
            if o == 2:
                seconds.append(np.zeros(v.shape + (k, k)))
    return Jet(value, np.stack(firsts), np.stack(seconds) if o == 2 else None)


def solve_spd(G, B):
    """Solve ``G X = B`` for a symmetric positive definite (jet) matrix ``G``.

    The value is factored once by Cholesky; derivatives follow from
    differentiating ``G X = B`` and reuse the same factor.
    """
    gv = value_of(G)
    try:
        factor = cho_factor(np.asarray(gv, dtype=float), lower=True)
    except LinAlgError as exc:
        raise NotSPDError("metric is not positive definite") from exc
    bv = _as_array(value_of(B))
    m = bv.shape[0]
    x0 = cho_solve(factor, bv.reshape(m, -1)).reshape(bv.shape)
    o = min(order_of(G), order_of(B))
    if o == _INF:
        return x0
    if o == 0:
        return Jet(x0)

    def solve(rhs):
        return cho_solve(factor, rhs.reshape(m, -1)).reshape(rhs.shape)

    gj, bj = isinstance(G, Jet), isinstance(B, Jet)
    k = (G if gj else B).ndirs
    rhs1 = B.first if bj else np.zeros(bv.shape + (k,))
    if gj:
        rhs1 = rhs1 - np.einsum("ijY,j...->i...Y", G.first, x0)
    x1 = solve(rhs1)
    if o == 1:
        return Jet(x0, x1)
    rhs2 = B.second if bj else np.zeros(bv.shape + (k, k))
    if gj:
        cross = np.einsum("ijY,j...Z->i...YZ", G.first, x1)
        rhs2 = (rhs2 - np.einsum("ijYZ,j...->i...YZ", G.second, x0)
                - cross - np.swapaxes(cross, -1, -2))
    x2 = solve(rhs2)
    return Jet(x0, x1, x2)


# -- elementary functions -------------------------------------------------

def _scalar(v):
    return isinstance(v, (float, int))


def _unary(x, f, d1, d2):
    """Apply ``f`` with derivatives ``d1``, ``d2`` given as callables of value."""
    if not isinstance(x, Jet):
        return f(x)
    v = x.value
    value = f(v)
    if x.first is None:
        return Jet(value)
    g1 = d1(v)
    first = _e1(g1) * x.first
    second = None
    if x.second is not None:
        second = _e2(g1) * x.second + _e2(d2(v)) * _outer(x.first, x.first)
    return Jet(value, first, second)


def _pick(mathf, npf):
    return lambda v: mathf(v) if _scalar(v) else npf(v)


_sin = _pick(math.sin, np.sin)
_cos = _pick(math.cos, np.cos)
_tan = _pick(math.tan, np.tan)
_exp = _pick(math.exp, np.exp)
_log = _pick(math.log, np.log)
_sqrt = _pick(math.sqrt, np.sqrt)
_sinh = _pick(math.sinh, np.sinh)
_cosh = _pick(math.cosh, np.cosh)
_tanh = _pick(math.tanh, np.tanh)


def sin(x):
    return _unary(x, _sin, _cos, lambda v: -_sin(v))


def cos(x):
    return _unary(x, _cos, lambda v: -_sin(v), lambda v: -_cos(v))


def tan(x):
    def d1(v):
        c = _cos(v)
        return 1.0 / (c * c)

    def d2(v):
        c = _cos(v)
        return 2.0 * _tan(v) / (c * c)

    return _unary(x, _tan, d1, d2)


def exp(x):
    return _unary(x, _exp, _exp, _exp)


def log(x):
    return _unary(x, _log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v))


def sqrt(x):
    return _unary(x, _sqrt, lambda v: 0.5 / _sqrt(v),
                  lambda v: -0.25 / (v * _sqrt(v)))


def sinh(x):
    return _unary(x, _sinh, _cosh, _sinh)


def cosh(x):
    return _unary(x, _cosh, _sinh, _cosh)


def tanh(x):
    def d1(v):
        t = _tanh(v)
        return 1.0 - t * t

    def d2(v):
        t = _tanh(v)
        return -2.0 * t * (1.0 - t * t)

    return _unary(x, _tanh, d1, d2)


def _ipow(v, e):
    return 1.0 if e == 0 else v ** e


def power(base, exponent):
    """``base ** exponent``; integral constant exponents are handled exactly."""
    if not isinstance(exponent, Jet) or (exponent.first is not None
                                         and not np.any(exponent.first)
                                         and (exponent.second is None
                                              or not np.any(exponent.second))):
        n = value_of(exponent)
        if not isinstance(base, Jet):
            return base ** n
        if float(n) == int(n):
            n = float(n)
            return _unary(base, lambda v: v ** n,
                          lambda v: n * _ipow(v, n - 1.0),
                          lambda v: n * (n - 1.0) * _ipow(v, n - 2.0))
        return _unary(base, lambda v: v ** n,
                      lambda v: n * v ** (n - 1.0),
                      lambda v: n * (n - 1.0) * v ** (n - 2.0))
    # variable exponent: exp(b log a) with the value computed directly
    out = exp(exponent * log(base))
    out.value = value_of(base) ** exponent.value
    return out
